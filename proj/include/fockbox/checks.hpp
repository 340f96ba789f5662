#pragma once

#include <string>
#include <vector>

namespace fockbox {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string details;
};

// Fixed-seed property batteries per module. Suites: algebra, dynamics,
// collapse, locality, measurement, all. Unknown suite -> InputError.
std::vector<CheckResult> run_check_suite(const std::string& suite);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace fockbox
