#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fockbox/dynamics.hpp"
#include "fockbox/measurement.hpp"
#include "fockbox/processes.hpp"

namespace fockbox {

using ojson = nlohmann::ordered_json;

struct ExecutionBlock {
    int trials = 10000;
    std::uint64_t seed = 1;
    std::string output_dir;
    double sector_epsilon = default_sector_epsilon;
    double stabilization_tolerance = default_stabilization_tolerance;
};

struct ProcessBlock {
    std::string type;

    // decay
    DecaySpec decay;
    std::vector<double> s_values;

    // pair_production / absorption
    std::optional<BasisState> in_state;

    // double_slit
    std::vector<cplx> profile;

    // epr / polarization (radians)
    double theta_a = 0.0;
    double theta_b = 0.0;
    double analyzer_angle = 0.0;
    double input_angle = 0.0;

    // trajectory
    int n_steps = 0;
    TrajectoryStepModel step_model;

    // no_signaling
    double p_m = 0.0;

    // dyson_check
    int dyson_order = 2;
    double dyson_tau0 = 0.0;
    double dyson_tau = 3.0;
    int dyson_steps = default_dyson_steps;
};

struct ScenarioConfig {
    ojson raw;
    std::string source_path;
    std::string source_bytes;
    RegistryPtr registry;  // null for processes that need no registry
    std::optional<InteractionModel> model;
    ProcessBlock process;
    ExecutionBlock execution;
};

// Parses and schema-validates a config. Unknown keys are rejected; messages
// carry the JSON path (and line/column for parse errors). Throws InputError.
ScenarioConfig parse_config(const std::string& text, const std::string& origin);
ScenarioConfig load_config(const std::string& path);

// All data outputs of one run, assembled in memory so error exits leave no
// partial files behind.
struct RunOutputs {
    // file name -> exact bytes; includes the per-trial CSV and summary.json
    std::vector<std::pair<std::string, std::string>> files;
    ojson summary;
};

RunOutputs run_scenario(const ScenarioConfig& config);

// Writes the outputs plus manifest.json into out_dir (created if missing).
// Returns the manifest.
ojson write_outputs(const RunOutputs& outputs, const ScenarioConfig& config,
                    const std::string& out_dir);

// FNV-1a 64-bit content hash, hex encoded; the manifest digest.
std::string fnv1a64_hex(const std::string& bytes);

// Addresses a numeric leaf by dotted path ("model.interaction_terms.0.coupling.0").
// Throws InputError on unknown paths.
void set_config_value(ojson& config, const std::string& dotted_path, double value);

}  // namespace fockbox
