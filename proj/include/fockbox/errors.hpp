#pragma once

#include <stdexcept>
#include <string>

namespace fockbox {

// Error taxonomy shared across the engine. The CLI maps these onto exit
// codes: input/config/scenario problems -> 2, capacity/convergence -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegistryError : Error { using Error::Error; };
struct BoundaryError : Error { using Error::Error; };
struct DegenerateStateError : Error { using Error::Error; };
struct ModelError : Error { using Error::Error; };
struct CapacityError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct AccuracyError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };

}  // namespace fockbox
