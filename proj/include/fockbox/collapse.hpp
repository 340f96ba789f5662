#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fockbox/dynamics.hpp"
#include "fockbox/rng.hpp"
#include "fockbox/sectors.hpp"

namespace fockbox {

// Record of one stochastic sector selection. The post state is the chosen
// component renormalized; intra-sector structure (momentum, spin, particle
// number) is untouched.
struct CollapseEvent {
    double time_tag = 0.0;
    ContentSignature in_signature;
    ContentSignature chosen_signature;
    double sector_probability = 0.0;
    StateVector post_state;
    std::string rng_seed_path;
};

std::map<ContentSignature, double> sector_probabilities(const StateVector& out_state,
                                                        double eps_p = default_sector_epsilon);

// Samples a content sector with its Born weight and projects onto it. A
// single-sector input never consumes randomness: the event is deterministic
// and the state passes through unchanged.
CollapseEvent collapse_sample(RngStream& rng, const StateVector& out_state,
                              const ContentSignature& in_signature, double time_tag = 0.0,
                              double eps_p = default_sector_epsilon);

// Sector-to-sector transition probabilities aggregated from |S|^2.
struct GammaMatrix {
    std::vector<ContentSignature> row_labels;
    std::vector<ContentSignature> col_labels;
    Eigen::MatrixXd entries;  // right-stochastic

    double row_sum_defect() const;
};

// Weights over in-basis columns, normalized within each signature group.
using InWeights = std::map<std::size_t, double>;

InWeights uniform_sector_weights(const SMatrix& s);
InWeights uniform_sector_weights(const SMatrix& s, const ContentSignature& in_sector);
InWeights point_mass_weights(const SMatrix& s, const BasisState& in_state);

GammaMatrix gamma_from_s(const SMatrix& s, const InWeights& in_weights);
inline GammaMatrix gamma_from_s(const SMatrix& s) {
    return gamma_from_s(s, uniform_sector_weights(s));
}

// Square sector-to-sector Gamma over the listed signatures with uniform
// in-weights per sector. Faithful (rows sum to 1) when the listed sectors
// close under S, as the bundled toys do.
GammaMatrix gamma_restricted(const SMatrix& s, const std::vector<ContentSignature>& sectors);

// Plain-text table: '#'-prefixed label header lines, then whitespace-
// separated numeric rows.
void write_gamma_table(std::ostream& os, const GammaMatrix& g);
Eigen::MatrixXd read_numeric_table(std::istream& is);

enum class UnistochasticVerdict { yes, no, undecided };

struct UnistochasticResult {
    UnistochasticVerdict verdict = UnistochasticVerdict::undecided;
    std::optional<Eigen::MatrixXcd> witness;
    double witness_error = 0.0;  // max | |U_ij|^2 - G_ij | when a witness exists
    std::string reason;
};

// Decides whether G decomposes as G_ij = |U_ij|^2 for some unitary U.
// 2x2: analytic (every doubly stochastic 2x2 qualifies). 3x3: the row/column
// pair triangle conditions are checked first, then a numerical witness
// search. Larger sizes: numerical search only, "undecided" on failure.
// Non-square or non-stochastic input raises InputError.
UnistochasticResult is_unistochastic(const Eigen::MatrixXd& g, double tol = 1e-8);

std::string to_string(UnistochasticVerdict v);

}  // namespace fockbox
