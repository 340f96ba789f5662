#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>

#include "fockbox/dynamics.hpp"
#include "fockbox/rng.hpp"

namespace fockbox {

// Pair index convention for three distinguishable particles: entry 0 is the
// pair (2,3) (particle 1 spectating), entry 1 is (1,3), entry 2 is (1,2).
inline constexpr std::array<std::array<int, 2>, 3> pair_members{{{1, 2}, {0, 2}, {0, 1}}};

// Connected-component split of a 3-particle S block: the fully connected
// part, one 2-particle connected block per spectator, and the identity term.
// Reassembling all five terms reproduces the input exactly.
struct ClusterDecomposition {
    std::array<int, 3> dims{0, 0, 0};  // momentum cells per particle
    Eigen::MatrixXcd connected_3;
    std::array<Eigen::MatrixXcd, 3> connected_2;  // indexed per pair_members
    bool identity_term = true;

    Eigen::MatrixXcd reassemble() const;
};

// Decomposes a 3-particle block given the three 2-particle blocks. The
// 2-particle connected parts are S(2) minus the identity; the 3-connected
// part is what remains of S(3) after all spectator products and the triple
// identity are removed.
ClusterDecomposition cluster_decompose_3_blocks(const Eigen::MatrixXcd& s3,
                                                const std::array<Eigen::MatrixXcd, 3>& s2_pairs,
                                                const std::array<int, 3>& dims);

// Extracts the blocks from a full S-matrix: the three named species must
// each appear with exactly one particle; their momentum modes define the
// per-particle cells. The S must conserve each species' particle number on
// these sectors.
ClusterDecomposition cluster_decompose_3(const SMatrix& s,
                                         const std::array<std::string, 3>& particle_species);

// Zeroes the 3-connected block and every 2-connected block joining a
// space-like separated pair. separated is indexed per pair_members.
ClusterDecomposition spacelike_prune(ClusterDecomposition decomp,
                                     const std::array<bool, 3>& separated);

// Blocks as inspectable numeric tables: one '#'-labeled section per block,
// complex entries written as alternating "re im" columns.
void write_cluster_blocks(std::ostream& os, const ClusterDecomposition& decomp);

using Vec3i = std::array<int, 3>;

// Idealized detection frame of the appendix argument: particle 1 impacts
// with q1 != 0; detectors 2 and 3 are at rest, and particle 1 is at rest
// after the interaction.
struct MomentumOutcome {
    Vec3i q1{0, 0, 0};   // in-momentum of the impacting particle (nonzero)
    Vec3i q1p{0, 0, 0};  // out-momenta
    Vec3i q2p{0, 0, 0};
    Vec3i q3p{0, 0, 0};
};

struct ExclusivityVerdict {
    bool branch_13_feasible = false;  // particle 1 scattered off detector 3
    bool branch_12_feasible = false;  // particle 1 scattered off detector 2
    bool simultaneous_feasible = false;
};

// Evaluates the two momentum-conservation branches for the given outcome and
// whether both could hold at once (never, for q1 != 0). q1 = 0 is a
// degenerate frame and raises DomainError.
ExclusivityVerdict momentum_exclusivity_check(const MomentumOutcome& outcome);

struct SignalingReport {
    double p_m = 0.0;         // mutual-detection probability of the process
    double p_both_on = 0.0;   // per-detector detection frequency, both on
    double p_one_off = 0.0;   // detection frequency with the other detector off
    double z_statistic = 0.0;
    std::size_t trials = 0;
};

// The appendix's hypothetical process: mutual detection with probability
// p_M, single detection with probability p_S = (1-p_M)/2 per side. A
// positive p_M makes switching the far detector off observable (signaling).
SignalingReport no_signaling_mc(double p_m, std::size_t trials, RngStream root);

// The engine's own two-detector scenario: the impacting particle collapses
// onto exactly one detector sector, so p_M = 0 by momentum exclusivity and
// the far detector's state never shifts the local detection frequency.
SignalingReport engine_two_detector_mc(std::size_t trials, RngStream root);

}  // namespace fockbox
