#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "fockbox/fock.hpp"
#include "fockbox/sectors.hpp"

namespace fockbox {

enum class LadderKind { create, annihilate };

struct LadderFactor {
    LadderKind kind = LadderKind::create;
    ModeIndex mode = 0;
};

// One monomial of the interaction Hamiltonian: coupling times an ordered
// product of ladder operators. Factors are written operator-product style,
// so the rightmost factor acts on the ket first.
struct InteractionTerm {
    cplx coupling;
    std::vector<LadderFactor> factors;
};

struct FreeTerm {
    ModeIndex mode = 0;
    double energy = 0.0;
};

inline constexpr int default_dimension_cap = 4096;
inline constexpr double default_switching_epsilon = 0.05;

// H = H0 + H1 on the truncated basis, plus the adiabatic switching scale
// used when extracting S-matrices (the coupling is damped by e^{-eps|t|}).
struct InteractionModel {
    RegistryPtr registry;
    std::vector<FreeTerm> free_terms;
    std::vector<InteractionTerm> interaction_terms;
    double switching_epsilon = default_switching_epsilon;
    int dimension_cap = default_dimension_cap;
    // S-matrix extraction controls: time step of the propagator and the
    // half-window schedule swept until entries stabilize. Schedule times are
    // snapped to the step grid so runs share their overlap exactly.
    double time_step = 0.05;
    std::vector<double> t_schedule{80.0, 96.0};
};

// Deterministic enumeration of the truncated occupation basis.
struct FockBasis {
    std::vector<BasisState> states;
    std::unordered_map<BasisState, std::size_t, BasisStateHash> index;

    std::size_t dim() const { return states.size(); }
    std::size_t index_of(const BasisState& b) const;
};

FockBasis enumerate_basis(const Registry& reg, int dimension_cap = default_dimension_cap);

struct Hamiltonians {
    Eigen::VectorXd h0_diag;  // H0 is diagonal in the occupation basis
    Eigen::MatrixXcd h1;
};

// Assembles H0 (diagonal, eigenvalue sum of mode energies times occupation)
// and H1 (operator strings applied to every basis column). Terms whose
// conjugate transpose is missing from the list are completed automatically;
// inconsistent couplings raise ModelError.
Hamiltonians build_hamiltonians(const InteractionModel& model, const FockBasis& basis);

// e^{-iHt} for Hermitian H, via self-adjoint eigendecomposition (unitary to
// machine precision). ModelError if H is not Hermitian.
Eigen::MatrixXcd expm_minus_i_hermitian(const Eigen::MatrixXcd& h, double t);

Eigen::VectorXcd evolve_exact(const Eigen::MatrixXcd& h, double t, const Eigen::VectorXcd& state);

// Interaction-picture propagator U(tau, tau0) = e^{iH0 tau} e^{-iH (tau-tau0)} e^{-iH0 tau0}.
Eigen::MatrixXcd interaction_picture_u(const Hamiltonians& hams, double tau0, double tau);

// Order-k Dyson approximant of interaction_picture_u, iterated midpoint rule
// on the time-ordered simplex. steps is the number of quadrature cells; the
// default resolves the order-1 term of the bundled toys to ~1e-8.
inline constexpr int default_dyson_steps = 4096;
Eigen::MatrixXcd dyson_truncated(const Hamiltonians& hams, int order, double tau0, double tau,
                                 int steps = default_dyson_steps);

struct SMatrix {
    Eigen::MatrixXcd entries;
    FockBasis basis;
    RegistryPtr registry;
    double unitarity_defect = 0.0;
    // max |entry change| over the last extension of the T schedule
    double stabilization_delta = 0.0;
    double time_horizon = 0.0;
};

double unitarity_defect(const Eigen::MatrixXcd& u);

// S ~ U(T, -T) with the coupling damped by e^{-eps|t|}; the half-window T is
// swept through model.t_schedule until entries move by less than
// stabilization_tolerance, else ConvergenceError.
inline constexpr double default_stabilization_tolerance = 1e-8;
SMatrix extract_s_matrix(const InteractionModel& model,
                         double stabilization_tolerance = default_stabilization_tolerance);

double transition_probability(const SMatrix& s, const BasisState& in, const BasisState& out);

// Helpers shared with the collapse/processes layers.
Eigen::VectorXcd to_dense(const StateVector& s, const FockBasis& basis);
StateVector from_dense(const Eigen::VectorXcd& v, const FockBasis& basis, const RegistryPtr& reg);
StateVector apply_s(const SMatrix& s, const StateVector& in);

}  // namespace fockbox
