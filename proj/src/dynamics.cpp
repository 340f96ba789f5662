#include "fockbox/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fockbox {

namespace {

constexpr double hermiticity_tolerance = 1e-12;

using cd = std::complex<double>;

}  // namespace

std::size_t FockBasis::index_of(const BasisState& b) const {
    auto it = index.find(b);
    if (it == index.end()) throw IndexError("basis state not in the enumerated basis");
    return it->second;
}

FockBasis enumerate_basis(const Registry& reg, int dimension_cap) {
    FockBasis basis;
    std::vector<std::pair<ModeIndex, std::uint32_t>> occ;
    const std::size_t n_modes = reg.mode_count();

    std::function<void(ModeIndex, int)> walk = [&](ModeIndex m, int total) {
        if (m == n_modes) {
            if (static_cast<int>(basis.states.size()) >= dimension_cap)
                throw CapacityError("truncated basis exceeds the dimension cap of " +
                                    std::to_string(dimension_cap));
            BasisState state{occ};
            basis.index.emplace(state, basis.states.size());
            basis.states.push_back(std::move(state));
            return;
        }
        const int cap = std::min(reg.mode_cap(m), reg.n_max() - total);
        for (int n = 0; n <= cap; ++n) {
            if (n > 0) occ.emplace_back(m, static_cast<std::uint32_t>(n));
            walk(m + 1, total + n);
            if (n > 0) occ.pop_back();
        }
    };
    walk(0, 0);
    return basis;
}

namespace {

// Canonical key of an operator string, for matching conjugate pairs.
std::string term_key(const std::vector<LadderFactor>& factors) {
    std::string key;
    for (const auto& f : factors) {
        key += f.kind == LadderKind::create ? 'c' : 'a';
        key += std::to_string(f.mode);
        key += ';';
    }
    return key;
}

std::vector<LadderFactor> conjugate_factors(const std::vector<LadderFactor>& factors) {
    std::vector<LadderFactor> out(factors.rbegin(), factors.rend());
    for (auto& f : out)
        f.kind = f.kind == LadderKind::create ? LadderKind::annihilate : LadderKind::create;
    return out;
}

// Applies an operator string (rightmost factor first) to a basis state.
StateVector apply_term(const RegistryPtr& reg, const InteractionTerm& term, const BasisState& b) {
    StateVector state(reg, b, term.coupling);
    for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it) {
        if (it->kind == LadderKind::create)
            state = create(state, it->mode);
        else
            state = annihilate(state, it->mode);
        if (state.support_size() == 0) break;
    }
    return state;
}

// Completes the term list under conjugate transpose. Self-adjoint strings
// must carry real couplings; a string whose conjugate is present must match
// its coupling, otherwise the list cannot define a Hermitian H1.
std::vector<InteractionTerm> hermitize_terms(const std::vector<InteractionTerm>& terms) {
    std::vector<InteractionTerm> out = terms;
    std::unordered_map<std::string, std::size_t> by_key;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::string key = term_key(out[i].factors);
        if (by_key.count(key))
            throw ModelError("duplicate interaction term; merge couplings instead");
        by_key.emplace(key, i);
    }
    const std::size_t original = out.size();
    for (std::size_t i = 0; i < original; ++i) {
        const auto conj_factors = conjugate_factors(out[i].factors);
        const std::string conj_key = term_key(conj_factors);
        auto it = by_key.find(conj_key);
        if (it == by_key.end()) {
            InteractionTerm hc{std::conj(out[i].coupling), conj_factors};
            by_key.emplace(conj_key, out.size());
            out.push_back(std::move(hc));
        } else if (it->second == i) {
            if (std::abs(out[i].coupling.imag()) > hermiticity_tolerance)
                throw ModelError("self-adjoint interaction term needs a real coupling");
        } else if (std::abs(out[it->second].coupling - std::conj(out[i].coupling)) >
                   hermiticity_tolerance) {
            throw ModelError("conjugate term pair has inconsistent couplings");
        }
    }
    return out;
}

}  // namespace

Hamiltonians build_hamiltonians(const InteractionModel& model, const FockBasis& basis) {
    const RegistryPtr& reg = model.registry;
    const std::size_t dim = basis.dim();

    for (const auto& term : model.free_terms)
        if (term.mode >= reg->mode_count())
            throw RegistryError("free term references unknown mode");
    for (const auto& term : model.interaction_terms)
        for (const auto& f : term.factors)
            if (f.mode >= reg->mode_count())
                throw RegistryError("interaction term references unknown mode");

    Hamiltonians hams;
    hams.h0_diag = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double e = 0.0;
        for (const auto& term : model.free_terms)
            e += term.energy * basis.states[i].occupation(term.mode);
        hams.h0_diag(i) = e;
    }

    const auto terms = hermitize_terms(model.interaction_terms);
    hams.h1 = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::size_t col = 0; col < dim; ++col) {
        for (const auto& term : terms) {
            StateVector out = apply_term(reg, term, basis.states[col]);
            for (const auto& [b, amp] : out.amplitudes()) {
                auto it = basis.index.find(b);
                // components leaving the enumerated basis were truncated away
                if (it != basis.index.end()) hams.h1(it->second, col) += amp;
            }
        }
    }

    const double defect = (hams.h1 - hams.h1.adjoint()).cwiseAbs().maxCoeff();
    if (defect > hermiticity_tolerance)
        throw ModelError("assembled H1 is not Hermitian (defect " + std::to_string(defect) + ")");
    return hams;
}

Eigen::MatrixXcd expm_minus_i_hermitian(const Eigen::MatrixXcd& h, double t) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > hermiticity_tolerance * scale * 100)
        throw ModelError("expm_minus_i_hermitian: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw ModelError("eigendecomposition failed");
    const Eigen::VectorXd& lambda = es.eigenvalues();
    Eigen::VectorXcd phases(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        phases(i) = std::exp(cd(0.0, -lambda(i) * t));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::VectorXcd evolve_exact(const Eigen::MatrixXcd& h, double t, const Eigen::VectorXcd& state) {
    return expm_minus_i_hermitian(h, t) * state;
}

namespace {

Eigen::VectorXcd h0_phases(const Eigen::VectorXd& h0_diag, double t) {
    Eigen::VectorXcd ph(h0_diag.size());
    for (Eigen::Index i = 0; i < h0_diag.size(); ++i) ph(i) = std::exp(cd(0.0, h0_diag(i) * t));
    return ph;
}

}  // namespace

Eigen::MatrixXcd interaction_picture_u(const Hamiltonians& hams, double tau0, double tau) {
    Eigen::MatrixXcd h = hams.h1;
    h += hams.h0_diag.cast<cd>().asDiagonal();
    Eigen::MatrixXcd middle = expm_minus_i_hermitian(h, tau - tau0);
    Eigen::VectorXcd left = h0_phases(hams.h0_diag, tau);     // e^{+iH0 tau}
    Eigen::VectorXcd right = h0_phases(hams.h0_diag, -tau0);  // e^{-iH0 tau0}
    return left.asDiagonal() * middle * right.asDiagonal();
}

Eigen::MatrixXcd dyson_truncated(const Hamiltonians& hams, int order, double tau0, double tau,
                                 int steps) {
    if (order < 0 || order > 4)
        throw InputError("dyson_truncated supports orders 0..4");
    if (steps < 2) throw AccuracyError("dyson_truncated: quadrature too coarse");

    const Eigen::Index dim = hams.h1.rows();
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(dim, dim);
    if (order == 0) return result;

    const double h = (tau - tau0) / steps;
    // J_n(t) = Int_{tau0}^{t} H1(s) J_{n-1}(s) ds with J_0 = I; the order-n
    // Dyson term is (-i)^n J_n(tau). Midpoint rule per cell, with a half-cell
    // correction for the inner integrals evaluated at midpoints.
    std::vector<Eigen::MatrixXcd> partial(order, Eigen::MatrixXcd::Zero(dim, dim));
    for (int j = 0; j < steps; ++j) {
        const double t_mid = tau0 + (j + 0.5) * h;
        // H1 in the interaction picture: (H1)_{rc} e^{i(E_r - E_c) t}
        Eigen::VectorXcd ph = h0_phases(hams.h0_diag, t_mid);
        Eigen::MatrixXcd a = ph.asDiagonal() * hams.h1 * ph.conjugate().asDiagonal();

        std::vector<Eigen::MatrixXcd> mids(order);
        for (int n = 0; n < order; ++n) {
            const Eigen::MatrixXcd& inner =
                n == 0 ? Eigen::MatrixXcd::Identity(dim, dim).eval() : mids[n - 1];
            mids[n] = partial[n] + 0.5 * h * a * inner;
        }
        partial[0] += h * a;
        for (int n = 1; n < order; ++n) partial[n] += h * a * mids[n - 1];
    }

    cd coeff(1.0, 0.0);
    for (int n = 1; n <= order; ++n) {
        coeff *= cd(0.0, -1.0);
        result += coeff * partial[n - 1];
    }
    return result;
}

double unitarity_defect(const Eigen::MatrixXcd& u) {
    const Eigen::Index dim = u.rows();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(dim, dim)).norm();
}

namespace {

// Propagates the interaction-picture equation i dU/dt = c(t) H1(t) U with a
// midpoint exponential step; every factor is exactly unitary. Relies on the
// eigendecomposition of H1, computed once.
struct DampedPropagator {
    const Hamiltonians& hams;
    double epsilon;
    Eigen::MatrixXcd evecs;
    Eigen::VectorXd evals;

    DampedPropagator(const Hamiltonians& h, double eps) : hams(h), epsilon(eps) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.h1);
        if (es.info() != Eigen::Success) throw ModelError("H1 eigendecomposition failed");
        evecs = es.eigenvectors();
        evals = es.eigenvalues();
    }

    Eigen::MatrixXcd propagate(double t_begin, double t_end, double dt) const {
        const Eigen::Index dim = hams.h1.rows();
        const int steps = static_cast<int>(std::llround((t_end - t_begin) / dt));
        Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
        Eigen::VectorXcd phase_step(dim);
        for (int j = 0; j < steps; ++j) {
            const double t_mid = t_begin + (j + 0.5) * dt;
            const double c = std::exp(-epsilon * std::abs(t_mid));
            for (Eigen::Index i = 0; i < dim; ++i)
                phase_step(i) = std::exp(cd(0.0, -c * dt * evals(i)));
            // e^{-i c dt H1(t)} = e^{iH0 t} V e^{-i c dt D} V^+ e^{-iH0 t}
            Eigen::VectorXcd ph = h0_phases(hams.h0_diag, t_mid);
            Eigen::MatrixXcd step =
                evecs * phase_step.asDiagonal() * evecs.adjoint();
            u = ph.asDiagonal() * step * ph.conjugate().asDiagonal() * u;
        }
        return u;
    }
};

}  // namespace

SMatrix extract_s_matrix(const InteractionModel& model, double stabilization_tolerance) {
    if (model.switching_epsilon <= 0.0)
        throw ModelError("extract_s_matrix requires switching_epsilon > 0");
    if (model.t_schedule.empty()) throw ModelError("extract_s_matrix: empty T schedule");

    FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
    Hamiltonians hams = build_hamiltonians(model, basis);
    DampedPropagator prop(hams, model.switching_epsilon);
    const double dt = model.time_step;

    // snap schedule entries to the step grid so successive runs share their
    // overlapping factors exactly
    std::vector<double> schedule;
    for (double t : model.t_schedule) {
        if (t <= 0.0) throw ModelError("T schedule entries must be positive");
        schedule.push_back(std::max(1.0, std::round(t / dt)) * dt);
    }
    std::sort(schedule.begin(), schedule.end());

    SMatrix out;
    out.basis = std::move(basis);
    out.registry = model.registry;
    Eigen::MatrixXcd prev;
    double delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double t_half = schedule[k];
        Eigen::MatrixXcd u = prop.propagate(-t_half, t_half, dt);
        if (k > 0) {
            delta = (u - prev).cwiseAbs().maxCoeff();
            if (delta < stabilization_tolerance) {
                out.entries = u;
                out.time_horizon = t_half;
                out.stabilization_delta = delta;
                out.unitarity_defect = unitarity_defect(u);
                return out;
            }
        }
        prev = u;
        out.entries = u;
        out.time_horizon = t_half;
    }
    if (schedule.size() == 1) {
        // single-entry schedule: no stabilization sweep requested
        out.stabilization_delta = 0.0;
        out.unitarity_defect = unitarity_defect(out.entries);
        return out;
    }
    throw ConvergenceError("S-matrix entries did not stabilize over the T schedule (last delta " +
                           std::to_string(delta) + "); extend t_schedule or increase epsilon");
}

double transition_probability(const SMatrix& s, const BasisState& in, const BasisState& out) {
    const std::size_t col = s.basis.index_of(in);
    const std::size_t row = s.basis.index_of(out);
    return std::norm(s.entries(row, col));
}

Eigen::VectorXcd to_dense(const StateVector& s, const FockBasis& basis) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.dim());
    for (const auto& [b, amp] : s.amplitudes()) v(basis.index_of(b)) = amp;
    return v;
}

StateVector from_dense(const Eigen::VectorXcd& v, const FockBasis& basis, const RegistryPtr& reg) {
    StateVector s(reg);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) >= StateVector::drop_tolerance) s.accumulate(basis.states[i], v(i));
    return s;
}

StateVector apply_s(const SMatrix& s, const StateVector& in) {
    Eigen::VectorXcd v = to_dense(in, s.basis);
    return from_dense((s.entries * v).eval(), s.basis, in.registry());
}

}  // namespace fockbox
