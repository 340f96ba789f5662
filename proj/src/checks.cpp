#include "fockbox/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fockbox/collapse.hpp"
#include "fockbox/dynamics.hpp"
#include "fockbox/locality.hpp"
#include "fockbox/measurement.hpp"
#include "fockbox/processes.hpp"
#include "fockbox/stats.hpp"

namespace fockbox {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

CheckResult check(const std::string& name, bool passed, const std::string& details) {
    return {name, passed, details};
}

// ---------------------------------------------------------------- algebra --

RegistryPtr random_registry(RngStream& rng) {
    Registry::Builder builder;
    const int n_species = 1 + static_cast<int>(rng.uniform01() * 3.0);
    builder.grid({1, {-1, 0, 0}, {1, 0, 0}});
    builder.truncation(2 + static_cast<int>(rng.uniform01() * 2.0));  // N_max in {2,3}
    int mode_budget = 8;
    for (int s = 0; s < n_species; ++s) {
        ParticleSpecies sp;
        sp.id = "s" + std::to_string(s);
        sp.statistics = rng.bernoulli(0.5) ? Statistics::fermion : Statistics::boson;
        sp.mass = rng.uniform01();
        sp.charge = static_cast<int>(rng.uniform01() * 3.0) - 1;
        sp.max_occupation = sp.statistics == Statistics::fermion
                                ? 1
                                : 1 + static_cast<int>(rng.uniform01() * 3.0);
        builder.species(sp);
    }
    for (int s = 0; s < n_species; ++s) {
        const int n_modes = std::min(mode_budget, 1 + static_cast<int>(rng.uniform01() * 3.0));
        for (int m = 0; m < n_modes; ++m)
            builder.mode("s" + std::to_string(s), {m - 1, 0, 0}, 0);
        mode_budget -= n_modes;
        if (mode_budget <= 0) break;
    }
    return builder.build();
}

// Random probe below the global truncation; with headroom, bosonic modes
// also stay below their per-mode caps so every ladder relation is exact.
BasisState random_interior_state(RngStream& rng, const Registry& reg, int max_total,
                                 bool mode_headroom = false) {
    std::vector<std::pair<ModeIndex, std::uint32_t>> occ;
    int total = 0;
    for (ModeIndex m = 0; m < reg.mode_count() && total < max_total; ++m) {
        if (!rng.bernoulli(0.45)) continue;
        int cap = reg.mode_cap(m);
        if (mode_headroom && !reg.mode_is_fermionic(m)) cap -= 1;
        const int room = std::min(cap, max_total - total);
        if (room < 1) continue;
        const int n = 1 + static_cast<int>(rng.uniform01() * room);
        const int count = std::min(n, room);
        occ.emplace_back(m, static_cast<std::uint32_t>(count));
        total += count;
    }
    return BasisState(std::move(occ));
}

std::vector<CheckResult> algebra_suite() {
    std::vector<CheckResult> results;
    RngStream rng(101);

    // canonical (anti)commutation relations on randomized registries
    double worst = 0.0;
    std::size_t registries = 0, max_dim = 0;
    for (int r = 0; r < 50; ++r) {
        RegistryPtr reg = random_registry(rng);
        ++registries;
        max_dim = std::max(max_dim, enumerate_basis(*reg, 1024).dim());
        std::vector<BasisState> probes{BasisState::vacuum()};
        for (int p = 0; p < 6; ++p)
            probes.push_back(random_interior_state(rng, *reg, reg->n_max() - 2, true));
        for (ModeIndex a = 0; a < reg->mode_count(); ++a)
            for (ModeIndex b = 0; b < reg->mode_count(); ++b)
                worst = std::max(worst, commutator_defect(reg, a, b, probes));
    }
    results.push_back(check("algebra/commutation_relations", worst < 1e-12,
                            "max defect " + fmt(worst) + " over " + std::to_string(registries) +
                                " registries (max dim " + std::to_string(max_dim) + ")"));

    // create/annihilate adjoint pair on interior states
    double worst_adj = 0.0;
    for (int r = 0; r < 20; ++r) {
        RegistryPtr reg = random_registry(rng);
        StateVector phi(reg), psi(reg);
        for (int k = 0; k < 4; ++k) {
            phi.accumulate(random_interior_state(rng, *reg, reg->n_max() - 1),
                           cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5));
            psi.accumulate(random_interior_state(rng, *reg, reg->n_max() - 1),
                           cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5));
        }
        phi.prune();
        psi.prune();
        if (phi.support_size() == 0 || psi.support_size() == 0) continue;
        for (ModeIndex m = 0; m < reg->mode_count(); ++m) {
            const cplx lhs = inner_product(phi, annihilate(psi, m));
            const cplx rhs = inner_product(create(phi, m), psi);
            worst_adj = std::max(worst_adj, std::abs(lhs - rhs));
        }
    }
    results.push_back(check("algebra/adjointness", worst_adj < 1e-12, "max |<phi|a psi> - <a+ phi|psi>| " + fmt(worst_adj)));

    // fermionic exchange antisymmetry on disjoint modes
    {
        Registry::Builder builder;
        builder.truncation(3)
            .species({.id = "f", .statistics = Statistics::fermion})
            .mode("f", {0, 0, 0}, 0)
            .mode("f", {0, 0, 0}, 1);
        RegistryPtr reg = builder.build();
        StateVector vac(reg, BasisState::vacuum());
        StateVector ab = create(create(vac, 0), 1);
        StateVector ba = create(create(vac, 1), 0);
        const double defect = norm(add(ab, ba));  // must cancel exactly
        results.push_back(check("algebra/fermion_sign_antisymmetry", defect < 1e-15,
                                "a+_1 a+_2 |0> + a+_2 a+_1 |0| norm " + fmt(defect)));
    }

    // canonicalization: occupation order never affects equality or norm
    {
        RngStream shuffle_rng(7);
        bool ok = true;
        RegistryPtr reg = random_registry(shuffle_rng);
        for (int k = 0; k < 50 && ok; ++k) {
            BasisState b = random_interior_state(shuffle_rng, *reg, reg->n_max());
            auto occ = b.occupations();
            std::reverse(occ.begin(), occ.end());
            BasisState reordered(std::move(occ));
            ok = reordered == b && signature(*reg, reordered) == signature(*reg, b);
        }
        results.push_back(check("algebra/canonicalization", ok, "reordered occupation maps compare equal"));
    }
    return results;
}

// --------------------------------------------------------------- dynamics --

std::vector<CheckResult> dynamics_suite() {
    std::vector<CheckResult> results;
    const std::vector<std::pair<std::string, InteractionModel>> models{
        {"decay", make_decay_model()},
        {"absorption", make_absorption_model()},
        {"pair_production", make_pair_production_model()}};

    // unitarity of exact and interaction-picture evolution, and of S columns
    double worst_u = 0.0, worst_s = 0.0;
    for (const auto& [name, model] : models) {
        FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
        Hamiltonians hams = build_hamiltonians(model, basis);
        Eigen::MatrixXcd h = hams.h1;
        h += hams.h0_diag.cast<cplx>().asDiagonal();
        worst_u = std::max(worst_u, unitarity_defect(expm_minus_i_hermitian(h, 1.7)));
        worst_u = std::max(worst_u, unitarity_defect(interaction_picture_u(hams, -2.0, 3.0)));
        SMatrix s = extract_s_matrix(model);
        for (Eigen::Index c = 0; c < s.entries.cols(); ++c)
            worst_s = std::max(worst_s, std::abs(s.entries.col(c).squaredNorm() - 1.0));
    }
    results.push_back(check("dynamics/unitarity", worst_u < 1e-10,
                            "max evolution unitarity defect " + fmt(worst_u)));
    results.push_back(check("dynamics/s_matrix_column_sums", worst_s < 1e-9,
                            "max |sum_b |S_ba|^2 - 1| " + fmt(worst_s)));

    // Dyson order-2 defect scales like g^3
    {
        std::vector<double> log_g, log_defect;
        for (double g : {0.02, 0.04, 0.08, 0.16}) {
            InteractionModel model = make_decay_model(g);
            FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
            Hamiltonians hams = build_hamiltonians(model, basis);
            const Eigen::MatrixXcd exact = interaction_picture_u(hams, 0.0, 3.0);
            const Eigen::MatrixXcd approx = dyson_truncated(hams, 2, 0.0, 3.0);
            log_g.push_back(std::log(g));
            log_defect.push_back(std::log((exact - approx).norm()));
        }
        const double slope = linear_slope(log_g, log_defect);
        results.push_back(check("dynamics/dyson_order2_slope", std::abs(slope - 3.0) < 0.3,
                                "log-log slope " + fmt(slope) + " (expect 3 +- 0.3)"));
    }

    // order-1 Dyson on the decay toy equals -i g (tau - tau0) on the
    // resonant connected pair
    {
        const double g = 0.07, tau = 2.5;
        InteractionModel model = make_decay_model(g);
        FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
        Hamiltonians hams = build_hamiltonians(model, basis);
        const Eigen::MatrixXcd u1 = dyson_truncated(hams, 1, 0.0, tau);
        const ModeIndex pu = model.registry->sole_mode("P_u");
        const ModeIndex ps = model.registry->sole_mode("P_s");
        const ModeIndex q = model.registry->sole_mode("Q");
        const std::size_t col = basis.index_of(BasisState({{pu, 1}}));
        const std::size_t row = basis.index_of(BasisState({{ps, 1}, {q, 1}}));
        const cplx expect(0.0, -g * tau);
        const double err = std::abs(u1(static_cast<Eigen::Index>(row),
                                       static_cast<Eigen::Index>(col)) - expect);
        results.push_back(check("dynamics/dyson_order1_value", err < 1e-7,
                                "entry error vs -i g tau: " + fmt(err)));
    }

    // composition law of the interaction picture
    {
        InteractionModel model = make_decay_model(0.3);
        FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
        Hamiltonians hams = build_hamiltonians(model, basis);
        RngStream rng(11);
        double worst = 0.0;
        for (int k = 0; k < 12; ++k) {
            const double t0 = 8.0 * rng.uniform01() - 4.0;
            const double t1 = 8.0 * rng.uniform01() - 4.0;
            const double t2 = 8.0 * rng.uniform01() - 4.0;
            const Eigen::MatrixXcd lhs =
                interaction_picture_u(hams, t1, t2) * interaction_picture_u(hams, t0, t1);
            const Eigen::MatrixXcd rhs = interaction_picture_u(hams, t0, t2);
            worst = std::max(worst, (lhs - rhs).norm());
        }
        results.push_back(check("dynamics/composition", worst < 1e-10,
                                "max ||U(t2,t1)U(t1,t0) - U(t2,t0)|| " + fmt(worst)));
    }

    // energy expectation is constant under exact evolution
    {
        InteractionModel model = make_absorption_model(0.2);
        FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
        Hamiltonians hams = build_hamiltonians(model, basis);
        Eigen::MatrixXcd h = hams.h1;
        h += hams.h0_diag.cast<cplx>().asDiagonal();
        RngStream rng(13);
        Eigen::VectorXcd psi(static_cast<Eigen::Index>(basis.dim()));
        for (Eigen::Index i = 0; i < psi.size(); ++i)
            psi(i) = cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
        psi.normalize();
        const double e0 = (psi.adjoint() * h * psi)(0).real();
        double worst = 0.0;
        for (double t : {0.7, 3.3, 11.0}) {
            Eigen::VectorXcd evolved = evolve_exact(h, t, psi);
            const double et = (evolved.adjoint() * h * evolved)(0).real();
            worst = std::max(worst, std::abs(et - e0) / std::max(1.0, std::abs(e0)));
        }
        results.push_back(check("dynamics/energy_conservation", worst < 1e-9,
                                "max relative <H> drift " + fmt(worst)));
    }

    // charge superselection: S never connects different total charge when
    // every interaction term conserves charge
    {
        double worst = 0.0;
        for (const auto& [name, model] : models) {
            SMatrix s = extract_s_matrix(model);
            for (std::size_t r = 0; r < s.basis.dim(); ++r)
                for (std::size_t c = 0; c < s.basis.dim(); ++c) {
                    if (total_charge(*model.registry, s.basis.states[r]) !=
                        total_charge(*model.registry, s.basis.states[c]))
                        worst = std::max(worst,
                                         std::abs(s.entries(static_cast<Eigen::Index>(r),
                                                            static_cast<Eigen::Index>(c))));
                }
        }
        results.push_back(check("dynamics/charge_superselection", worst < 1e-10,
                                "max |S| across charge sectors " + fmt(worst)));
    }
    return results;
}

// ---------------------------------------------------------------- collapse --

std::vector<CheckResult> collapse_suite() {
    std::vector<CheckResult> results;

    // Born frequencies on the pair-production out-state
    {
        InteractionModel model = make_pair_production_model();
        RngStream root(2024);
        FrequencyReport report = pair_production_scenario(model, root, 20000);
        double prob_sum = 0.0;
        for (const auto& e : report.entries) prob_sum += e.probability;
        results.push_back(check("collapse/born_frequencies", report.max_abs_sigma < 4.0,
                                "max deviation " + fmt(report.max_abs_sigma) + " sigma over " +
                                    std::to_string(report.trials) + " trials"));
        results.push_back(check("collapse/probability_sum", std::abs(prob_sum - 1.0) < 1e-9,
                                "sum of sector probabilities " + fmt(prob_sum)));
        results.push_back(check("collapse/single_sector_post_states",
                                report.cross_sector_post_states == 0,
                                std::to_string(report.cross_sector_post_states) +
                                    " cross-sector post states"));
    }

    // collapse idempotence: a post-collapse state is a fixed point
    {
        RegistryPtr reg = make_decay_registry();
        const ModeIndex pu = reg->sole_mode("P_u");
        const ModeIndex ps = reg->sole_mode("P_s");
        const ModeIndex q = reg->sole_mode("Q");
        StateVector s(reg);
        s.accumulate(BasisState({{pu, 1}}), cplx(0.6, 0.0));
        s.accumulate(BasisState({{ps, 1}, {q, 1}}), cplx(0.0, 0.8));
        RngStream rng(5);
        CollapseEvent first = collapse_sample(rng, s, signature(*reg, BasisState({{pu, 1}})));
        CollapseEvent second = collapse_sample(rng, first.post_state, first.chosen_signature);
        const double diff =
            norm(add(second.post_state, scale(first.post_state, cplx(-1.0, 0.0))));
        const bool ok = second.chosen_signature == first.chosen_signature && diff < 1e-15 &&
                        second.sector_probability == 1.0;
        results.push_back(check("collapse/idempotence", ok,
                                "second collapse deterministic, post-state drift " + fmt(diff)));
    }

    // Gamma of a unitary S is right-stochastic
    {
        InteractionModel model = make_pair_production_model();
        SMatrix s = extract_s_matrix(model);
        GammaMatrix g = gamma_from_s(s);
        results.push_back(check("collapse/gamma_row_sums", g.row_sum_defect() < 1e-9,
                                "max row-sum defect " + fmt(g.row_sum_defect())));
    }

    // unistochasticity: 2x2 analytic family and the infeasible 3x3 circulant
    {
        RngStream rng(77);
        bool ok = true;
        double worst_err = 0.0;
        for (int k = 0; k < 100 && ok; ++k) {
            const double p = rng.uniform01();
            Eigen::MatrixXd g(2, 2);
            g << p, 1.0 - p, 1.0 - p, p;
            UnistochasticResult res = is_unistochastic(g, 1e-8);
            ok = res.verdict == UnistochasticVerdict::yes && res.witness.has_value() &&
                 res.witness_error < 1e-8 &&
                 unitarity_defect(*res.witness) < 1e-10;
            worst_err = std::max(worst_err, res.witness_error);
        }
        results.push_back(check("collapse/unistochastic_2x2", ok,
                                "100 random doubly stochastic 2x2, worst witness error " +
                                    fmt(worst_err)));

        Eigen::MatrixXd circulant(3, 3);
        circulant << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
        UnistochasticResult res = is_unistochastic(circulant, 1e-8);
        results.push_back(check("collapse/unistochastic_circulant_rejected",
                                res.verdict == UnistochasticVerdict::no, res.reason));

        // Born-aggregated 3x3 from the bundled pair model must carry a witness
        InteractionModel model = make_pair_production_model();
        SMatrix s = extract_s_matrix(model);
        GammaMatrix g3 = gamma_restricted(
            s, {ContentSignature({"gamma"}), ContentSignature({"e", "e+"}),
                ContentSignature({"mu", "mu_c"})});
        // one-dimensional sectors make the aggregated Gamma exactly |U|^2, so
        // the checker must find a witness here
        UnistochasticResult res3 = is_unistochastic(g3.entries, 1e-8);
        results.push_back(check(
            "collapse/unistochastic_witness_verified",
            res3.verdict == UnistochasticVerdict::yes && res3.witness &&
                res3.witness_error < 1e-8,
            "verdict " + to_string(res3.verdict) + ", witness error " + fmt(res3.witness_error)));
    }
    return results;
}

// ---------------------------------------------------------------- locality --

std::vector<CheckResult> locality_suite() {
    std::vector<CheckResult> results;
    RngStream rng(303);

    auto random_unitary = [&rng](int n) {
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
        Eigen::MatrixXcd q = qr.householderQ();
        return q;
    };

    // cluster reassembly on random 3-body unitaries
    {
        double worst = 0.0;
        for (const auto& dims : std::vector<std::array<int, 3>>{{2, 2, 2}, {3, 2, 2}, {2, 3, 2}}) {
            for (int k = 0; k < 6; ++k) {
                const int total = dims[0] * dims[1] * dims[2];
                std::array<Eigen::MatrixXcd, 3> pair_blocks;
                for (int pair = 0; pair < 3; ++pair) {
                    const auto& members = pair_members[static_cast<std::size_t>(pair)];
                    pair_blocks[static_cast<std::size_t>(pair)] =
                        random_unitary(dims[members[0]] * dims[members[1]]);
                }
                Eigen::MatrixXcd s3 = random_unitary(total);
                ClusterDecomposition d = cluster_decompose_3_blocks(s3, pair_blocks, dims);
                worst = std::max(worst, (d.reassemble() - s3).cwiseAbs().maxCoeff());
            }
        }
        results.push_back(check("locality/cluster_reassembly", worst < 1e-10,
                                "max reassembly defect " + fmt(worst)));
    }

    // spectator-only construction: V on (1,3), identity elsewhere
    {
        const std::array<int, 3> dims{2, 2, 2};
        Eigen::MatrixXcd v = random_unitary(4);
        std::array<Eigen::MatrixXcd, 3> pair_blocks{
            Eigen::MatrixXcd::Identity(4, 4), v, Eigen::MatrixXcd::Identity(4, 4)};
        // S(3) = V_{13} tensored with identity on particle 2
        Eigen::MatrixXcd s3 = Eigen::MatrixXcd::Zero(8, 8);
        for (int i1 = 0; i1 < 2; ++i1)
            for (int i3 = 0; i3 < 2; ++i3)
                for (int j1 = 0; j1 < 2; ++j1)
                    for (int j3 = 0; j3 < 2; ++j3)
                        for (int i2 = 0; i2 < 2; ++i2)
                            s3((i1 * 2 + i2) * 2 + i3, (j1 * 2 + i2) * 2 + j3) +=
                                v(i1 * 2 + i3, j1 * 2 + j3);
        ClusterDecomposition d = cluster_decompose_3_blocks(s3, pair_blocks, dims);
        const double c3 = d.connected_3.cwiseAbs().maxCoeff();
        const double c23 = d.connected_2[0].cwiseAbs().maxCoeff();
        const double c12 = d.connected_2[2].cwiseAbs().maxCoeff();
        const bool ok = c3 < 1e-12 && c23 < 1e-12 && c12 < 1e-12 &&
                        (d.reassemble() - s3).cwiseAbs().maxCoeff() < 1e-12;
        results.push_back(check("locality/spectator_term_isolated", ok,
                                "3-connected " + fmt(c3) + ", stray pair blocks " +
                                    fmt(std::max(c23, c12))));
    }

    // spacelike_prune removes the right terms and is idempotent
    {
        const std::array<int, 3> dims{2, 2, 2};
        std::array<Eigen::MatrixXcd, 3> pair_blocks{random_unitary(4), random_unitary(4),
                                                    random_unitary(4)};
        ClusterDecomposition d =
            cluster_decompose_3_blocks(random_unitary(8), pair_blocks, dims);
        ClusterDecomposition pruned = spacelike_prune(d, {true, false, false});
        ClusterDecomposition twice = spacelike_prune(pruned, {true, false, false});
        const bool zeroed = pruned.connected_2[0].cwiseAbs().maxCoeff() == 0.0 &&
                            pruned.connected_3.cwiseAbs().maxCoeff() == 0.0;
        const bool kept = pruned.connected_2[1].cwiseAbs().maxCoeff() > 0.0 &&
                          pruned.connected_2[2].cwiseAbs().maxCoeff() > 0.0 &&
                          pruned.identity_term;
        const bool idem =
            (twice.reassemble() - pruned.reassemble()).cwiseAbs().maxCoeff() == 0.0;
        results.push_back(check("locality/spacelike_prune", zeroed && kept && idem,
                                "separated pair and 3-connected zeroed, prune idempotent"));
    }

    // momentum exclusivity across the whole grid of nonzero q1
    {
        bool ok = true;
        int tested = 0;
        for (int x = -2; x <= 2 && ok; ++x)
            for (int y = -2; y <= 2 && ok; ++y)
                for (int z = -2; z <= 2 && ok; ++z) {
                    if (x == 0 && y == 0 && z == 0) continue;
                    ++tested;
                    const Vec3i q1{x, y, z};
                    // the two single-branch outcomes are feasible...
                    ExclusivityVerdict v13 =
                        momentum_exclusivity_check({q1, {0, 0, 0}, {0, 0, 0}, q1});
                    ExclusivityVerdict v12 =
                        momentum_exclusivity_check({q1, {0, 0, 0}, q1, {0, 0, 0}});
                    ok = v13.branch_13_feasible && !v13.branch_12_feasible &&
                         !v13.simultaneous_feasible && v12.branch_12_feasible &&
                         !v12.branch_13_feasible && !v12.simultaneous_feasible;
                }
        results.push_back(check("locality/momentum_exclusivity", ok,
                                std::to_string(tested) + " grid momenta, no simultaneous branch"));
    }

    // no-signaling: the engine's own two-detector collapse vs the
    // hypothetical mutual-detection process
    {
        SignalingReport engine = engine_two_detector_mc(100000, RngStream(404));
        results.push_back(check("locality/engine_no_signaling", std::abs(engine.z_statistic) < 3.0,
                                "z = " + fmt(engine.z_statistic) + ", p(both on) " +
                                    fmt(engine.p_both_on) + ", p(one off) " +
                                    fmt(engine.p_one_off)));
        SignalingReport mutual = no_signaling_mc(0.2, 100000, RngStream(405));
        results.push_back(check("locality/hypothetical_signaling_flagged",
                                mutual.z_statistic > 5.0,
                                "z = " + fmt(mutual.z_statistic) + " for p_M = 0.2"));
        SignalingReport null_process = no_signaling_mc(0.0, 100000, RngStream(406));
        results.push_back(check("locality/hypothetical_null_process",
                                std::abs(null_process.z_statistic) < 3.0,
                                "z = " + fmt(null_process.z_statistic) + " for p_M = 0"));
    }
    return results;
}

// -------------------------------------------------------------- measurement --

std::vector<CheckResult> measurement_suite() {
    std::vector<CheckResult> results;

    // polarization Born weights across the angle battery
    {
        bool ok = true;
        double worst = 0.0;
        const int trials = 10000;
        for (double deg : {0.0, 22.5, 45.0, 67.5, 90.0}) {
            const double theta = deg * M_PI / 180.0;
            MeasurementScenario scenario = make_polarization_scenario(theta);
            StateVector in = probe_state(scenario, {1.0, 0.0});
            RngStream root(811);
            std::size_t parallel = 0;
            for (int k = 0; k < trials; ++k) {
                RngStream stream = root.substream(static_cast<std::uint64_t>(k));
                MeasurementRecord record = run_measurement(scenario, in, stream);
                if (record.fired_region == "parallel") ++parallel;
            }
            const double p = std::cos(theta) * std::cos(theta);
            const double freq = static_cast<double>(parallel) / trials;
            const double sigma = std::sqrt(std::max(p * (1.0 - p) / trials, 1e-12));
            const double dev = std::abs(freq - p) / sigma;
            if (p > 1e-9 && p < 1.0 - 1e-9) worst = std::max(worst, dev);
            // eigenstate inputs must be deterministic
            if (p > 1.0 - 1e-9 && parallel != trials) ok = false;
            if (p < 1e-9 && parallel != 0) ok = false;
        }
        results.push_back(check("measurement/polarization_born", ok && worst < 3.0,
                                "max deviation " + fmt(worst) + " sigma; eigenstates deterministic"));
    }

    // EPR: equal angles correlate perfectly run by run; marginals ignore the
    // far angle
    {
        EprReport equal = epr_scenario(0.4, 0.4, RngStream(821), 4000);
        results.push_back(check("measurement/epr_equal_angle",
                                equal.correlation == 1.0 && equal.min_run_product == 1.0,
                                "correlation " + fmt(equal.correlation)));
        double worst = 0.0;
        for (double far : {0.0, M_PI / 6, M_PI / 3}) {
            EprReport r = epr_scenario(0.4, far, RngStream(823), 20000);
            const double sigma = std::sqrt(0.25 / static_cast<double>(r.trials));
            worst = std::max(worst, std::abs(r.marginal_a_plus - 0.5) / sigma);
        }
        results.push_back(check("measurement/epr_marginal_independence", worst < 3.0,
                                "max |marginal - 1/2| " + fmt(worst) + " sigma across far angles"));
    }

    // double slit: interference fringes from the configured profile
    {
        std::vector<cplx> profile;
        double total = 0.0;
        const int cells = 16;
        for (int i = 0; i < cells; ++i) {
            const double x = (i + 0.5) / cells - 0.5;
            const cplx a = cplx(std::cos(2.0 * M_PI * 3.0 * x), 0.0) *
                           std::exp(-x * x / (2.0 * 0.09));
            profile.push_back(a);
            total += std::norm(a);
        }
        for (cplx& a : profile) a /= std::sqrt(total);
        DoubleSlitResult result = double_slit_scenario(profile, RngStream(831), 20000);
        double worst = 0.0;
        for (int i = 0; i < cells; ++i) {
            const double p = std::norm(profile[static_cast<std::size_t>(i)]);
            const double freq =
                static_cast<double>(result.histogram[static_cast<std::size_t>(i)]) / 20000.0;
            const double sigma = std::sqrt(std::max(p * (1.0 - p) / 20000.0, 1e-12));
            worst = std::max(worst, std::abs(freq - p) / sigma);
        }
        results.push_back(check("measurement/double_slit_histogram", worst < 3.0,
                                "max cell deviation " + fmt(worst) + " sigma"));
    }

    // trajectory: drift inferred from detections matches the configured one
    {
        TrajectoryStepModel step;
        step.displacement_amplitudes = {{1, std::sqrt(0.8)}, {0, std::sqrt(0.15)},
                                        {-1, std::sqrt(0.05)}};
        RngStream rng(841);
        TrajectoryResult result = trajectory_scenario(400, step, rng);
        bool single_sector = true;
        for (const auto& event : result.events)
            if (is_cross_sector_superposition(event.post_state)) single_sector = false;
        const double err = std::abs(result.inferred_drift - result.expected_drift);
        const double sigma = std::sqrt(0.3 / 400.0);  // loose variance bound per step mean
        results.push_back(check("measurement/trajectory_drift",
                                single_sector && err < 4.0 * sigma,
                                "inferred " + fmt(result.inferred_drift) + " vs expected " +
                                    fmt(result.expected_drift)));
    }

    // the coupling stage alone never changes any signature
    {
        MeasurementScenario scenario = make_polarization_scenario(0.7);
        StateVector in = probe_state(scenario, {std::sqrt(0.3), std::sqrt(0.7)});
        // apply only the unitary stage by projecting through the scenario's
        // coupling on the probe modes
        Eigen::Vector2cd amps(std::sqrt(0.3), std::sqrt(0.7));
        Eigen::Vector2cd coupled = scenario.coupling * amps;
        StateVector after(scenario.registry);
        for (int i = 0; i < 2; ++i)
            after.accumulate(BasisState({{scenario.probe_modes[static_cast<std::size_t>(i)], 1}}),
                             coupled(i));
        after.prune();
        const bool ok = !is_cross_sector_superposition(after) &&
                        sector_decompose(after).begin()->first ==
                            sector_decompose(in).begin()->first;
        results.push_back(check("measurement/coupling_preserves_content", ok,
                                "unitary stage keeps the probe signature"));
    }

    // Born distribution of reported eigenvalues, chi-square over a seed battery
    {
        MeasurementScenario scenario = make_polarization_scenario(M_PI / 5);
        StateVector in = probe_state(scenario, {1.0, 0.0});
        const double p = std::pow(std::cos(M_PI / 5), 2.0);
        bool ok = true;
        double worst_p = 1.0;
        for (std::uint64_t seed : {901u, 902u, 903u, 904u, 905u}) {
            RngStream root(seed);
            const int trials = 4000;
            std::size_t parallel = 0;
            for (int k = 0; k < trials; ++k) {
                RngStream stream = root.substream(static_cast<std::uint64_t>(k));
                if (run_measurement(scenario, in, stream).fired_region == "parallel") ++parallel;
            }
            const double expect1 = p * trials, expect2 = (1.0 - p) * trials;
            const double o1 = static_cast<double>(parallel);
            const double o2 = static_cast<double>(trials) - o1;
            const double stat = (o1 - expect1) * (o1 - expect1) / expect1 +
                                (o2 - expect2) * (o2 - expect2) / expect2;
            const double pv = chi_square_p_value(stat, 1);
            worst_p = std::min(worst_p, pv);
            if (pv < 1e-3) ok = false;
        }
        results.push_back(check("measurement/born_chi_square", ok,
                                "min chi-square p-value " + fmt(worst_p) + " over 5 seeds"));
    }
    return results;
}

}  // namespace

std::vector<CheckResult> run_check_suite(const std::string& suite) {
    if (suite == "algebra") return algebra_suite();
    if (suite == "dynamics") return dynamics_suite();
    if (suite == "collapse") return collapse_suite();
    if (suite == "locality") return locality_suite();
    if (suite == "measurement") return measurement_suite();
    if (suite == "all") {
        std::vector<CheckResult> all;
        for (const char* name : {"algebra", "dynamics", "collapse", "locality", "measurement"}) {
            auto part = run_check_suite(name);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw InputError("unknown check suite: " + suite +
                     " (expected algebra, dynamics, collapse, locality, measurement or all)");
}

bool all_passed(const std::vector<CheckResult>& results) {
    return std::all_of(results.begin(), results.end(),
                       [](const CheckResult& r) { return r.passed; });
}

}  // namespace fockbox
