// Acceptance gate: every release-level property at its stated tolerance,
// one PASS/FAIL line per criterion. Exit status is the number of failures.
//
//  1 algebra        (anti)commutation defects < 1e-12, 50+ random registries, < 60 s
//  2 unitarity      ||U+U - I|| < 1e-10; S column sums 1 +- 1e-9, < 120 s
//  3 dyson scaling  order-2 defect slope 3 +- 0.3 over g in {0.02..0.16}
//  4 composition    ||U(t2,t1)U(t1,t0) - U(t2,t0)|| < 1e-10 on random triples
//  5 collapse stats sector frequencies within 4 sigma over 1e5 trials x 10 seeds
//  6 decay law      KS p > 0.01 at 1e5 trials; survival curve; memorylessness < 3 sigma
//  7 unistochastic  2x2 witnesses < 1e-8; circulant rejected; witnesses verified
//  8 locality       reassembly < 1e-10; exclusivity on the grid; z < 3 engine, z > 5 contrast
//  9 measurement    one detector per run; cos^2 battery; EPR exact; double slit 3 sigma
// 10 determinism    byte-identical CSV/JSON for identical (config, seed)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "fockbox/checks.hpp"
#include "fockbox/collapse.hpp"
#include "fockbox/dynamics.hpp"
#include "fockbox/locality.hpp"
#include "fockbox/measurement.hpp"
#include "fockbox/processes.hpp"
#include "fockbox/scenario.hpp"
#include "fockbox/stats.hpp"

using namespace fockbox;
namespace fs = std::filesystem;

namespace {

#ifndef FOCKBOX_CLI_PATH
#define FOCKBOX_CLI_PATH ""
#endif
#ifndef FOCKBOX_CONFIG_DIR
#define FOCKBOX_CONFIG_DIR ""
#endif

int failures = 0;

void report(int criterion, const std::string& name, bool passed, const std::string& details) {
    std::printf("%s  %2d %-14s %s\n", passed ? "PASS" : "FAIL", criterion, name.c_str(),
                details.c_str());
    std::fflush(stdout);
    if (!passed) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// --- criterion 1: algebra ---------------------------------------------------

RegistryPtr random_registry(RngStream& rng) {
    Registry::Builder builder;
    builder.grid({1, {-2, 0, 0}, {2, 0, 0}});
    builder.truncation(2 + static_cast<int>(rng.uniform01() * 2.0));
    const int n_species = 1 + static_cast<int>(rng.uniform01() * 3.0);
    for (int s = 0; s < n_species; ++s) {
        ParticleSpecies sp;
        sp.id = "s" + std::to_string(s);
        sp.statistics = rng.bernoulli(0.5) ? Statistics::fermion : Statistics::boson;
        sp.mass = rng.uniform01();
        sp.charge = static_cast<int>(rng.uniform01() * 3.0) - 1;
        sp.max_occupation =
            sp.statistics == Statistics::fermion ? 1 : 1 + static_cast<int>(rng.uniform01() * 3.0);
        builder.species(sp);
    }
    int budget = 10;
    for (int s = 0; s < n_species && budget > 0; ++s) {
        const int n_modes = std::min(budget, 1 + static_cast<int>(rng.uniform01() * 4.0));
        for (int m = 0; m < n_modes; ++m)
            builder.mode("s" + std::to_string(s), {m - 2, 0, 0}, 0);
        budget -= n_modes;
    }
    return builder.build();
}

BasisState random_interior_probe(RngStream& rng, const Registry& reg) {
    std::vector<std::pair<ModeIndex, std::uint32_t>> occ;
    int total = 0;
    const int max_total = reg.n_max() - 2;
    for (ModeIndex m = 0; m < reg.mode_count() && total < max_total; ++m) {
        if (!rng.bernoulli(0.45)) continue;
        int cap = reg.mode_cap(m);
        if (!reg.mode_is_fermionic(m)) cap -= 1;  // keep ladder relations exact
        const int room = std::min(cap, max_total - total);
        if (room < 1) continue;
        const int count = std::min(1 + static_cast<int>(rng.uniform01() * room), room);
        occ.emplace_back(m, static_cast<std::uint32_t>(count));
        total += count;
    }
    return BasisState(std::move(occ));
}

void criterion_1_algebra() {
    const auto start = std::chrono::steady_clock::now();
    RngStream rng(20250801);
    double worst = 0.0;
    std::size_t max_dim = 0;
    const int registries = 60;
    for (int r = 0; r < registries; ++r) {
        RegistryPtr reg = random_registry(rng);
        max_dim = std::max(max_dim, enumerate_basis(*reg, 1024).dim());
        std::vector<BasisState> probes{BasisState::vacuum()};
        for (int p = 0; p < 8; ++p) probes.push_back(random_interior_probe(rng, *reg));
        for (ModeIndex a = 0; a < reg->mode_count(); ++a)
            for (ModeIndex b = 0; b < reg->mode_count(); ++b)
                worst = std::max(worst, commutator_defect(reg, a, b, probes));
    }
    const double elapsed = seconds_since(start);
    report(1, "algebra", worst < 1e-12 && elapsed < 60.0,
           "max (anti)commutator defect " + fmt(worst) + " over " + std::to_string(registries) +
               " registries (max dim " + std::to_string(max_dim) + "), " + fmt(elapsed) + " s");
}

// --- criteria 2-4: dynamics --------------------------------------------------

void criterion_2_unitarity() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::pair<std::string, InteractionModel>> models{
        {"decay", make_decay_model()},
        {"absorption", make_absorption_model()},
        {"pair_production", make_pair_production_model()}};
    double worst_u = 0.0, worst_col = 0.0;
    for (const auto& [name, model] : models) {
        FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
        Hamiltonians hams = build_hamiltonians(model, basis);
        Eigen::MatrixXcd h = hams.h1;
        h += hams.h0_diag.cast<cplx>().asDiagonal();
        for (double t : {0.5, 3.0, 11.0})
            worst_u = std::max(worst_u, unitarity_defect(expm_minus_i_hermitian(h, t)));
        for (const auto& [t0, t1] : std::vector<std::pair<double, double>>{{-2.0, 3.0}, {0.0, 7.5}})
            worst_u = std::max(worst_u, unitarity_defect(interaction_picture_u(hams, t0, t1)));
        SMatrix s = extract_s_matrix(model);
        worst_u = std::max(worst_u, s.unitarity_defect);
        for (Eigen::Index c = 0; c < s.entries.cols(); ++c)
            worst_col = std::max(worst_col, std::abs(s.entries.col(c).squaredNorm() - 1.0));
    }
    const double elapsed = seconds_since(start);
    report(2, "unitarity", worst_u < 1e-10 && worst_col < 1e-9 && elapsed < 120.0,
           "max ||U+U - I|| " + fmt(worst_u) + ", max column-sum defect " + fmt(worst_col) + ", " +
               fmt(elapsed) + " s");
}

void criterion_3_dyson() {
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
    report(3, "dyson_scaling", std::abs(slope - 3.0) < 0.3,
           "order-2 defect log-log slope " + fmt(slope) + " (want 3 +- 0.3)");
}

void criterion_4_composition() {
    InteractionModel model = make_decay_model(0.35);
    FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
    Hamiltonians hams = build_hamiltonians(model, basis);
    RngStream rng(444);
    double worst = 0.0;
    for (int k = 0; k < 25; ++k) {
        const double t0 = 10.0 * rng.uniform01() - 5.0;
        const double t1 = 10.0 * rng.uniform01() - 5.0;
        const double t2 = 10.0 * rng.uniform01() - 5.0;
        const Eigen::MatrixXcd composed =
            interaction_picture_u(hams, t1, t2) * interaction_picture_u(hams, t0, t1);
        worst = std::max(worst, (composed - interaction_picture_u(hams, t0, t2)).norm());
    }
    report(4, "composition", worst < 1e-10,
           "max composition defect " + fmt(worst) + " over 25 random (t0,t1,t2)");
}

// --- criterion 5: collapse statistics ----------------------------------------

void criterion_5_collapse() {
    InteractionModel model = make_pair_production_model();
    SMatrix s = extract_s_matrix(model);
    const RegistryPtr& reg = model.registry;
    const BasisState in({{reg->sole_mode("gamma"), 1}});
    StateVector out = normalize(apply_s(s, StateVector(reg, in)));
    const ContentSignature in_sig = signature(*reg, in);

    double worst_sigma = 0.0;
    std::size_t cross_sector = 0;
    const int trials = 100000;
    const std::vector<std::uint64_t> seeds{11, 22, 33, 44, 55, 66, 77, 88, 99, 110};
    for (std::uint64_t seed : seeds) {
        FrequencyReport rep = sample_sector_frequencies(out, in_sig, RngStream(seed), trials);
        worst_sigma = std::max(worst_sigma, rep.max_abs_sigma);
        cross_sector += rep.cross_sector_post_states;
    }
    report(5, "collapse_stats",
           worst_sigma < 4.0 && cross_sector == 0,
           "max |freq - p| " + fmt(worst_sigma) + " sigma over 10 seeds x " +
               std::to_string(trials) + " trials, " + std::to_string(cross_sector) +
               " cross-sector post states");
}

// --- criterion 6: decay law ---------------------------------------------------

void criterion_6_decay() {
    const double tau = 1.0;
    const int trials = 100000;
    std::vector<double> times = sample_decay_times(tau, trials, RngStream(60601));
    const double d = ks_statistic(times, [&](double t) { return exponential_cdf(t, 2.0 * tau); });
    const double p = ks_p_value(d, times.size());

    // survival curve against e^{-2 tau t}; 4 sigma per interior grid point
    double worst_survival = 0.0;
    for (int i = 1; i < 24; ++i) {
        const double t = 6.0 * i / 24.0;
        std::size_t alive = 0;
        for (double td : times)
            if (td > t) ++alive;
        const double expect = std::exp(-2.0 * tau * t);
        const double freq = static_cast<double>(alive) / trials;
        const double sigma = std::sqrt(std::max(expect * (1.0 - expect) / trials, 1e-300));
        worst_survival = std::max(worst_survival, std::abs(freq - expect) / sigma);
    }

    DecaySpec spec{.tau = tau, .horizon = 8.0, .window = 0.25, .observation_points = 8};
    TimeTranslationReport tt =
        time_translation_diagnostic(spec, {0.0, 0.5, 1.0, 1.5}, RngStream(60601), trials);

    report(6, "decay_law",
           p > 0.01 && worst_survival < 4.0 && tt.max_conditional_spread_sigma < 3.0,
           "KS p " + fmt(p) + ", survival curve max " + fmt(worst_survival) +
               " sigma, memorylessness spread " + fmt(tt.max_conditional_spread_sigma) +
               " sigma");
}

// --- criterion 7: unistochasticity checker ------------------------------------

void criterion_7_unistochastic() {
    RngStream rng(70707);
    bool ok = true;
    double worst_witness = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double p = rng.uniform01();
        Eigen::MatrixXd g(2, 2);
        g << p, 1.0 - p, 1.0 - p, p;
        UnistochasticResult res = is_unistochastic(g, 1e-8);
        if (res.verdict != UnistochasticVerdict::yes || !res.witness ||
            res.witness_error >= 1e-8)
            ok = false;
        worst_witness = std::max(worst_witness, res.witness_error);
    }

    Eigen::MatrixXd circulant(3, 3);
    circulant << 0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0;
    const bool circulant_rejected =
        is_unistochastic(circulant, 1e-8).verdict == UnistochasticVerdict::no;

    // every emitted witness must verify, including the engine's own Gamma
    InteractionModel model = make_pair_production_model();
    SMatrix s = extract_s_matrix(model);
    GammaMatrix g3 = gamma_restricted(s, {ContentSignature({"gamma"}),
                                          ContentSignature({"e", "e+"}),
                                          ContentSignature({"mu", "mu_c"})});
    UnistochasticResult engine = is_unistochastic(g3.entries, 1e-8);
    const bool engine_ok = engine.verdict == UnistochasticVerdict::yes && engine.witness &&
                           engine.witness_error < 1e-8;

    report(7, "unistochastic", ok && circulant_rejected && engine_ok,
           "100 2x2 witnesses (worst error " + fmt(worst_witness) +
               "), circulant rejected: " + (circulant_rejected ? "yes" : "no") +
               ", engine Gamma witness error " + fmt(engine.witness_error));
}

// --- criterion 8: locality -----------------------------------------------------

void criterion_8_locality() {
    RngStream rng(80808);
    auto random_unitary = [&rng](int n) {
        Eigen::MatrixXcd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
        return Eigen::MatrixXcd(qr.householderQ());
    };

    double worst_reassembly = 0.0;
    for (const auto& dims : std::vector<std::array<int, 3>>{{2, 2, 2}, {3, 2, 2}, {2, 3, 3}}) {
        for (int k = 0; k < 8; ++k) {
            const int total = dims[0] * dims[1] * dims[2];
            std::array<Eigen::MatrixXcd, 3> pair_blocks;
            for (int pair = 0; pair < 3; ++pair) {
                const auto& members = pair_members[static_cast<std::size_t>(pair)];
                pair_blocks[static_cast<std::size_t>(pair)] =
                    random_unitary(dims[members[0]] * dims[members[1]]);
            }
            Eigen::MatrixXcd s3 = random_unitary(total);
            ClusterDecomposition d = cluster_decompose_3_blocks(s3, pair_blocks, dims);
            worst_reassembly =
                std::max(worst_reassembly, (d.reassemble() - s3).cwiseAbs().maxCoeff());
        }
    }

    bool exclusivity_ok = true;
    for (int x = -2; x <= 2; ++x)
        for (int y = -2; y <= 2; ++y)
            for (int z = -2; z <= 2; ++z) {
                if (x == 0 && y == 0 && z == 0) continue;
                const Vec3i q1{x, y, z};
                ExclusivityVerdict v13 =
                    momentum_exclusivity_check({q1, {0, 0, 0}, {0, 0, 0}, q1});
                ExclusivityVerdict v12 =
                    momentum_exclusivity_check({q1, {0, 0, 0}, q1, {0, 0, 0}});
                if (!v13.branch_13_feasible || v13.simultaneous_feasible ||
                    !v12.branch_12_feasible || v12.simultaneous_feasible)
                    exclusivity_ok = false;
            }

    double worst_engine_z = 0.0;
    for (std::uint64_t seed : {801u, 802u, 803u, 804u, 805u, 806u, 807u, 808u, 809u, 810u}) {
        SignalingReport engine = engine_two_detector_mc(100000, RngStream(seed));
        worst_engine_z = std::max(worst_engine_z, std::abs(engine.z_statistic));
    }
    SignalingReport contrast = no_signaling_mc(0.2, 100000, RngStream(811));

    report(8, "locality",
           worst_reassembly < 1e-10 && exclusivity_ok && worst_engine_z < 3.0 &&
               contrast.z_statistic > 5.0,
           "reassembly " + fmt(worst_reassembly) + ", exclusivity " +
               (exclusivity_ok ? "ok" : "violated") + ", engine max |z| " + fmt(worst_engine_z) +
               ", contrast z " + fmt(contrast.z_statistic));
}

// --- criterion 9: measurement ---------------------------------------------------

void criterion_9_measurement() {
    bool one_detector = true;

    // polarization battery with eigenstate endpoints
    double worst_pol = 0.0;
    bool endpoints_exact = true;
    const int pol_trials = 10000;
    for (double deg : {0.0, 22.5, 45.0, 67.5, 90.0}) {
        const double theta = deg * M_PI / 180.0;
        MeasurementScenario scenario = make_polarization_scenario(theta);
        StateVector in = probe_state(scenario, {1.0, 0.0});
        RngStream root(90000 + static_cast<std::uint64_t>(deg * 10));
        std::size_t parallel = 0;
        for (int k = 0; k < pol_trials; ++k) {
            RngStream stream = root.substream(static_cast<std::uint64_t>(k));
            MeasurementRecord record = run_measurement(scenario, in, stream);
            if (record.fired_region == "parallel") ++parallel;
        }
        const double p = std::cos(theta) * std::cos(theta);
        const double freq = static_cast<double>(parallel) / pol_trials;
        if (p < 1e-9) {
            // sub-epsilon sectors are dropped outright, so the count is exact
            if (parallel != 0) endpoints_exact = false;
        } else if (p > 1.0 - 1e-9) {
            if (parallel != pol_trials) endpoints_exact = false;
        } else {
            const double sigma = std::sqrt(p * (1.0 - p) / pol_trials);
            worst_pol = std::max(worst_pol, std::abs(freq - p) / sigma);
        }
    }

    // EPR: run-level perfect correlation at equal angles, marginals within 3 sigma
    EprReport equal = epr_scenario(0.3, 0.3, RngStream(90901), 10000);
    const bool epr_exact = equal.correlation == 1.0 && equal.min_run_product == 1.0;
    double worst_marginal = 0.0;
    for (double far : {0.0, 0.4, 0.9, 1.4}) {
        EprReport r = epr_scenario(0.3, far, RngStream(90902), 30000);
        const double sigma = std::sqrt(0.25 / static_cast<double>(r.trials));
        worst_marginal = std::max(worst_marginal, std::abs(r.marginal_a_plus - 0.5) / sigma);
    }

    // double slit at 1e5 trials, 3 sigma per cell
    ScenarioConfig slit_config = load_config(std::string(FOCKBOX_CONFIG_DIR) + "/double_slit.json");
    DoubleSlitResult slit =
        double_slit_scenario(slit_config.process.profile, RngStream(90903), 100000);
    double worst_cell = 0.0;
    std::size_t slit_total = 0;
    for (std::size_t i = 0; i < slit.histogram.size(); ++i) {
        slit_total += slit.histogram[i];
        const double p = std::norm(slit_config.process.profile[i]);
        const double freq = static_cast<double>(slit.histogram[i]) / 100000.0;
        const double sigma = std::sqrt(std::max(p * (1.0 - p) / 100000.0, 1e-12));
        worst_cell = std::max(worst_cell, std::abs(freq - p) / sigma);
    }
    if (slit_total != 100000) one_detector = false;  // exactly one cell per trial

    report(9, "measurement",
           one_detector && endpoints_exact && worst_pol < 3.0 && epr_exact &&
               worst_marginal < 3.0 && worst_cell < 3.0,
           "polarization max " + fmt(worst_pol) + " sigma, EPR equal-angle " +
               (epr_exact ? "exact" : "violated") + ", marginals max " + fmt(worst_marginal) +
               " sigma, double slit max " + fmt(worst_cell) + " sigma");
}

// --- criterion 10: determinism ---------------------------------------------------

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<missing " + path.string() + ">";
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void criterion_10_determinism() {
    const std::string cli = FOCKBOX_CLI_PATH;
    const std::string configs = FOCKBOX_CONFIG_DIR;
    bool ok = true;
    std::string details;
    for (const std::string name : {"decay", "pair_production", "epr", "double_slit"}) {
        const fs::path base = fs::temp_directory_path() / ("fockbox_acceptance_" + name);
        const fs::path out_a = base / "a";
        const fs::path out_b = base / "b";
        fs::remove_all(base);
        const std::string config = configs + "/" + name + ".json";
        const std::string trials = name == "decay" || name == "epr" ? " --trials 20000" : " --trials 50000";
        const std::string cmd_a =
            cli + " run " + config + trials + " --out " + out_a.string() + " >/dev/null 2>&1";
        const std::string cmd_b =
            cli + " run " + config + trials + " --out " + out_b.string() + " >/dev/null 2>&1";
        if (std::system(cmd_a.c_str()) != 0 || std::system(cmd_b.c_str()) != 0) {
            ok = false;
            details += name + ": run failed; ";
            continue;
        }
        for (const auto& entry : fs::directory_iterator(out_a)) {
            const std::string file = entry.path().filename().string();
            if (file == "manifest.json") continue;  // carries wall-clock timestamps
            if (slurp(entry.path()) != slurp(out_b / file)) {
                ok = false;
                details += name + "/" + file + " differs; ";
            }
        }
        fs::remove_all(base);
    }
    if (details.empty()) details = "decay, pair_production, epr, double_slit reruns byte-identical";
    report(10, "determinism", ok, details);
}

}  // namespace

int main() {
    std::printf("fockbox acceptance suite\n");
    criterion_1_algebra();
    criterion_2_unitarity();
    criterion_3_dyson();
    criterion_4_composition();
    criterion_5_collapse();
    criterion_6_decay();
    criterion_7_unistochastic();
    criterion_8_locality();
    criterion_9_measurement();
    criterion_10_determinism();
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures;
}
