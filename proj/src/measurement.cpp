#include "fockbox/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fockbox/dynamics.hpp"
#include "fockbox/stats.hpp"

namespace fockbox {

void MeasurementScenario::validate() const {
    const std::size_t k = region_labels.size();
    if (k == 0) throw ScenarioError("scenario needs at least one region");
    if (probe_modes.size() != k || ancilla_modes.size() != k)
        throw ScenarioError("regions, probe modes and ancilla modes must align");
    if (coupling.rows() != static_cast<Eigen::Index>(k) ||
        coupling.cols() != static_cast<Eigen::Index>(k))
        throw ScenarioError("coupling stage has the wrong shape");
    if (unitarity_defect(coupling) > 1e-10)
        throw ScenarioError("coupling stage must be unitary");

    std::set<std::string> labels(region_labels.begin(), region_labels.end());
    if (labels.size() != k) throw ScenarioError("region labels must be pairwise distinct");
    for (const auto& label : region_labels)
        if (!record_map.count(label))
            throw ScenarioError("record_map misses region " + label);

    // all probe slots carry one species; each ancilla is a different species,
    // so every detection is a content change (the scheme's non-unitary stage)
    const std::uint32_t probe_species = registry->mode(probe_modes.front()).species;
    std::set<std::uint32_t> ancilla_species;
    for (std::size_t i = 0; i < k; ++i) {
        if (registry->mode(probe_modes[i]).species != probe_species)
            throw ScenarioError("probe modes must belong to a single species");
        const std::uint32_t a = registry->mode(ancilla_modes[i]).species;
        if (a == probe_species)
            throw ScenarioError("detector bank must change the particles content");
        if (!ancilla_species.insert(a).second)
            throw ScenarioError("each region needs its own ancilla species");
    }
}

MeasurementScenario make_region_scenario(const Eigen::MatrixXcd& coupling,
                                         const std::vector<std::string>& region_labels,
                                         const std::vector<double>& eigenvalues,
                                         const std::string& probe_species) {
    const std::size_t k = region_labels.size();
    if (eigenvalues.size() != k)
        throw ScenarioError("one eigenvalue per region required");

    Registry::Builder builder;
    builder.grid({1, {0, 0, 0}, {static_cast<int>(k) - 1, 0, 0}}).truncation(2);
    builder.species({.id = probe_species, .statistics = Statistics::boson, .max_occupation = 1});
    for (std::size_t i = 0; i < k; ++i)
        builder.species(
            {.id = "det:" + region_labels[i], .statistics = Statistics::boson, .max_occupation = 1});
    for (std::size_t i = 0; i < k; ++i)
        builder.mode(probe_species, {static_cast<int>(i), 0, 0});
    for (std::size_t i = 0; i < k; ++i) builder.mode("det:" + region_labels[i]);

    MeasurementScenario scenario;
    scenario.registry = builder.build();
    scenario.coupling = coupling;
    scenario.region_labels = region_labels;
    for (std::size_t i = 0; i < k; ++i) {
        scenario.probe_modes.push_back(
            scenario.registry->mode_index(probe_species, {static_cast<int>(i), 0, 0}, 0));
        scenario.ancilla_modes.push_back(scenario.registry->sole_mode("det:" + region_labels[i]));
        scenario.record_map[region_labels[i]] = eigenvalues[i];
    }
    scenario.validate();
    return scenario;
}

MeasurementScenario make_polarization_scenario(double analyzer_angle) {
    Eigen::MatrixXcd rotation(2, 2);
    rotation << std::cos(analyzer_angle), std::sin(analyzer_angle), -std::sin(analyzer_angle),
        std::cos(analyzer_angle);
    return make_region_scenario(rotation, {"parallel", "perpendicular"}, {1.0, -1.0});
}

StateVector probe_state(const MeasurementScenario& scenario, const std::vector<cplx>& amplitudes) {
    if (amplitudes.size() != scenario.probe_modes.size())
        throw ScenarioError("probe amplitudes must match the number of input slots");
    StateVector s(scenario.registry);
    for (std::size_t i = 0; i < amplitudes.size(); ++i)
        s.accumulate(BasisState({{scenario.probe_modes[i], 1}}), amplitudes[i]);
    s.prune();
    return normalize(s);
}

MeasurementRecord run_measurement(const MeasurementScenario& scenario, const StateVector& in_state,
                                  RngStream& rng) {
    scenario.validate();
    const std::size_t k = scenario.region_labels.size();

    // stage 0: read the probe amplitudes off the input state
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(k));
    ContentSignature in_sig;
    for (const auto& [b, amp] : in_state.amplitudes()) {
        if (b.total() != 1)
            throw ScenarioError("measurement input must be a single-particle state");
        bool matched = false;
        for (std::size_t i = 0; i < k; ++i) {
            if (b.occupation(scenario.probe_modes[i]) == 1) {
                amps(static_cast<Eigen::Index>(i)) += amp;
                matched = true;
                break;
            }
        }
        if (!matched) throw ScenarioError("measurement input lies outside the probe modes");
        in_sig = signature(*scenario.registry, b);
    }

    // stage 1: unitary coupling, eigenvalue components -> region slots.
    // This acts inside one species, so no basis state changes signature.
    Eigen::VectorXcd region_amps = scenario.coupling * amps;

    // stage 2: detector bank, probe absorbed and the region's ancilla
    // created: |probe@region r> -> |det_r>. Content change in every branch.
    StateVector out(scenario.registry);
    for (std::size_t i = 0; i < k; ++i)
        out.accumulate(BasisState({{scenario.ancilla_modes[i], 1}}),
                       region_amps(static_cast<Eigen::Index>(i)));
    out.prune();

    CollapseEvent event = collapse_sample(rng, normalize(out), in_sig);

    // stage 3: one (and only one) region fired; the eigenvalue is computed
    // from the fired region, never read off the quantum state
    std::string fired;
    int fired_count = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (event.chosen_signature.contains(
                scenario.registry->mode_species(scenario.ancilla_modes[i]).id)) {
            fired = scenario.region_labels[i];
            ++fired_count;
        }
    }
    if (fired_count != 1)
        throw ScenarioError("exactly one detector must fire per run");

    MeasurementRecord record;
    record.fired_region = fired;
    record.reported_eigenvalue = scenario.record_map.at(fired);
    record.event = std::move(event);
    record.amplification_tag = "amplified:" + record.event.rng_seed_path;
    return record;
}

DoubleSlitResult double_slit_scenario(const std::vector<cplx>& amplitude_profile, RngStream root,
                                      int trials) {
    const std::size_t cells = amplitude_profile.size();
    if (cells == 0) throw InputError("double_slit_scenario: empty profile");
    double total = 0.0;
    for (const cplx& a : amplitude_profile) total += std::norm(a);
    if (std::abs(total - 1.0) > 1e-9)
        throw InputError("double_slit_scenario: amplitude profile must be normalized");

    Registry::Builder builder;
    builder.truncation(1);
    for (std::size_t i = 0; i < cells; ++i)
        builder.species({.id = "hit:" + std::to_string(i), .statistics = Statistics::boson,
                         .max_occupation = 1});
    for (std::size_t i = 0; i < cells; ++i) builder.mode("hit:" + std::to_string(i));
    RegistryPtr reg = builder.build();

    StateVector screen_state(reg);
    for (std::size_t i = 0; i < cells; ++i)
        screen_state.accumulate(BasisState({{reg->sole_mode("hit:" + std::to_string(i)), 1}}),
                                amplitude_profile[i]);
    screen_state.prune();

    const ContentSignature photon_sig({"photon"});
    DoubleSlitResult result;
    result.histogram.assign(cells, 0);
    result.hits.reserve(static_cast<std::size_t>(trials));
    result.seed_paths.reserve(static_cast<std::size_t>(trials));
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        CollapseEvent event = collapse_sample(stream, screen_state, photon_sig);
        if (event.chosen_signature.species().size() != 1)
            throw ScenarioError("double slit: more than one cell in a single trial");
        const std::string& id = event.chosen_signature.species().front();
        const int cell = std::stoi(id.substr(id.find(':') + 1));
        ++result.histogram[static_cast<std::size_t>(cell)];
        result.hits.push_back(cell);
        result.seed_paths.push_back(event.rng_seed_path);
    }
    return result;
}

TrajectoryResult trajectory_scenario(int n_steps, const TrajectoryStepModel& step_model,
                                     RngStream& rng) {
    TrajectoryResult result;
    if (n_steps == 0) return result;
    if (n_steps < 0) throw DomainError("trajectory_scenario: negative step count");
    if (step_model.displacement_amplitudes.empty())
        throw ScenarioError("trajectory_scenario: empty step model");
    double total = 0.0;
    for (const auto& [d, a] : step_model.displacement_amplitudes) total += std::norm(a);
    if (std::abs(total - 1.0) > 1e-9)
        throw ScenarioError("trajectory_scenario: step amplitudes must be normalized");

    for (const auto& [d, a] : step_model.displacement_amplitudes)
        result.expected_drift += static_cast<double>(d) * std::norm(a);

    // one ionization-register species per reachable cell
    int min_d = 0, max_d = 0;
    for (const auto& [d, a] : step_model.displacement_amplitudes) {
        min_d = std::min(min_d, d);
        max_d = std::max(max_d, d);
    }
    const int lo = std::min(0, min_d * n_steps), hi = std::max(0, max_d * n_steps);
    Registry::Builder builder;
    builder.truncation(1);
    for (int c = lo; c <= hi; ++c)
        builder.species({.id = "ion:" + std::to_string(c), .statistics = Statistics::boson,
                         .max_occupation = 1});
    for (int c = lo; c <= hi; ++c) builder.mode("ion:" + std::to_string(c));
    RegistryPtr reg = builder.build();

    int cell = 0;
    ContentSignature prev_sig({"probe"});
    for (int step = 0; step < n_steps; ++step) {
        StateVector spread(reg);
        for (const auto& [d, a] : step_model.displacement_amplitudes)
            spread.accumulate(
                BasisState({{reg->sole_mode("ion:" + std::to_string(cell + d)), 1}}), a);
        spread.prune();
        CollapseEvent event =
            collapse_sample(rng, spread, prev_sig, static_cast<double>(step));
        const std::string& id = event.chosen_signature.species().front();
        cell = std::stoi(id.substr(id.find(':') + 1));
        prev_sig = event.chosen_signature;
        result.cells.push_back(cell);
        result.events.push_back(std::move(event));
    }
    result.inferred_drift = static_cast<double>(cell) / static_cast<double>(n_steps);
    return result;
}

EprReport epr_scenario(double theta_a, double theta_b, RngStream root, int trials) {
    // max-entangled input (|HH> + |VV>)/sqrt(2); local rotations by the two
    // analyzer angles; per-wing detectors. The joint out-state amplitude for
    // regions (r, s) is [R(a) Psi R(b)^T]_{rs}.
    Eigen::Matrix2cd psi = Eigen::Matrix2cd::Identity() / std::sqrt(2.0);
    Eigen::Matrix2cd ra, rb;
    ra << std::cos(theta_a), std::sin(theta_a), -std::sin(theta_a), std::cos(theta_a);
    rb << std::cos(theta_b), std::sin(theta_b), -std::sin(theta_b), std::cos(theta_b);
    Eigen::Matrix2cd joint = ra * psi * rb.transpose();

    Registry::Builder builder;
    builder.truncation(2);
    const std::array<std::string, 2> wing_a{"detA+", "detA-"};
    const std::array<std::string, 2> wing_b{"detB+", "detB-"};
    for (const auto& id : wing_a)
        builder.species({.id = id, .statistics = Statistics::boson, .max_occupation = 1});
    for (const auto& id : wing_b)
        builder.species({.id = id, .statistics = Statistics::boson, .max_occupation = 1});
    for (const auto& id : wing_a) builder.mode(id);
    for (const auto& id : wing_b) builder.mode(id);
    RegistryPtr reg = builder.build();

    StateVector out(reg);
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s)
            out.accumulate(BasisState({{reg->sole_mode(wing_a[static_cast<std::size_t>(r)]), 1},
                                       {reg->sole_mode(wing_b[static_cast<std::size_t>(s)]), 1}}),
                           joint(r, s));
    out.prune();
    out = normalize(out);

    const ContentSignature in_sig({"gammaA", "gammaB"});
    EprReport report;
    report.theta_a = theta_a;
    report.theta_b = theta_b;
    report.trials = static_cast<std::size_t>(trials);
    report.min_run_product = 1.0;
    double product_sum = 0.0;
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        CollapseEvent event = collapse_sample(stream, out, in_sig);
        int a_fired = -1, b_fired = -1;
        for (int r = 0; r < 2; ++r) {
            if (event.chosen_signature.contains(wing_a[static_cast<std::size_t>(r)])) {
                if (a_fired >= 0) throw ScenarioError("wing A fired twice in one run");
                a_fired = r;
            }
            if (event.chosen_signature.contains(wing_b[static_cast<std::size_t>(r)])) {
                if (b_fired >= 0) throw ScenarioError("wing B fired twice in one run");
                b_fired = r;
            }
        }
        if (a_fired < 0 || b_fired < 0)
            throw ScenarioError("each wing must fire exactly one detector per run");
        ++report.counts[static_cast<std::size_t>(a_fired)][static_cast<std::size_t>(b_fired)];
        const double ea = a_fired == 0 ? 1.0 : -1.0;
        const double eb = b_fired == 0 ? 1.0 : -1.0;
        product_sum += ea * eb;
        report.min_run_product = std::min(report.min_run_product, ea * eb);
        report.runs.push_back({event.rng_seed_path, a_fired, b_fired});
    }
    report.correlation = product_sum / static_cast<double>(trials);
    report.marginal_a_plus =
        static_cast<double>(report.counts[0][0] + report.counts[0][1]) /
        static_cast<double>(trials);
    report.marginal_b_plus =
        static_cast<double>(report.counts[0][0] + report.counts[1][0]) /
        static_cast<double>(trials);

    int populated_cells = 0;
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < 2; ++s) {
            const double expected = std::norm(joint(r, s)) * static_cast<double>(trials);
            if (expected <= 0.0) continue;
            ++populated_cells;
            const double observed = static_cast<double>(
                report.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)]);
            report.chi_square += (observed - expected) * (observed - expected) / expected;
        }
    report.chi_square_dof = std::max(1, populated_cells - 1);
    report.chi_square_p = chi_square_p_value(report.chi_square, report.chi_square_dof);
    return report;
}

}  // namespace fockbox
