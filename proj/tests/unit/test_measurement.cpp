#include <doctest.h>

#include <cmath>

#include "fockbox/measurement.hpp"
#include "fockbox/stats.hpp"

using namespace fockbox;

TEST_CASE("an eigenstate input fires its region with certainty") {
    MeasurementScenario scenario = make_polarization_scenario(0.0);
    StateVector up = probe_state(scenario, {1.0, 0.0});
    RngStream root(1);
    for (int k = 0; k < 200; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        MeasurementRecord record = run_measurement(scenario, up, stream);
        CHECK(record.fired_region == "parallel");
        CHECK(record.reported_eigenvalue == 1.0);
    }
}

TEST_CASE("spin-z on |up> always fires the up region") {
    MeasurementScenario spin_z = make_region_scenario(Eigen::MatrixXcd::Identity(2, 2),
                                                      {"up", "down"}, {0.5, -0.5}, "electron");
    StateVector up = probe_state(spin_z, {1.0, 0.0});
    RngStream root(42);
    for (int k = 0; k < 100; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        MeasurementRecord record = run_measurement(spin_z, up, stream);
        CHECK(record.fired_region == "up");
        CHECK(record.reported_eigenvalue == 0.5);
    }
}

TEST_CASE("polarization frequencies follow cos^2 of the relative angle") {
    const double theta = 30.0 * M_PI / 180.0;
    MeasurementScenario scenario = make_polarization_scenario(theta);
    StateVector in = probe_state(scenario, {1.0, 0.0});
    RngStream root(2);
    const int trials = 20000;
    int parallel = 0;
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        MeasurementRecord record = run_measurement(scenario, in, stream);
        // the eigenvalue always comes from the record map, never the state
        CHECK(record.reported_eigenvalue == (record.fired_region == "parallel" ? 1.0 : -1.0));
        if (record.fired_region == "parallel") ++parallel;
    }
    const double p = std::cos(theta) * std::cos(theta);
    const double freq = static_cast<double>(parallel) / trials;
    CHECK(std::abs(freq - p) < 3.0 * std::sqrt(p * (1.0 - p) / trials));
}

TEST_CASE("scenario validation rejects broken stages") {
    MeasurementScenario scenario = make_polarization_scenario(0.3);

    MeasurementScenario non_unitary = scenario;
    non_unitary.coupling(0, 0) += 0.2;
    CHECK_THROWS_AS(non_unitary.validate(), ScenarioError);

    MeasurementScenario no_content_change = scenario;
    no_content_change.ancilla_modes = no_content_change.probe_modes;  // detector = probe species
    CHECK_THROWS_AS(no_content_change.validate(), ScenarioError);

    MeasurementScenario dup_labels = scenario;
    dup_labels.region_labels = {"same", "same"};
    CHECK_THROWS_AS(dup_labels.validate(), ScenarioError);

    CHECK_THROWS_AS(make_region_scenario(Eigen::MatrixXcd::Identity(2, 2), {"a", "b"}, {1.0}),
                    ScenarioError);

    // input outside the probe slots
    StateVector stray(scenario.registry,
                      BasisState({{scenario.ancilla_modes[0], 1}}));
    RngStream rng(3);
    CHECK_THROWS_AS(run_measurement(scenario, stray, rng), ScenarioError);
}

TEST_CASE("double slit: one cell per trial, histogram matches |profile|^2") {
    std::vector<cplx> profile{std::sqrt(0.1), -std::sqrt(0.4), std::sqrt(0.4),
                              cplx(0.0, std::sqrt(0.1))};
    DoubleSlitResult result = double_slit_scenario(profile, RngStream(404), 20000);

    std::size_t total = 0;
    for (std::size_t c : result.histogram) total += c;
    CHECK(total == 20000);  // exactly one cell per trial
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const double p = std::norm(profile[i]);
        const double freq = static_cast<double>(result.histogram[i]) / 20000.0;
        CHECK(std::abs(freq - p) < 3.0 * std::sqrt(p * (1.0 - p) / 20000.0));
    }

    // a single-path (one-cell) profile is trivially concentrated
    DoubleSlitResult single = double_slit_scenario({1.0}, RngStream(405), 100);
    CHECK(single.histogram[0] == 100);

    CHECK_THROWS_AS(double_slit_scenario({0.5, 0.5}, RngStream(1), 10), InputError);
    CHECK_THROWS_AS(double_slit_scenario({}, RngStream(1), 10), InputError);
}

TEST_CASE("trajectory chains localized events and recovers the drift") {
    TrajectoryStepModel step;
    step.displacement_amplitudes = {{1, std::sqrt(0.7)}, {-1, std::sqrt(0.3)}};
    RngStream rng(606);
    TrajectoryResult result = trajectory_scenario(300, step, rng);
    REQUIRE(result.events.size() == 300);
    for (const auto& event : result.events)
        CHECK_FALSE(is_cross_sector_superposition(event.post_state));
    CHECK(result.expected_drift == doctest::Approx(0.4).epsilon(1e-12));
    // mean displacement has variance (1 - 0.4^2)/n per step
    const double sigma = std::sqrt((1.0 - 0.16) / 300.0);
    CHECK(std::abs(result.inferred_drift - 0.4) < 4.0 * sigma);

    TrajectoryResult empty = trajectory_scenario(0, step, rng);
    CHECK(empty.events.empty());

    TrajectoryStepModel bad;
    bad.displacement_amplitudes = {{1, 0.9}};
    CHECK_THROWS_AS(trajectory_scenario(5, bad, rng), ScenarioError);
}

TEST_CASE("EPR wings correlate perfectly at equal angles and only then") {
    EprReport equal = epr_scenario(0.3, 0.3, RngStream(707), 3000);
    CHECK(equal.correlation == 1.0);
    CHECK(equal.min_run_product == 1.0);
    CHECK(equal.counts[0][1] == 0);
    CHECK(equal.counts[1][0] == 0);

    // crossed polarizers anticorrelate
    EprReport crossed = epr_scenario(0.0, M_PI / 2.0, RngStream(708), 3000);
    CHECK(crossed.correlation == -1.0);

    // generic angles: E = cos(2 (a-b)) within Monte Carlo error
    const double a = 0.2, b = 0.9;
    EprReport generic = epr_scenario(a, b, RngStream(709), 40000);
    const double expect = std::cos(2.0 * (a - b));
    const double sigma = std::sqrt((1.0 - expect * expect) / 40000.0);
    CHECK(std::abs(generic.correlation - expect) < 4.0 * sigma);
}

TEST_CASE("EPR marginals ignore the far analyzer angle") {
    const double sigma = std::sqrt(0.25 / 30000.0);
    for (double far : {0.0, 0.5, 1.2}) {
        EprReport report = epr_scenario(0.35, far, RngStream(808), 30000);
        CHECK(std::abs(report.marginal_a_plus - 0.5) < 3.0 * sigma);
    }
}

TEST_CASE("records carry the amplification token and collapse event") {
    MeasurementScenario scenario = make_polarization_scenario(0.4);
    StateVector in = probe_state(scenario, {std::sqrt(0.5), std::sqrt(0.5)});
    RngStream rng(909);
    MeasurementRecord record = run_measurement(scenario, in, rng);
    CHECK(record.amplification_tag == "amplified:" + record.event.rng_seed_path);
    CHECK_FALSE(is_cross_sector_superposition(record.event.post_state));
    CHECK(record.event.in_signature == ContentSignature({"photon"}));
}
