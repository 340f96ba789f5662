#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "fockbox/collapse.hpp"
#include "fockbox/rng.hpp"

namespace fockbox {

// The three-stage scheme: a unitary coupling stage that routes eigenvalue
// components to disjoint regions, a bank of content-changing detectors (one
// ancilla species per region; its creation marks "fired"), and a record map
// from the fired region back to the reported eigenvalue. Amplification is an
// opaque token, not dynamics.
struct MeasurementScenario {
    RegistryPtr registry;
    Eigen::MatrixXcd coupling;                // unitary K x K over the probe modes
    std::vector<std::string> region_labels;   // size K, pairwise distinct
    std::vector<ModeIndex> probe_modes;       // size K, single species
    std::vector<ModeIndex> ancilla_modes;     // size K, one species per region
    std::map<std::string, double> record_map;

    void validate() const;  // ScenarioError on any violation
};

struct MeasurementRecord {
    std::string fired_region;
    double reported_eigenvalue = 0.0;
    CollapseEvent event;
    std::string amplification_tag;
};

// K-region scenario over a fresh registry. Region k gets probe mode k and
// ancilla species "det:<label>".
MeasurementScenario make_region_scenario(const Eigen::MatrixXcd& coupling,
                                         const std::vector<std::string>& region_labels,
                                         const std::vector<double>& eigenvalues,
                                         const std::string& probe_species = "photon");

// Polarization analyzer at the given angle: coupling is the rotation taking
// the polarization basis to the pass/block regions, eigenvalues +1/-1.
MeasurementScenario make_polarization_scenario(double analyzer_angle);

// Probe state over the scenario's input slots (amplitudes normalized by the
// caller or here if requested).
StateVector probe_state(const MeasurementScenario& scenario,
                        const std::vector<cplx>& amplitudes);

MeasurementRecord run_measurement(const MeasurementScenario& scenario, const StateVector& in_state,
                                  RngStream& rng);

// Double-slit screen: each trial is a content-changing absorption at exactly
// one cell; the histogram converges to |amplitude_profile|^2.
struct DoubleSlitResult {
    std::vector<std::size_t> histogram;
    std::vector<int> hits;  // per-trial cell, in trial order
    std::vector<std::string> seed_paths;
};
DoubleSlitResult double_slit_scenario(const std::vector<cplx>& amplitude_profile, RngStream root,
                                      int trials);

// Ionization-chamber trajectory: a chain of localized collapse events on an
// integer cell line; drift is inferred from the detections, not read from
// the state.
struct TrajectoryStepModel {
    std::vector<std::pair<int, cplx>> displacement_amplitudes;  // normalized
};
struct TrajectoryResult {
    std::vector<CollapseEvent> events;
    std::vector<int> cells;  // visited cells, starting cell 0 excluded
    double inferred_drift = 0.0;
    double expected_drift = 0.0;
};
TrajectoryResult trajectory_scenario(int n_steps, const TrajectoryStepModel& step_model,
                                     RngStream& rng);

// EPR pair through two analyzers; the two wings share one joint collapse of
// the four-sector out-state, so each wing's marginal cannot depend on the
// far angle.
struct EprRun {
    std::string seed_path;
    int a = 0;  // 0 = "+", 1 = "-"
    int b = 0;
};
struct EprReport {
    double theta_a = 0.0;
    double theta_b = 0.0;
    std::size_t trials = 0;
    std::array<std::array<std::size_t, 2>, 2> counts{{{0, 0}, {0, 0}}};
    double correlation = 0.0;  // mean of the +-1 eigenvalue products
    double min_run_product = 0.0;
    double marginal_a_plus = 0.0;
    double marginal_b_plus = 0.0;
    // goodness of fit of the counts table against the joint Born weights;
    // zero-weight cells are excluded (the sampler cannot populate them)
    double chi_square = 0.0;
    double chi_square_p = 1.0;
    int chi_square_dof = 0;
    std::vector<EprRun> runs;
};
EprReport epr_scenario(double theta_a, double theta_b, RngStream root, int trials);

}  // namespace fockbox
