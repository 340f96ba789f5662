#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fockbox/collapse.hpp"
#include "fockbox/dynamics.hpp"
#include "fockbox/rng.hpp"

namespace fockbox {

// Amplitude decay constant tau (survival amplitude e^{-tau t}), the simulated
// horizon, and the detection window Delta used by the diagnostics. The
// interaction window tau_I is the short interval in which the content change
// completes; it defaults to zero (instantaneous) and exists for sensitivity
// studies only — jump statistics are always read off t_d itself.
struct DecaySpec {
    double tau = 1.0;
    double horizon = 5.0;
    double window = 0.25;
    int observation_points = 32;
    double interaction_window = 0.0;

    void validate() const;
};

struct TrajectoryRecord {
    std::optional<double> jump_time;  // absent: survived past the horizon
    std::vector<std::pair<double, int>> observations;  // (time, survival indicator)
};

// Registry with the three decay species P_u, P_s, Q (one mode each).
RegistryPtr make_decay_registry();

// Decay toy H1 = g (a†(P_s) a†(Q) a(P_u) + h.c.) with resonant kinematics
// omega(P_u) = omega(P_s) + omega(Q).
InteractionModel make_decay_model(double coupling = 0.1);

// Photon absorption gamma + A -> e + A+ (single content-changing coupling).
InteractionModel make_absorption_model(double coupling = 0.1);

// Pair production gamma -> e e+ | mu mu_c with two couplings.
InteractionModel make_pair_production_model(double coupling_e = 0.12,
                                            double coupling_mu = 0.12);

// The unitary-picture decay state e^{-tau t}|P_u> + sqrt(1-e^{-2 tau t})|P_s,Q>.
StateVector decay_unitary_state(const RegistryPtr& decay_registry, double tau, double t);

double decay_survival_probability(double tau, double t);

// Raw jump-time sampler: t_d ~ Exponential(rate 2 tau).
std::vector<double> sample_decay_times(double tau, int trials, RngStream root);

std::vector<TrajectoryRecord> decay_collapse_sim(const DecaySpec& spec, RngStream root,
                                                 int trials);

// The time-translation contrast of the two decay descriptions: the collapse
// law's conditional window probability is constant in s, the unitary
// description's unconditioned window weight decays with s.
struct TimeTranslationReport {
    struct Row {
        double s = 0.0;
        double collapse_conditional_mc = 0.0;   // P(jump in [s,s+D] | survived to s), empirical
        double collapse_conditional_exact = 0.0;  // 1 - e^{-2 tau D}
        double mc_sigma = 0.0;
        std::size_t survivors = 0;
        double unitary_window_weight = 0.0;  // e^{-2 tau s} - e^{-2 tau (s+D)}
    };
    double window = 0.0;
    double max_conditional_spread_sigma = 0.0;
    std::vector<Row> rows;
};

TimeTranslationReport time_translation_diagnostic(const DecaySpec& spec,
                                                  const std::vector<double>& s_values,
                                                  RngStream root, int trials);

// Runs the S-matrix from |gamma, A> and collapses the out-state once.
CollapseEvent absorption_scenario(const InteractionModel& model, RngStream& rng);

struct FrequencyReport {
    struct Entry {
        ContentSignature signature;
        std::size_t count = 0;
        double frequency = 0.0;
        double probability = 0.0;  // sector probability from |S|^2
    };
    std::vector<Entry> entries;
    std::size_t trials = 0;
    std::size_t cross_sector_post_states = 0;  // must stay zero
    double max_abs_sigma = 0.0;  // worst |freq - p| in binomial sigmas
};

FrequencyReport pair_production_scenario(const InteractionModel& model, RngStream root,
                                         int trials);

// Shared helper: collapse the fixed out-state `trials` times with substreams
// of `root` and tally chosen signatures against the decomposition weights.
FrequencyReport sample_sector_frequencies(const StateVector& out_state,
                                          const ContentSignature& in_signature, RngStream root,
                                          int trials);

}  // namespace fockbox
