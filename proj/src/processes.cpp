#include "fockbox/processes.hpp"

#include <algorithm>
#include <cmath>

namespace fockbox {

void DecaySpec::validate() const {
    if (tau <= 0.0) throw DomainError("decay tau must be positive");
    if (!(horizon >= window) || !(window > 0.0))
        throw DomainError("decay spec requires horizon >= window > 0");
    if (observation_points < 2) throw DomainError("need at least two observation points");
    if (interaction_window < 0.0) throw DomainError("interaction window must be nonnegative");
}

RegistryPtr make_decay_registry() {
    Registry::Builder builder;
    builder.truncation(2)
        .species({.id = "P_u", .statistics = Statistics::boson, .mass = 1.0, .charge = 0,
                  .max_occupation = 1})
        .species({.id = "P_s", .statistics = Statistics::boson, .mass = 0.6, .charge = 0,
                  .max_occupation = 1})
        .species({.id = "Q", .statistics = Statistics::boson, .mass = 0.4, .charge = 0,
                  .max_occupation = 1})
        .mode("P_u")
        .mode("P_s")
        .mode("Q");
    return builder.build();
}

InteractionModel make_decay_model(double coupling) {
    InteractionModel model;
    model.registry = make_decay_registry();
    const ModeIndex pu = model.registry->sole_mode("P_u");
    const ModeIndex ps = model.registry->sole_mode("P_s");
    const ModeIndex q = model.registry->sole_mode("Q");
    model.free_terms = {{pu, 1.0}, {ps, 0.6}, {q, 0.4}};
    model.interaction_terms = {{coupling,
                                {{LadderKind::create, ps}, {LadderKind::create, q},
                                 {LadderKind::annihilate, pu}}}};
    model.switching_epsilon = 0.25;
    return model;
}

InteractionModel make_absorption_model(double coupling) {
    Registry::Builder builder;
    builder.truncation(2)
        .species({.id = "gamma", .statistics = Statistics::boson, .mass = 0.0, .charge = 0,
                  .max_occupation = 2})
        .species({.id = "A", .statistics = Statistics::boson, .mass = 10.0, .charge = 0,
                  .max_occupation = 1})
        .species({.id = "e", .statistics = Statistics::fermion, .mass = 0.5, .charge = -1})
        .species({.id = "A+", .statistics = Statistics::boson, .mass = 10.0, .charge = 1,
                  .max_occupation = 1})
        .mode("gamma")
        .mode("A")
        .mode("e")
        .mode("A+");
    InteractionModel model;
    model.registry = builder.build();
    const ModeIndex g = model.registry->sole_mode("gamma");
    const ModeIndex a = model.registry->sole_mode("A");
    const ModeIndex e = model.registry->sole_mode("e");
    const ModeIndex ap = model.registry->sole_mode("A+");
    model.free_terms = {{g, 1.0}, {a, 0.5}, {e, 0.9}, {ap, 0.6}};
    model.interaction_terms = {{coupling,
                                {{LadderKind::create, e}, {LadderKind::create, ap},
                                 {LadderKind::annihilate, a}, {LadderKind::annihilate, g}}}};
    model.switching_epsilon = 0.25;
    return model;
}

InteractionModel make_pair_production_model(double coupling_e, double coupling_mu) {
    Registry::Builder builder;
    builder.truncation(2)
        .species({.id = "gamma", .statistics = Statistics::boson, .mass = 0.0, .charge = 0,
                  .max_occupation = 1})
        .species({.id = "e", .statistics = Statistics::fermion, .mass = 0.5, .charge = -1})
        .species({.id = "e+", .statistics = Statistics::fermion, .mass = 0.5, .charge = 1})
        .species({.id = "mu", .statistics = Statistics::fermion, .mass = 0.5, .charge = -1})
        .species({.id = "mu_c", .statistics = Statistics::fermion, .mass = 0.5, .charge = 1})
        .mode("gamma")
        .mode("e")
        .mode("e+")
        .mode("mu")
        .mode("mu_c");
    InteractionModel model;
    model.registry = builder.build();
    const ModeIndex g = model.registry->sole_mode("gamma");
    const ModeIndex e = model.registry->sole_mode("e");
    const ModeIndex ep = model.registry->sole_mode("e+");
    const ModeIndex mu = model.registry->sole_mode("mu");
    const ModeIndex muc = model.registry->sole_mode("mu_c");
    model.free_terms = {{g, 1.0}, {e, 0.5}, {ep, 0.5}, {mu, 0.5}, {muc, 0.5}};
    model.interaction_terms = {
        {coupling_e,
         {{LadderKind::create, e}, {LadderKind::create, ep}, {LadderKind::annihilate, g}}},
        {coupling_mu,
         {{LadderKind::create, mu}, {LadderKind::create, muc}, {LadderKind::annihilate, g}}}};
    model.switching_epsilon = 0.25;
    return model;
}

double decay_survival_probability(double tau, double t) { return std::exp(-2.0 * tau * t); }

StateVector decay_unitary_state(const RegistryPtr& reg, double tau, double t) {
    if (t < 0.0) throw DomainError("decay_unitary_state: t must be nonnegative");
    if (tau <= 0.0) throw DomainError("decay_unitary_state: tau must be positive");
    const ModeIndex pu = reg->sole_mode("P_u");
    const ModeIndex ps = reg->sole_mode("P_s");
    const ModeIndex q = reg->sole_mode("Q");
    const double survive = std::exp(-tau * t);
    const double decayed = std::sqrt(std::max(0.0, 1.0 - survive * survive));
    StateVector s(reg);
    s.accumulate(BasisState({{pu, 1}}), survive);
    if (decayed > 0.0) s.accumulate(BasisState({{ps, 1}, {q, 1}}), decayed);
    s.prune();
    return s;
}

std::vector<double> sample_decay_times(double tau, int trials, RngStream root) {
    if (tau <= 0.0) throw DomainError("sample_decay_times: tau must be positive");
    std::vector<double> times(static_cast<std::size_t>(trials));
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        times[static_cast<std::size_t>(k)] = stream.exponential(2.0 * tau);
    }
    return times;
}

std::vector<TrajectoryRecord> decay_collapse_sim(const DecaySpec& spec, RngStream root,
                                                 int trials) {
    spec.validate();
    if (trials < 1) throw DomainError("decay_collapse_sim: trials must be >= 1");
    std::vector<TrajectoryRecord> records;
    records.reserve(static_cast<std::size_t>(trials));
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        const double t_d = stream.exponential(2.0 * spec.tau);
        TrajectoryRecord rec;
        if (t_d <= spec.horizon) rec.jump_time = t_d;
        // the decayed state is observable once the content change completed,
        // i.e. after t_d + tau_I
        const double settled = t_d + spec.interaction_window;
        rec.observations.reserve(static_cast<std::size_t>(spec.observation_points));
        for (int i = 0; i < spec.observation_points; ++i) {
            const double t = spec.horizon * static_cast<double>(i) /
                             static_cast<double>(spec.observation_points - 1);
            rec.observations.emplace_back(t, t < settled ? 1 : 0);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

TimeTranslationReport time_translation_diagnostic(const DecaySpec& spec,
                                                  const std::vector<double>& s_values,
                                                  RngStream root, int trials) {
    spec.validate();
    for (double s : s_values)
        if (s < 0.0 || s + spec.window > spec.horizon)
            throw DomainError("time_translation_diagnostic: s grid must fit inside the horizon");

    std::vector<double> times = sample_decay_times(spec.tau, trials, root);

    TimeTranslationReport report;
    report.window = spec.window;
    const double p_exact = -std::expm1(-2.0 * spec.tau * spec.window);
    for (double s : s_values) {
        TimeTranslationReport::Row row;
        row.s = s;
        row.collapse_conditional_exact = p_exact;
        std::size_t survivors = 0, jumps_in_window = 0;
        for (double t : times) {
            if (t <= s) continue;
            ++survivors;
            if (t <= s + spec.window) ++jumps_in_window;
        }
        row.survivors = survivors;
        if (survivors > 0) {
            row.collapse_conditional_mc =
                static_cast<double>(jumps_in_window) / static_cast<double>(survivors);
            row.mc_sigma = std::sqrt(p_exact * (1.0 - p_exact) / static_cast<double>(survivors));
            if (row.mc_sigma > 0.0) {
                const double dev =
                    std::abs(row.collapse_conditional_mc - p_exact) / row.mc_sigma;
                report.max_conditional_spread_sigma =
                    std::max(report.max_conditional_spread_sigma, dev);
            }
        }
        row.unitary_window_weight = decay_survival_probability(spec.tau, s) -
                                    decay_survival_probability(spec.tau, s + spec.window);
        report.rows.push_back(row);
    }
    return report;
}

CollapseEvent absorption_scenario(const InteractionModel& model, RngStream& rng) {
    const RegistryPtr& reg = model.registry;
    ModeIndex g, a;
    try {
        g = reg->sole_mode("gamma");
        a = reg->sole_mode("A");
        reg->sole_mode("e");
        reg->sole_mode("A+");
    } catch (const RegistryError& e) {
        throw ModelError(std::string("absorption scenario needs species gamma, A, e, A+: ") +
                         e.what());
    }
    SMatrix s = extract_s_matrix(model);
    const BasisState in_state({{g, 1}, {a, 1}});
    StateVector in(reg, in_state);
    StateVector out = apply_s(s, in);
    return collapse_sample(rng, normalize(out), signature(*reg, in_state));
}

FrequencyReport sample_sector_frequencies(const StateVector& out_state,
                                          const ContentSignature& in_signature, RngStream root,
                                          int trials) {
    if (trials < 1) throw DomainError("sample_sector_frequencies: trials must be >= 1");
    const auto probs = sector_probabilities(out_state);

    std::map<ContentSignature, std::size_t> counts;
    std::size_t cross_sector = 0;
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        CollapseEvent event = collapse_sample(stream, out_state, in_signature);
        ++counts[event.chosen_signature];
        if (is_cross_sector_superposition(event.post_state)) ++cross_sector;
    }

    FrequencyReport report;
    report.trials = static_cast<std::size_t>(trials);
    report.cross_sector_post_states = cross_sector;
    for (const auto& [sig, p] : probs) {
        FrequencyReport::Entry entry;
        entry.signature = sig;
        entry.probability = p;
        auto it = counts.find(sig);
        entry.count = it == counts.end() ? 0 : it->second;
        entry.frequency = static_cast<double>(entry.count) / static_cast<double>(trials);
        const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
        if (sigma > 0.0)
            report.max_abs_sigma =
                std::max(report.max_abs_sigma, std::abs(entry.frequency - p) / sigma);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

FrequencyReport pair_production_scenario(const InteractionModel& model, RngStream root,
                                         int trials) {
    const RegistryPtr& reg = model.registry;
    ModeIndex g;
    try {
        g = reg->sole_mode("gamma");
        reg->sole_mode("e");
        reg->sole_mode("e+");
        reg->sole_mode("mu");
        reg->sole_mode("mu_c");
    } catch (const RegistryError& e) {
        throw ModelError(
            std::string("pair production scenario needs species gamma, e, e+, mu, mu_c: ") +
            e.what());
    }
    SMatrix s = extract_s_matrix(model);
    const BasisState in_state({{g, 1}});
    StateVector out = apply_s(s, StateVector(reg, in_state));
    return sample_sector_frequencies(normalize(out), signature(*reg, in_state), root, trials);
}

}  // namespace fockbox
