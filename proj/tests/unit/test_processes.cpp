#include <doctest.h>

#include <cmath>

#include "fockbox/processes.hpp"
#include "fockbox/stats.hpp"

using namespace fockbox;

TEST_CASE("the unitary decay state interpolates from |P_u> to |P_s,Q>") {
    RegistryPtr reg = make_decay_registry();
    const double tau = 0.8;

    StateVector start = decay_unitary_state(reg, tau, 0.0);
    CHECK(start.support_size() == 1);
    CHECK(std::abs(start.amplitude(BasisState({{reg->sole_mode("P_u"), 1}})) - cplx(1.0)) <
          1e-15);

    for (double t : {0.3, 1.0, 2.5}) {
        StateVector s = decay_unitary_state(reg, tau, t);
        CHECK(std::abs(norm(s) - 1.0) < 1e-12);
        const double survival = std::norm(s.amplitude(BasisState({{reg->sole_mode("P_u"), 1}})));
        CHECK(survival == doctest::Approx(std::exp(-2.0 * tau * t)).epsilon(1e-12));
    }

    // for t > 7/tau the decayed weight saturates within 1e-6
    StateVector late = decay_unitary_state(reg, tau, 7.5 / tau);
    const double decayed = std::norm(late.amplitude(
        BasisState({{reg->sole_mode("P_s"), 1}, {reg->sole_mode("Q"), 1}})));
    CHECK(std::abs(decayed - 1.0) < 1e-6);

    CHECK_THROWS_AS(decay_unitary_state(reg, tau, -0.1), DomainError);
}

TEST_CASE("jump times follow Exponential(2 tau): moments and KS") {
    const double tau = 0.7;
    const int trials = 100000;
    std::vector<double> times = sample_decay_times(tau, trials, RngStream(4242));

    double mean = 0.0;
    for (double t : times) mean += t;
    mean /= trials;
    const double expected_mean = 1.0 / (2.0 * tau);
    const double sigma = expected_mean / std::sqrt(static_cast<double>(trials));
    CHECK(std::abs(mean - expected_mean) < 4.0 * sigma);

    const double d = ks_statistic(times, [&](double t) { return exponential_cdf(t, 2.0 * tau); });
    CHECK(ks_p_value(d, times.size()) > 0.01);
}

TEST_CASE("collapse trajectories: clipping, monotone observations, survival law") {
    DecaySpec spec{.tau = 1.0, .horizon = 3.0, .window = 0.2, .observation_points = 16};
    const int trials = 20000;
    auto records = decay_collapse_sim(spec, RngStream(99), trials);
    REQUIRE(records.size() == static_cast<std::size_t>(trials));

    std::size_t survivors_at_1 = 0;
    for (const auto& rec : records) {
        if (rec.jump_time) CHECK(*rec.jump_time <= spec.horizon);
        int prev = 1;
        for (const auto& [t, alive] : rec.observations) {
            CHECK(alive <= prev);  // survival indicator never recovers
            prev = alive;
        }
        // cross-check the indicator against the jump time at an interior point
        const auto& [t_mid, alive_mid] = rec.observations[5];
        const bool should_be_alive = !rec.jump_time || *rec.jump_time > t_mid;
        CHECK(static_cast<bool>(alive_mid) == should_be_alive);
        if (!rec.jump_time || *rec.jump_time > 1.0) ++survivors_at_1;
    }
    const double p = std::exp(-2.0);
    const double freq = static_cast<double>(survivors_at_1) / trials;
    CHECK(std::abs(freq - p) < 4.0 * std::sqrt(p * (1.0 - p) / trials));

    CHECK_THROWS_AS(decay_collapse_sim(spec, RngStream(1), 0), DomainError);
    DecaySpec bad = spec;
    bad.window = 5.0;
    CHECK_THROWS_AS(decay_collapse_sim(bad, RngStream(1), 10), DomainError);
}

TEST_CASE("time translation: collapse law is memoryless, unitary weight is not") {
    DecaySpec spec{.tau = 1.0, .horizon = 8.0, .window = 0.25, .observation_points = 8};
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.5};
    TimeTranslationReport report =
        time_translation_diagnostic(spec, grid, RngStream(555), 100000);

    CHECK(report.max_conditional_spread_sigma < 3.0);

    // closed form: the unconditioned window weights at s=0 and s=1/tau differ
    // by exactly e^2
    const double w0 = report.rows[0].unitary_window_weight;
    const double w1 = report.rows[2].unitary_window_weight;  // s = 1.0 = 1/tau
    CHECK(w0 / w1 == doctest::Approx(std::exp(2.0)).epsilon(1e-12));

    // both descriptions give vanishing window probability as the window closes
    DecaySpec tiny = spec;
    tiny.window = 1e-9;
    TimeTranslationReport small =
        time_translation_diagnostic(tiny, {0.0}, RngStream(556), 1000);
    CHECK(small.rows[0].collapse_conditional_exact < 1e-8);
    CHECK(small.rows[0].unitary_window_weight < 1e-8);

    CHECK_THROWS_AS(time_translation_diagnostic(spec, {7.9}, RngStream(1), 10), DomainError);
}

TEST_CASE("absorption scenario: free theory passes through, coupling changes content") {
    InteractionModel free_model = make_absorption_model(0.0);
    free_model.interaction_terms.clear();
    RngStream rng(77);
    CollapseEvent event = absorption_scenario(free_model, rng);
    CHECK(event.chosen_signature == ContentSignature({"gamma", "A"}));
    CHECK(event.sector_probability == doctest::Approx(1.0).epsilon(1e-9));

    InteractionModel model = make_absorption_model(0.1);
    RngStream rng2(78);
    for (int k = 0; k < 50; ++k) {
        RngStream stream = rng2.substream(static_cast<std::uint64_t>(k));
        CollapseEvent e = absorption_scenario(model, stream);
        const bool valid = e.chosen_signature == ContentSignature({"gamma", "A"}) ||
                           e.chosen_signature == ContentSignature({"e", "A+"});
        CHECK(valid);
        CHECK_FALSE(is_cross_sector_superposition(e.post_state));
    }

    InteractionModel wrong = make_decay_model(0.1);
    RngStream rng3(79);
    CHECK_THROWS_AS(absorption_scenario(wrong, rng3), ModelError);
}

TEST_CASE("absorption sector frequencies match the |S|^2 aggregation") {
    InteractionModel model = make_absorption_model(0.1);
    SMatrix s = extract_s_matrix(model);
    const RegistryPtr& reg = model.registry;
    const BasisState in({{reg->sole_mode("gamma"), 1}, {reg->sole_mode("A"), 1}});
    StateVector out = normalize(apply_s(s, StateVector(reg, in)));
    FrequencyReport report =
        sample_sector_frequencies(out, signature(*reg, in), RngStream(31337), 10000);
    CHECK(report.max_abs_sigma < 3.0);
    CHECK(report.cross_sector_post_states == 0);
}

TEST_CASE("pair production: three exclusive outcomes with symmetric rates") {
    InteractionModel model = make_pair_production_model();
    FrequencyReport report = pair_production_scenario(model, RngStream(2718), 20000);

    double prob_sum = 0.0;
    double p_e = 0.0, p_mu = 0.0;
    for (const auto& entry : report.entries) {
        prob_sum += entry.probability;
        if (entry.signature == ContentSignature({"e", "e+"})) p_e = entry.probability;
        if (entry.signature == ContentSignature({"mu", "mu_c"})) p_mu = entry.probability;
    }
    CHECK(std::abs(prob_sum - 1.0) < 1e-9);
    CHECK(report.entries.size() == 3);
    CHECK(report.cross_sector_post_states == 0);
    CHECK(report.max_abs_sigma < 4.0);
    // equal couplings and symmetric kinematics: identical probabilities
    CHECK(p_e == doctest::Approx(p_mu).epsilon(1e-10));

    CHECK_THROWS_AS(pair_production_scenario(make_decay_model(0.1), RngStream(1), 10),
                    ModelError);
}

TEST_CASE("a nonzero interaction window delays the observable content change") {
    DecaySpec spec{.tau = 1.0, .horizon = 4.0, .window = 0.5, .observation_points = 64,
                   .interaction_window = 0.8};
    auto records = decay_collapse_sim(spec, RngStream(77), 500);
    for (const auto& rec : records) {
        if (!rec.jump_time) continue;
        for (const auto& [t, alive] : rec.observations) {
            if (t <= *rec.jump_time) CHECK(alive == 1);
            if (t > *rec.jump_time + spec.interaction_window) CHECK(alive == 0);
        }
    }
    DecaySpec bad = spec;
    bad.interaction_window = -0.1;
    CHECK_THROWS_AS(decay_collapse_sim(bad, RngStream(1), 5), DomainError);
}

TEST_CASE("decay simulation is reproducible from the root seed") {
    DecaySpec spec{.tau = 0.5, .horizon = 10.0, .window = 0.5, .observation_points = 4};
    auto a = decay_collapse_sim(spec, RngStream(123), 200);
    auto b = decay_collapse_sim(spec, RngStream(123), 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].jump_time.has_value() == b[i].jump_time.has_value());
        if (a[i].jump_time) CHECK(*a[i].jump_time == *b[i].jump_time);
    }
}
