#include <doctest.h>

#include <cmath>

#include "fockbox/dynamics.hpp"
#include "fockbox/fock.hpp"
#include "fockbox/rng.hpp"
#include "test_helpers.hpp"

using namespace fockbox;
using fockbox::testing::mixed_registry;

TEST_CASE("create on the vacuum populates one mode with amplitude 1") {
    RegistryPtr reg = mixed_registry();
    StateVector vac(reg, BasisState::vacuum());
    const ModeIndex m = reg->mode_index("b", {0, 0, 0}, 0);
    StateVector one = create(vac, m);
    CHECK(one.support_size() == 1);
    CHECK(testing::amp_error(one, BasisState({{m, 1}}), 1.0) < 1e-15);
    CHECK_FALSE(one.truncated());
}

TEST_CASE("bosonic double creation carries the sqrt(2) ladder factor") {
    // oracle: the factor is forced by [a, a+] = 1 on the two-state ladder;
    // commutator_defect certifies the relation, then the amplitude is pinned
    RegistryPtr reg = mixed_registry();
    const ModeIndex m = reg->mode_index("b", {0, 0, 0}, 0);
    std::vector<BasisState> probes{BasisState::vacuum(), BasisState({{m, 1}})};
    CHECK(commutator_defect(reg, m, m, probes) < 1e-12);

    StateVector one(reg, BasisState({{m, 1}}));
    StateVector two = create(one, m);
    CHECK(testing::amp_error(two, BasisState({{m, 2}}), std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("fermionic double creation vanishes without raising the truncation flag") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex f = reg->mode_index("f", {0, 0, 0}, 0);
    StateVector one(reg, BasisState({{f, 1}}));
    StateVector out = create(one, f);
    CHECK(out.support_size() == 0);
    CHECK_FALSE(out.truncated());
}

TEST_CASE("annihilate kills the vacuum and undoes a single creation") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex m = reg->mode_index("b", {1, 0, 0}, 0);
    StateVector vac(reg, BasisState::vacuum());
    CHECK(annihilate(vac, m).support_size() == 0);

    StateVector one(reg, BasisState({{m, 1}}));
    StateVector back = annihilate(one, m);
    CHECK(testing::amp_error(back, BasisState::vacuum(), 1.0) < 1e-15);
}

TEST_CASE("annihilate of a double occupation follows from adjointness") {
    // oracle: <1|a|2> must equal <a+ 1|2> = sqrt(2); then a|2> = sqrt(2)|1>
    RegistryPtr reg = mixed_registry();
    const ModeIndex m = reg->mode_index("b", {0, 0, 0}, 0);
    StateVector one(reg, BasisState({{m, 1}}));
    StateVector two(reg, BasisState({{m, 2}}));
    const cplx via_adjoint = inner_product(create(one, m), two);
    CHECK(std::abs(via_adjoint - cplx(std::sqrt(2.0))) < 1e-15);

    StateVector lowered = annihilate(two, m);
    CHECK(testing::amp_error(lowered, BasisState({{m, 1}}), via_adjoint) < 1e-15);
}

TEST_CASE("commutator defect vanishes for bosons and independent modes") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    const ModeIndex b1 = reg->mode_index("b", {1, 0, 0}, 0);
    std::vector<BasisState> probes{BasisState::vacuum(), BasisState({{b1, 1}})};
    CHECK(commutator_defect(reg, b0, b0, probes) < 1e-12);
    CHECK(commutator_defect(reg, b0, b1, probes) < 1e-12);
}

TEST_CASE("fermion anticommutator holds over every interior two-particle probe") {
    // brute force: all basis states at least two quanta below the truncation
    RegistryPtr reg = mixed_registry();
    FockBasis basis = enumerate_basis(*reg);
    std::vector<BasisState> probes;
    for (const BasisState& b : basis.states) {
        if (b.total() > reg->n_max() - 2) continue;
        bool at_cap = false;
        for (ModeIndex m = 0; m < reg->mode_count(); ++m)
            if (!reg->mode_is_fermionic(m) &&
                static_cast<int>(b.occupation(m)) > reg->mode_cap(m) - 1)
                at_cap = true;
        if (!at_cap) probes.push_back(b);
    }
    REQUIRE(probes.size() > 4);
    const ModeIndex f0 = reg->mode_index("f", {0, 0, 0}, 0);
    const ModeIndex f1 = reg->mode_index("f", {1, 0, 0}, 0);
    CHECK(commutator_defect(reg, f0, f0, probes) < 1e-12);
    CHECK(commutator_defect(reg, f0, f1, probes) < 1e-12);
    // mixed statistics pairs commute
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    CHECK(commutator_defect(reg, b0, f1, probes) < 1e-12);
}

TEST_CASE("probe at the truncation boundary is rejected") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    std::vector<BasisState> probes{BasisState({{b0, 3}})};  // total 3 > N_max - 2
    CHECK_THROWS_AS(commutator_defect(reg, b0, b0, probes), BoundaryError);
}

TEST_CASE("inner products and norms behave sesquilinearly") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    const ModeIndex b1 = reg->mode_index("b", {1, 0, 0}, 0);

    StateVector vac(reg, BasisState::vacuum());
    CHECK(std::abs(inner_product(vac, vac) - cplx(1.0)) < 1e-15);

    StateVector one_a(reg, BasisState({{b0, 1}}));
    StateVector one_b(reg, BasisState({{b1, 1}}));
    CHECK(std::abs(inner_product(one_a, one_b)) < 1e-15);

    // 3-4-5 amplitudes
    StateVector s = add(scale(vac, 0.6), scale(one_a, cplx(0.0, 0.8)));
    CHECK(std::abs(norm(s) - 1.0) < 1e-15);

    // conjugation sits on the left argument
    const cplx ip = inner_product(s, one_a);
    CHECK(std::abs(ip - cplx(0.0, -0.8)) < 1e-15);
}

TEST_CASE("normalize rejects the zero vector") {
    RegistryPtr reg = mixed_registry();
    StateVector zero(reg);
    CHECK_THROWS_AS(normalize(zero), DegenerateStateError);
}

TEST_CASE("unknown modes raise registry errors") {
    RegistryPtr reg = mixed_registry();
    StateVector vac(reg, BasisState::vacuum());
    CHECK_THROWS_AS(create(vac, 99), RegistryError);
    CHECK_THROWS_AS(annihilate(vac, 99), RegistryError);
    CHECK_THROWS_AS(reg->mode_index("b", {7, 0, 0}, 0), RegistryError);
    CHECK_THROWS_AS(reg->species_index("nope"), RegistryError);
}

TEST_CASE("components crossing the truncation are dropped and flagged") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    const ModeIndex b1 = reg->mode_index("b", {1, 0, 0}, 0);

    // per-mode cap: b holds at most 3
    StateVector timing(reg, BasisState({{b0, 3}}));
    StateVector capped = create(timing, b0);
    CHECK(capped.support_size() == 0);
    CHECK(capped.truncated());

    // global cap: N_max = 4
    StateVector full(reg, BasisState({{b0, 2}, {b1, 2}}));
    StateVector overfull = create(full, b1);
    CHECK(overfull.support_size() == 0);
    CHECK(overfull.truncated());

    // a mixed state keeps its surviving component but carries the flag
    StateVector mixed = add(full, scale(StateVector(reg, BasisState::vacuum()), 0.5));
    StateVector applied = create(mixed, b1);
    CHECK(applied.truncated());
    CHECK(applied.support_size() == 1);
}

TEST_CASE("fermionic signs flip with creation order on disjoint modes") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex f0 = reg->mode_index("f", {0, 0, 0}, 0);
    const ModeIndex f1 = reg->mode_index("f", {1, 0, 0}, 0);
    StateVector vac(reg, BasisState::vacuum());
    StateVector ab = create(create(vac, f1), f0);  // a+_0 a+_1 |0>
    StateVector ba = create(create(vac, f0), f1);  // a+_1 a+_0 |0>
    const BasisState pair({{f0, 1}, {f1, 1}});
    CHECK(std::abs(ab.amplitude(pair) + ba.amplitude(pair)) < 1e-15);
    CHECK(std::abs(std::abs(ab.amplitude(pair)) - 1.0) < 1e-15);
}

TEST_CASE("basis state canonicalization is order independent and idempotent") {
    RegistryPtr reg = mixed_registry();
    const ModeIndex b0 = reg->mode_index("b", {0, 0, 0}, 0);
    const ModeIndex b1 = reg->mode_index("b", {1, 0, 0}, 0);
    BasisState direct({{b0, 2}, {b1, 1}});
    BasisState shuffled({{b1, 1}, {b0, 1}, {b0, 1}});  // split counts, reversed order
    BasisState with_zero({{b0, 2}, {b1, 1}, {3, 0}});
    CHECK(direct == shuffled);
    CHECK(direct == with_zero);
    CHECK(BasisState(direct.occupations()) == direct);

    StateVector a(reg, direct, cplx(0.3, -0.4));
    StateVector b(reg, shuffled, cplx(0.3, -0.4));
    CHECK(std::abs(norm(a) - norm(b)) < 1e-16);
    CHECK(std::abs(inner_product(a, b) - cplx(norm(a) * norm(b))) < 1e-15);
}

TEST_CASE("adjointness property on random interior states") {
    RegistryPtr reg = mixed_registry();
    FockBasis basis = enumerate_basis(*reg);
    RngStream rng(42);
    StateVector phi(reg), psi(reg);
    for (const BasisState& b : basis.states) {
        if (b.total() > reg->n_max() - 1) continue;
        phi.accumulate(b, cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5));
        psi.accumulate(b, cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5));
    }
    for (ModeIndex m = 0; m < reg->mode_count(); ++m) {
        const cplx lhs = inner_product(phi, annihilate(psi, m));
        const cplx rhs = inner_product(create(phi, m), psi);
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("registry builder enforces the declared grid and uniqueness") {
    Registry::Builder builder;
    builder.grid({1, {0, 0, 0}, {1, 0, 0}}).truncation(2);
    builder.species({.id = "x", .statistics = Statistics::boson, .max_occupation = 2});
    CHECK_THROWS_AS(builder.species({.id = "x"}), RegistryError);
    CHECK_THROWS_AS(builder.mode("x", {5, 0, 0}), RegistryError);
    CHECK_THROWS_AS(builder.mode("nope", {0, 0, 0}), RegistryError);
    builder.mode("x", {0, 0, 0});
    CHECK_THROWS_AS(builder.mode("x", {0, 0, 0}), RegistryError);

    // fermion cap forced to one
    Registry::Builder b2;
    b2.truncation(2).species(
        {.id = "f", .statistics = Statistics::fermion, .max_occupation = 5});
    b2.mode("f");
    RegistryPtr reg = b2.build();
    CHECK(reg->species(reg->species_index("f")).max_occupation == 1);
}
