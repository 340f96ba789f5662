#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fockbox/locality.hpp"
#include "fockbox/rng.hpp"

using namespace fockbox;

namespace {

Eigen::MatrixXcd random_unitary(RngStream& rng, int n) {
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(rng.uniform01() - 0.5, rng.uniform01() - 0.5);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    return qr.householderQ();
}

// 3 distinguishable species, each with `cells` momentum modes, and an
// elastic momentum-exchange coupling between species s1 and s3 only.
InteractionModel three_particle_model(int cells, double coupling) {
    Registry::Builder builder;
    builder.grid({1, {0, 0, 0}, {cells - 1, 0, 0}}).truncation(3);
    for (const char* id : {"s1", "s2", "s3"})
        builder.species({.id = id, .statistics = Statistics::boson, .max_occupation = 1});
    for (const char* id : {"s1", "s2", "s3"}) builder.modes_on_grid(id);
    InteractionModel model;
    model.registry = builder.build();
    for (ModeIndex m = 0; m < model.registry->mode_count(); ++m)
        model.free_terms.push_back(
            {m, 1.0 + 0.1 * model.registry->mode(m).momentum[0]});
    // exchange: s1,s3 swap momentum cells pairwise (energy conserving)
    for (int p = 0; p < cells; ++p)
        for (int q = 0; q < cells; ++q) {
            if (p == q) continue;
            const ModeIndex s1p = model.registry->mode_index("s1", {p, 0, 0}, 0);
            const ModeIndex s3q = model.registry->mode_index("s3", {q, 0, 0}, 0);
            const ModeIndex s1q = model.registry->mode_index("s1", {q, 0, 0}, 0);
            const ModeIndex s3p = model.registry->mode_index("s3", {p, 0, 0}, 0);
            model.interaction_terms.push_back(
                {coupling,
                 {{LadderKind::create, s1q}, {LadderKind::create, s3p},
                  {LadderKind::annihilate, s3q}, {LadderKind::annihilate, s1p}}});
        }
    model.switching_epsilon = 0.25;
    return model;
}

}  // namespace

TEST_CASE("identity S has no connected parts") {
    const std::array<int, 3> dims{2, 2, 2};
    std::array<Eigen::MatrixXcd, 3> pair_blocks{Eigen::MatrixXcd::Identity(4, 4),
                                                Eigen::MatrixXcd::Identity(4, 4),
                                                Eigen::MatrixXcd::Identity(4, 4)};
    ClusterDecomposition d =
        cluster_decompose_3_blocks(Eigen::MatrixXcd::Identity(8, 8), pair_blocks, dims);
    CHECK(d.connected_3.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& block : d.connected_2) CHECK(block.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.identity_term);
}

TEST_CASE("a pure 2-body interaction shows up as exactly one spectator term") {
    RngStream rng(5);
    const std::array<int, 3> dims{2, 2, 2};
    Eigen::MatrixXcd v = random_unitary(rng, 4);
    std::array<Eigen::MatrixXcd, 3> pair_blocks{Eigen::MatrixXcd::Identity(4, 4), v,
                                                Eigen::MatrixXcd::Identity(4, 4)};
    Eigen::MatrixXcd s3 = Eigen::MatrixXcd::Zero(8, 8);
    for (int i1 = 0; i1 < 2; ++i1)
        for (int i3 = 0; i3 < 2; ++i3)
            for (int j1 = 0; j1 < 2; ++j1)
                for (int j3 = 0; j3 < 2; ++j3)
                    for (int i2 = 0; i2 < 2; ++i2)
                        s3((i1 * 2 + i2) * 2 + i3, (j1 * 2 + i2) * 2 + j3) +=
                            v(i1 * 2 + i3, j1 * 2 + j3);
    ClusterDecomposition d = cluster_decompose_3_blocks(s3, pair_blocks, dims);
    CHECK(d.connected_3.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d.connected_2[0].cwiseAbs().maxCoeff() < 1e-12);  // pair (2,3)
    CHECK(d.connected_2[2].cwiseAbs().maxCoeff() < 1e-12);  // pair (1,2)
    CHECK(d.connected_2[1].cwiseAbs().maxCoeff() > 0.1);    // pair (1,3) carries V - I
    CHECK((d.reassemble() - s3).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reassembly is exact for random 3-body blocks") {
    RngStream rng(6);
    for (const auto& dims : std::vector<std::array<int, 3>>{{2, 2, 2}, {3, 2, 2}, {2, 2, 3}}) {
        const int total = dims[0] * dims[1] * dims[2];
        std::array<Eigen::MatrixXcd, 3> pair_blocks;
        for (int pair = 0; pair < 3; ++pair) {
            const auto& members = pair_members[static_cast<std::size_t>(pair)];
            pair_blocks[static_cast<std::size_t>(pair)] =
                random_unitary(rng, dims[members[0]] * dims[members[1]]);
        }
        Eigen::MatrixXcd s3 = random_unitary(rng, total);
        ClusterDecomposition d = cluster_decompose_3_blocks(s3, pair_blocks, dims);
        CHECK((d.reassemble() - s3).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("cluster decomposition of an engine S-matrix isolates the coupled pair") {
    InteractionModel model = three_particle_model(2, 0.12);
    SMatrix s = extract_s_matrix(model);
    ClusterDecomposition d = cluster_decompose_3(s, {"s1", "s2", "s3"});
    // only species 1 and 3 interact: every other connected block vanishes
    CHECK(d.connected_3.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(d.connected_2[0].cwiseAbs().maxCoeff() < 1e-9);
    CHECK(d.connected_2[2].cwiseAbs().maxCoeff() < 1e-9);
    CHECK(d.connected_2[1].cwiseAbs().maxCoeff() > 1e-3);

    // and the 3-particle block is reproduced exactly
    Eigen::MatrixXcd reassembled = d.reassemble();
    CHECK(reassembled.rows() == 8);

    CHECK_THROWS_AS(cluster_decompose_3(s, {"s1", "s2", "nope"}), Error);
}

TEST_CASE("spacelike pruning: separated pairs nullify, idempotent, full isolation") {
    RngStream rng(7);
    const std::array<int, 3> dims{2, 2, 2};
    std::array<Eigen::MatrixXcd, 3> pair_blocks{random_unitary(rng, 4), random_unitary(rng, 4),
                                                random_unitary(rng, 4)};
    ClusterDecomposition d =
        cluster_decompose_3_blocks(random_unitary(rng, 8), pair_blocks, dims);

    // particles 2,3 separated: only S^C(1,3), S^C(1,2) and the identity survive
    ClusterDecomposition pruned = spacelike_prune(d, {true, false, false});
    CHECK(pruned.connected_3.cwiseAbs().maxCoeff() == 0.0);
    CHECK(pruned.connected_2[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(pruned.connected_2[1].cwiseAbs().maxCoeff() > 0.0);
    CHECK(pruned.connected_2[2].cwiseAbs().maxCoeff() > 0.0);
    CHECK(pruned.identity_term);

    ClusterDecomposition again = spacelike_prune(pruned, {true, false, false});
    CHECK((again.reassemble() - pruned.reassemble()).cwiseAbs().maxCoeff() == 0.0);

    // no separation: unchanged
    ClusterDecomposition untouched = spacelike_prune(d, {false, false, false});
    CHECK((untouched.reassemble() - d.reassemble()).cwiseAbs().maxCoeff() == 0.0);

    // all pairs separated: the identity term alone remains
    ClusterDecomposition isolated = spacelike_prune(d, {true, true, true});
    const Eigen::MatrixXcd rest = isolated.reassemble();
    CHECK((rest - Eigen::MatrixXcd::Identity(8, 8)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cluster blocks export as labeled numeric tables") {
    RngStream rng(8);
    const std::array<int, 3> dims{2, 2, 2};
    std::array<Eigen::MatrixXcd, 3> pair_blocks{random_unitary(rng, 4), random_unitary(rng, 4),
                                                random_unitary(rng, 4)};
    ClusterDecomposition d =
        cluster_decompose_3_blocks(random_unitary(rng, 8), pair_blocks, dims);
    std::ostringstream os;
    write_cluster_blocks(os, d);
    const std::string text = os.str();
    CHECK(text.find("connected_3") != std::string::npos);
    CHECK(text.find("connected_2_pair_13") != std::string::npos);
    // numeric body: 8 rows of 16 re/im values for the 3-connected block
    std::istringstream is(text);
    std::string line;
    int numeric_rows = 0;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') ++numeric_rows;
    CHECK(numeric_rows == 8 + 3 * 4);
}

TEST_CASE("momentum conservation forbids simultaneous detection") {
    // branch (1,3): particle 3 absorbs all of q1
    ExclusivityVerdict v = momentum_exclusivity_check({{1, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 0, 0}});
    CHECK(v.branch_13_feasible);
    CHECK_FALSE(v.branch_12_feasible);
    CHECK_FALSE(v.simultaneous_feasible);

    // branch (1,2)
    v = momentum_exclusivity_check({{0, 2, -1}, {0, 0, 0}, {0, 2, -1}, {0, 0, 0}});
    CHECK(v.branch_12_feasible);
    CHECK_FALSE(v.branch_13_feasible);
    CHECK_FALSE(v.simultaneous_feasible);

    // an outcome violating conservation is infeasible on both branches
    v = momentum_exclusivity_check({{1, 0, 0}, {0, 0, 0}, {0, 0, 0}, {2, 0, 0}});
    CHECK_FALSE(v.branch_13_feasible);
    CHECK_FALSE(v.branch_12_feasible);

    CHECK_THROWS_AS(momentum_exclusivity_check({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}}),
                    DomainError);
}

TEST_CASE("no-signaling Monte Carlo across the p_M range") {
    SignalingReport none = no_signaling_mc(0.0, 50000, RngStream(11));
    CHECK(std::abs(none.p_both_on - 0.5) < 3.0 * std::sqrt(0.25 / 50000.0));
    CHECK(std::abs(none.p_one_off - 0.5) < 3.0 * std::sqrt(0.25 / 50000.0));
    CHECK(std::abs(none.z_statistic) < 3.0);

    SignalingReport some = no_signaling_mc(0.2, 50000, RngStream(12));
    CHECK(std::abs(some.p_both_on - 0.6) < 3.0 * std::sqrt(0.24 / 50000.0));
    CHECK(some.z_statistic > 5.0);

    SignalingReport all = no_signaling_mc(1.0, 20000, RngStream(13));
    CHECK(all.p_both_on == 1.0);

    CHECK_THROWS_AS(no_signaling_mc(1.5, 10, RngStream(1)), DomainError);
}

TEST_CASE("the engine's own two-detector collapse shows no signaling") {
    SignalingReport report = engine_two_detector_mc(50000, RngStream(21));
    CHECK(std::abs(report.z_statistic) < 3.0);
    CHECK(std::abs(report.p_both_on - 0.5) < 3.0 * std::sqrt(0.25 / 50000.0));
    CHECK(std::abs(report.p_one_off - 0.5) < 3.0 * std::sqrt(0.25 / 50000.0));
}
