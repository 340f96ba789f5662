#include "fockbox/locality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fockbox/collapse.hpp"
#include "fockbox/stats.hpp"

namespace fockbox {

namespace {

int composite_index(const std::array<int, 3>& dims, int i1, int i2, int i3) {
    return (i1 * dims[1] + i2) * dims[2] + i3;
}

// Spectator product: delta on the spectator particle tensored with a
// 2-particle block on the remaining pair, embedded in the 3-particle space.
Eigen::MatrixXcd embed_pair_block(const Eigen::MatrixXcd& block, int pair,
                                  const std::array<int, 3>& dims) {
    const int total = dims[0] * dims[1] * dims[2];
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(total, total);
    const auto& members = pair_members[static_cast<std::size_t>(pair)];
    const int a = members[0], b = members[1];
    const int spectator = 3 - a - b;

    std::array<int, 3> in_idx{}, out_idx{};
    for (int ia = 0; ia < dims[a]; ++ia)
        for (int ib = 0; ib < dims[b]; ++ib)
            for (int ja = 0; ja < dims[a]; ++ja)
                for (int jb = 0; jb < dims[b]; ++jb) {
                    const cplx v = block(ia * dims[b] + ib, ja * dims[b] + jb);
                    if (v == cplx(0.0)) continue;
                    for (int is = 0; is < dims[spectator]; ++is) {
                        out_idx[a] = ia;
                        out_idx[b] = ib;
                        out_idx[spectator] = is;
                        in_idx[a] = ja;
                        in_idx[b] = jb;
                        in_idx[spectator] = is;
                        out(composite_index(dims, out_idx[0], out_idx[1], out_idx[2]),
                            composite_index(dims, in_idx[0], in_idx[1], in_idx[2])) += v;
                    }
                }
    return out;
}

}  // namespace

Eigen::MatrixXcd ClusterDecomposition::reassemble() const {
    const int total = dims[0] * dims[1] * dims[2];
    Eigen::MatrixXcd s = connected_3;
    for (int pair = 0; pair < 3; ++pair) s += embed_pair_block(connected_2[pair], pair, dims);
    if (identity_term) s += Eigen::MatrixXcd::Identity(total, total);
    return s;
}

ClusterDecomposition cluster_decompose_3_blocks(const Eigen::MatrixXcd& s3,
                                                const std::array<Eigen::MatrixXcd, 3>& s2_pairs,
                                                const std::array<int, 3>& dims) {
    const int total = dims[0] * dims[1] * dims[2];
    if (s3.rows() != total || s3.cols() != total)
        throw InputError("cluster_decompose_3_blocks: 3-particle block has wrong shape");
    ClusterDecomposition d;
    d.dims = dims;
    d.identity_term = true;
    for (int pair = 0; pair < 3; ++pair) {
        const auto& members = pair_members[static_cast<std::size_t>(pair)];
        const int expected = dims[members[0]] * dims[members[1]];
        if (s2_pairs[pair].rows() != expected || s2_pairs[pair].cols() != expected)
            throw InputError("cluster_decompose_3_blocks: pair block has wrong shape");
        // S^C(2) = S(2) - identity (the 1-particle connected parts are deltas)
        d.connected_2[pair] =
            s2_pairs[pair] - Eigen::MatrixXcd::Identity(expected, expected);
    }
    d.connected_3 = s3 - Eigen::MatrixXcd::Identity(total, total);
    for (int pair = 0; pair < 3; ++pair)
        d.connected_3 -= embed_pair_block(d.connected_2[pair], pair, d.dims);
    return d;
}

ClusterDecomposition cluster_decompose_3(const SMatrix& s,
                                         const std::array<std::string, 3>& particle_species) {
    const Registry& reg = *s.registry;
    std::array<std::vector<ModeIndex>, 3> particle_modes;
    std::array<int, 3> dims{};
    for (int p = 0; p < 3; ++p) {
        const std::uint32_t sp = reg.species_index(particle_species[static_cast<std::size_t>(p)]);
        for (ModeIndex m = 0; m < reg.mode_count(); ++m)
            if (reg.mode(m).species == sp)
                particle_modes[static_cast<std::size_t>(p)].push_back(m);
        dims[static_cast<std::size_t>(p)] =
            static_cast<int>(particle_modes[static_cast<std::size_t>(p)].size());
        if (dims[static_cast<std::size_t>(p)] == 0)
            throw InputError("cluster_decompose_3: species has no modes: " +
                             particle_species[static_cast<std::size_t>(p)]);
    }

    // occupation-basis index of each (i1,i2,i3) momentum assignment
    auto basis_of = [&](std::initializer_list<std::pair<int, int>> assignment) {
        std::vector<std::pair<ModeIndex, std::uint32_t>> occ;
        for (const auto& [particle, cell] : assignment)
            occ.emplace_back(particle_modes[static_cast<std::size_t>(particle)]
                                           [static_cast<std::size_t>(cell)],
                             1u);
        return s.basis.index_of(BasisState(std::move(occ)));
    };

    const int total = dims[0] * dims[1] * dims[2];
    Eigen::MatrixXcd s3(total, total);
    for (int i1 = 0; i1 < dims[0]; ++i1)
        for (int i2 = 0; i2 < dims[1]; ++i2)
            for (int i3 = 0; i3 < dims[2]; ++i3)
                for (int j1 = 0; j1 < dims[0]; ++j1)
                    for (int j2 = 0; j2 < dims[1]; ++j2)
                        for (int j3 = 0; j3 < dims[2]; ++j3)
                            s3(composite_index(dims, i1, i2, i3),
                               composite_index(dims, j1, j2, j3)) =
                                s.entries(static_cast<Eigen::Index>(
                                              basis_of({{0, i1}, {1, i2}, {2, i3}})),
                                          static_cast<Eigen::Index>(
                                              basis_of({{0, j1}, {1, j2}, {2, j3}})));

    std::array<Eigen::MatrixXcd, 3> s2_pairs;
    for (int pair = 0; pair < 3; ++pair) {
        const auto& members = pair_members[static_cast<std::size_t>(pair)];
        const int a = members[0], b = members[1];
        const int size = dims[a] * dims[b];
        Eigen::MatrixXcd block(size, size);
        for (int ia = 0; ia < dims[a]; ++ia)
            for (int ib = 0; ib < dims[b]; ++ib)
                for (int ja = 0; ja < dims[a]; ++ja)
                    for (int jb = 0; jb < dims[b]; ++jb)
                        block(ia * dims[b] + ib, ja * dims[b] + jb) =
                            s.entries(static_cast<Eigen::Index>(basis_of({{a, ia}, {b, ib}})),
                                      static_cast<Eigen::Index>(basis_of({{a, ja}, {b, jb}})));
        s2_pairs[pair] = std::move(block);
    }
    return cluster_decompose_3_blocks(s3, s2_pairs, dims);
}

ClusterDecomposition spacelike_prune(ClusterDecomposition decomp,
                                     const std::array<bool, 3>& separated) {
    bool any = false;
    for (int pair = 0; pair < 3; ++pair) {
        if (separated[static_cast<std::size_t>(pair)]) {
            decomp.connected_2[static_cast<std::size_t>(pair)].setZero();
            any = true;
        }
    }
    // any spatial separation keeps the three particles from connecting as one cluster
    if (any) decomp.connected_3.setZero();
    return decomp;
}

namespace {

void write_complex_block(std::ostream& os, const std::string& name,
                         const Eigen::MatrixXcd& block) {
    os << "# " << name << " (" << block.rows() << "x" << block.cols()
       << ", columns alternate re im)\n";
    char buf[64];
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g", block(r, c).real(),
                          block(r, c).imag());
            os << (c ? " " : "") << buf;
        }
        os << "\n";
    }
}

}  // namespace

void write_cluster_blocks(std::ostream& os, const ClusterDecomposition& decomp) {
    os << "# cluster decomposition, particle dims " << decomp.dims[0] << " " << decomp.dims[1]
       << " " << decomp.dims[2] << ", identity term " << (decomp.identity_term ? 1 : 0) << "\n";
    write_complex_block(os, "connected_3", decomp.connected_3);
    const char* names[3] = {"connected_2_pair_23", "connected_2_pair_13",
                            "connected_2_pair_12"};
    for (int pair = 0; pair < 3; ++pair)
        write_complex_block(os, names[pair], decomp.connected_2[static_cast<std::size_t>(pair)]);
}

namespace {

bool is_zero(const Vec3i& v) { return v[0] == 0 && v[1] == 0 && v[2] == 0; }

Vec3i add(const Vec3i& a, const Vec3i& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

}  // namespace

ExclusivityVerdict momentum_exclusivity_check(const MomentumOutcome& outcome) {
    if (is_zero(outcome.q1))
        throw DomainError("momentum_exclusivity_check: q1 = 0 is a degenerate frame");

    // In-frame constants: q2 = q3 = 0, and the branch constraint that
    // particle 1 ends at rest (q1' = 0) when it scattered.
    const Vec3i zero{0, 0, 0};

    // Branch (1,3): particle 2 spectates, pair (1,3) conserves momentum.
    const bool branch_13 = outcome.q2p == zero && outcome.q1p == zero &&
                           add(outcome.q1p, outcome.q3p) == add(outcome.q1, zero);
    // Branch (1,2): particle 3 spectates.
    const bool branch_12 = outcome.q3p == zero && outcome.q1p == zero &&
                           add(outcome.q1p, outcome.q2p) == add(outcome.q1, zero);

    ExclusivityVerdict verdict;
    verdict.branch_13_feasible = branch_13;
    verdict.branch_12_feasible = branch_12;
    // both at once would need q3' = q1 = 0 and q2' = q1 = 0
    verdict.simultaneous_feasible = branch_13 && branch_12;
    return verdict;
}

SignalingReport no_signaling_mc(double p_m, std::size_t trials, RngStream root) {
    if (p_m < 0.0 || p_m > 1.0) throw DomainError("no_signaling_mc: p_M must be in [0,1]");
    const double p_s = 0.5 * (1.0 - p_m);

    std::size_t hits_both_on = 0, hits_one_off = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        RngStream stream = root.substream(k);
        // both detectors on: mutual with p_M, else a single uniform side;
        // A fires on mutual or single-A outcomes
        const double u = stream.uniform01();
        if (u < p_m + p_s) ++hits_both_on;

        // detector B off: A sees the plain Born weight 1/2
        if (stream.bernoulli(0.5)) ++hits_one_off;
    }

    SignalingReport report;
    report.p_m = p_m;
    report.trials = trials;
    report.p_both_on = static_cast<double>(hits_both_on) / static_cast<double>(trials);
    report.p_one_off = static_cast<double>(hits_one_off) / static_cast<double>(trials);
    report.z_statistic = two_proportion_z(hits_both_on, trials, hits_one_off, trials);
    return report;
}

SignalingReport engine_two_detector_mc(std::size_t trials, RngStream root) {
    // Two detector species; the impacting particle has equal weight at both
    // sites. With both detectors live, the out-state superposes the two
    // fired sectors and the collapse picks exactly one. With detector B
    // removed, the B branch stays an undetected particle; the A sector keeps
    // weight 1/2 either way.
    Registry::Builder builder;
    builder.grid({1, {0, 0, 0}, {1, 0, 0}})
        .truncation(2)
        .species({.id = "probe", .statistics = Statistics::boson, .max_occupation = 1})
        .species({.id = "D2*", .statistics = Statistics::boson, .max_occupation = 1})
        .species({.id = "D3*", .statistics = Statistics::boson, .max_occupation = 1})
        .mode("probe", {0, 0, 0})
        .mode("probe", {1, 0, 0})
        .mode("D2*")
        .mode("D3*");
    RegistryPtr reg = builder.build();
    const ModeIndex probe_far = reg->mode_index("probe", {1, 0, 0}, 0);
    const ModeIndex d2 = reg->sole_mode("D2*");
    const ModeIndex d3 = reg->sole_mode("D3*");
    const double amp = std::sqrt(0.5);

    StateVector both_on(reg);
    both_on.accumulate(BasisState({{d2, 1}}), amp);
    both_on.accumulate(BasisState({{d3, 1}}), amp);

    StateVector b_off(reg);
    b_off.accumulate(BasisState({{d2, 1}}), amp);
    b_off.accumulate(BasisState({{probe_far, 1}}), amp);

    const ContentSignature in_sig({"probe"});
    std::size_t hits_both_on = 0, hits_one_off = 0;
    for (std::size_t k = 0; k < trials; ++k) {
        RngStream stream_a = root.substream(2 * k);
        RngStream stream_b = root.substream(2 * k + 1);
        if (collapse_sample(stream_a, both_on, in_sig).chosen_signature.contains("D2*"))
            ++hits_both_on;
        if (collapse_sample(stream_b, b_off, in_sig).chosen_signature.contains("D2*"))
            ++hits_one_off;
    }

    SignalingReport report;
    report.p_m = 0.0;
    report.trials = trials;
    report.p_both_on = static_cast<double>(hits_both_on) / static_cast<double>(trials);
    report.p_one_off = static_cast<double>(hits_one_off) / static_cast<double>(trials);
    report.z_statistic = two_proportion_z(hits_both_on, trials, hits_one_off, trials);
    return report;
}

}  // namespace fockbox
