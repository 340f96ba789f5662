#include "fockbox/collapse.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace fockbox {

std::map<ContentSignature, double> sector_probabilities(const StateVector& out_state,
                                                        double eps_p) {
    std::map<ContentSignature, double> probs;
    for (const auto& [sig, part] : sector_decompose(out_state, eps_p))
        probs.emplace(sig, part.probability);
    return probs;
}

CollapseEvent collapse_sample(RngStream& rng, const StateVector& out_state,
                              const ContentSignature& in_signature, double time_tag,
                              double eps_p) {
    SectorDecomposition parts = sector_decompose(out_state, eps_p);

    CollapseEvent event;
    event.time_tag = time_tag;
    event.in_signature = in_signature;
    event.rng_seed_path = rng.path();

    if (parts.size() == 1) {
        // single-sector out-state: the approximately-unitary branch, no
        // stochastic selection takes place
        const auto& [sig, part] = *parts.begin();
        event.chosen_signature = sig;
        event.sector_probability = part.probability;
        event.post_state = part.component;
        return event;
    }

    std::vector<const ContentSignature*> sigs;
    std::vector<double> weights;
    sigs.reserve(parts.size());
    for (const auto& [sig, part] : parts) {
        sigs.push_back(&sig);
        weights.push_back(part.probability);
    }
    const std::size_t chosen = rng.pick(weights);
    const SectorPart& part = parts.at(*sigs[chosen]);
    event.chosen_signature = *sigs[chosen];
    event.sector_probability = part.probability;
    event.post_state = part.component;
    return event;
}

double GammaMatrix::row_sum_defect() const {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < entries.rows(); ++r)
        worst = std::max(worst, std::abs(entries.row(r).sum() - 1.0));
    return worst;
}

InWeights uniform_sector_weights(const SMatrix& s) {
    InWeights w;
    for (std::size_t i = 0; i < s.basis.dim(); ++i) w.emplace(i, 1.0);
    return w;
}

InWeights uniform_sector_weights(const SMatrix& s, const ContentSignature& in_sector) {
    InWeights w;
    for (std::size_t i = 0; i < s.basis.dim(); ++i)
        if (signature(*s.registry, s.basis.states[i]) == in_sector) w.emplace(i, 1.0);
    if (w.empty()) throw IndexError("no basis state carries the requested in-sector signature");
    return w;
}

InWeights point_mass_weights(const SMatrix& s, const BasisState& in_state) {
    InWeights w;
    w.emplace(s.basis.index_of(in_state), 1.0);
    return w;
}

GammaMatrix gamma_from_s(const SMatrix& s, const InWeights& in_weights) {
    if (in_weights.empty()) throw IndexError("gamma_from_s: empty weight set");
    const std::size_t dim = s.basis.dim();

    std::vector<ContentSignature> state_sig(dim);
    for (std::size_t i = 0; i < dim; ++i) state_sig[i] = signature(*s.registry, s.basis.states[i]);

    // columns: every signature present in the basis
    std::map<ContentSignature, std::size_t> col_of;
    for (const auto& sig : state_sig) col_of.emplace(sig, 0);
    std::size_t c = 0;
    for (auto& [sig, idx] : col_of) idx = c++;

    // rows: signatures of the weighted in-states, weights normalized per row
    std::map<ContentSignature, double> row_weight;
    for (const auto& [alpha, w] : in_weights) {
        if (alpha >= dim) throw IndexError("gamma_from_s: weight index outside basis");
        if (w < 0.0) throw InputError("gamma_from_s: negative weight");
        row_weight[state_sig[alpha]] += w;
    }
    std::map<ContentSignature, std::size_t> row_of;
    std::size_t r = 0;
    for (auto& [sig, total] : row_weight) {
        if (total <= 0.0) throw InputError("gamma_from_s: zero total weight in a sector");
        row_of.emplace(sig, r++);
    }

    GammaMatrix g;
    g.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(row_of.size()),
                                      static_cast<Eigen::Index>(col_of.size()));
    g.row_labels.resize(row_of.size());
    g.col_labels.resize(col_of.size());
    for (const auto& [sig, idx] : row_of) g.row_labels[idx] = sig;
    for (const auto& [sig, idx] : col_of) g.col_labels[idx] = sig;

    for (const auto& [alpha, w] : in_weights) {
        const ContentSignature& in_sig = state_sig[alpha];
        const double wn = w / row_weight.at(in_sig);
        const Eigen::Index row = static_cast<Eigen::Index>(row_of.at(in_sig));
        for (std::size_t beta = 0; beta < dim; ++beta) {
            const Eigen::Index col = static_cast<Eigen::Index>(col_of.at(state_sig[beta]));
            g.entries(row, col) +=
                wn * std::norm(s.entries(static_cast<Eigen::Index>(beta),
                                         static_cast<Eigen::Index>(alpha)));
        }
    }
    return g;
}

GammaMatrix gamma_restricted(const SMatrix& s, const std::vector<ContentSignature>& sectors) {
    if (sectors.empty()) throw IndexError("gamma_restricted: empty sector list");
    const std::size_t dim = s.basis.dim();
    const std::size_t n = sectors.size();

    std::vector<ContentSignature> state_sig(dim);
    for (std::size_t i = 0; i < dim; ++i) state_sig[i] = signature(*s.registry, s.basis.states[i]);

    GammaMatrix g;
    g.row_labels = sectors;
    g.col_labels = sectors;
    g.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::size_t> columns;
        for (std::size_t i = 0; i < dim; ++i)
            if (state_sig[i] == sectors[r]) columns.push_back(i);
        if (columns.empty())
            throw IndexError("gamma_restricted: sector has no basis states: " + sectors[r].label());
        const double w = 1.0 / static_cast<double>(columns.size());
        for (std::size_t alpha : columns)
            for (std::size_t beta = 0; beta < dim; ++beta) {
                for (std::size_t c = 0; c < n; ++c) {
                    if (state_sig[beta] == sectors[c]) {
                        g.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
                            w * std::norm(s.entries(static_cast<Eigen::Index>(beta),
                                                    static_cast<Eigen::Index>(alpha)));
                        break;
                    }
                }
            }
    }
    return g;
}

void write_gamma_table(std::ostream& os, const GammaMatrix& g) {
    os << "# rows:";
    for (const auto& sig : g.row_labels) os << " " << sig.label();
    os << "\n# cols:";
    for (const auto& sig : g.col_labels) os << " " << sig.label();
    os << "\n";
    char buf[64];
    for (Eigen::Index r = 0; r < g.entries.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.entries.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", g.entries(r, c));
            os << (c ? " " : "") << buf;
        }
        os << "\n";
    }
}

Eigen::MatrixXd read_numeric_table(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw InputError("table contains a non-numeric token: " + line);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("table contains no numeric rows");
    const std::size_t cols = rows.front().size();
    for (const auto& row : rows)
        if (row.size() != cols) throw InputError("table rows have inconsistent lengths");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

namespace {

constexpr double stochastic_tolerance = 1e-6;

double max_moduli_error(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& g) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            worst = std::max(worst, std::abs(std::norm(u(i, j)) - g(i, j)));
    return worst;
}

Eigen::MatrixXcd nearest_unitary(const Eigen::MatrixXcd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

// Alternating projection between the unitary manifold and the fixed-moduli
// set, with random-phase restarts. Deterministic: the restart RNG is seeded
// from a constant.
std::optional<Eigen::MatrixXcd> search_witness(const Eigen::MatrixXd& g, double tol) {
    const Eigen::Index n = g.rows();
    Eigen::MatrixXd root = g.cwiseMax(0.0).cwiseSqrt();
    RngStream rng(0x5eedu);

    for (int restart = 0; restart < 48; ++restart) {
        Eigen::MatrixXcd x(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                const double phi =
                    restart == 0 ? 0.0 : 2.0 * M_PI * rng.uniform01();
                x(i, j) = std::polar(root(i, j), phi);
            }
        Eigen::MatrixXcd u;
        for (int iter = 0; iter < 600; ++iter) {
            u = nearest_unitary(x);
            if (max_moduli_error(u, g) < tol) return u;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double m = std::abs(u(i, j));
                    x(i, j) = m > 1e-300 ? u(i, j) / m * root(i, j) : cplx(root(i, j), 0.0);
                }
        }
    }
    return std::nullopt;
}

}  // namespace

UnistochasticResult is_unistochastic(const Eigen::MatrixXd& g, double tol) {
    if (g.rows() != g.cols() || g.rows() == 0)
        throw InputError("is_unistochastic: matrix must be square and nonempty");
    if (g.minCoeff() < -stochastic_tolerance)
        throw InputError("is_unistochastic: negative entries");
    for (Eigen::Index r = 0; r < g.rows(); ++r)
        if (std::abs(g.row(r).sum() - 1.0) > stochastic_tolerance)
            throw InputError("is_unistochastic: rows must sum to 1");

    UnistochasticResult res;
    const Eigen::Index n = g.rows();

    // a unistochastic matrix is necessarily doubly stochastic
    for (Eigen::Index c = 0; c < n; ++c) {
        if (std::abs(g.col(c).sum() - 1.0) > stochastic_tolerance) {
            res.verdict = UnistochasticVerdict::no;
            res.reason = "not doubly stochastic (column " + std::to_string(c) + ")";
            return res;
        }
    }

    if (n == 1) {
        res.verdict = UnistochasticVerdict::yes;
        res.witness = Eigen::MatrixXcd::Identity(1, 1);
        res.witness_error = std::abs(g(0, 0) - 1.0);
        res.reason = "trivial";
        return res;
    }

    if (n == 2) {
        const double p = std::clamp(g(0, 0), 0.0, 1.0);
        Eigen::MatrixXcd u(2, 2);
        const double sp = std::sqrt(p), sq = std::sqrt(1.0 - p);
        u << sp, sq, sq, -sp;
        res.verdict = UnistochasticVerdict::yes;
        res.witness = u;
        res.witness_error = max_moduli_error(u, g);
        res.reason = "2x2 doubly stochastic, rotation witness";
        return res;
    }

    if (n == 3) {
        // Orthogonality of rows i and j needs the three moduli
        // sqrt(G_ik G_jk) to close into a triangle; same for column pairs.
        auto feasible = [&](bool rows) {
            for (Eigen::Index i = 0; i < 3; ++i)
                for (Eigen::Index j = i + 1; j < 3; ++j) {
                    double m[3];
                    for (Eigen::Index k = 0; k < 3; ++k)
                        m[k] = rows ? std::sqrt(g(i, k) * g(j, k)) : std::sqrt(g(k, i) * g(k, j));
                    const double total = m[0] + m[1] + m[2];
                    const double biggest = std::max({m[0], m[1], m[2]});
                    if (2.0 * biggest > total + 1e-12) return false;
                }
            return true;
        };
        if (!feasible(true) || !feasible(false)) {
            res.verdict = UnistochasticVerdict::no;
            res.reason = "row/column pair orthogonality is infeasible (triangle inequality)";
            return res;
        }
    }

    if (auto witness = search_witness(g, tol)) {
        res.verdict = UnistochasticVerdict::yes;
        res.witness = *witness;
        res.witness_error = max_moduli_error(*witness, g);
        res.reason = "numerical witness";
        return res;
    }
    res.verdict = UnistochasticVerdict::undecided;
    res.reason = "witness search did not converge";
    return res;
}

std::string to_string(UnistochasticVerdict v) {
    switch (v) {
        case UnistochasticVerdict::yes:
            return "true";
        case UnistochasticVerdict::no:
            return "false";
        default:
            return "undecided";
    }
}

}  // namespace fockbox
