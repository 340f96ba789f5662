// Python bindings for the main engine operations: scenario runs, the check
// suites, unistochasticity verdicts and a few direct Monte Carlo entry
// points for notebook use.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fockbox/checks.hpp"
#include "fockbox/collapse.hpp"
#include "fockbox/measurement.hpp"
#include "fockbox/processes.hpp"
#include "fockbox/scenario.hpp"
#include "fockbox/version.hpp"

namespace py = pybind11;

namespace {

py::dict unistochastic_to_dict(const fockbox::UnistochasticResult& res) {
    py::dict out;
    out["verdict"] = fockbox::to_string(res.verdict);
    out["reason"] = res.reason;
    if (res.witness) {
        std::vector<std::vector<std::complex<double>>> rows;
        for (Eigen::Index r = 0; r < res.witness->rows(); ++r) {
            std::vector<std::complex<double>> row;
            for (Eigen::Index c = 0; c < res.witness->cols(); ++c)
                row.push_back((*res.witness)(r, c));
            rows.push_back(std::move(row));
        }
        out["witness"] = rows;
        out["witness_error"] = res.witness_error;
    } else {
        out["witness"] = py::none();
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Truncated Fock-space scattering with stochastic sector collapse";

    py::register_exception<fockbox::Error>(m, "EngineError");

    m.def("version", [] { return std::string(fockbox::engine_version); });

    m.def(
        "run_scenario",
        [](const std::string& config_path, const std::string& out_dir, std::int64_t seed,
           int trials) {
            fockbox::ScenarioConfig config = fockbox::load_config(config_path);
            if (seed >= 0) config.execution.seed = static_cast<std::uint64_t>(seed);
            if (trials > 0) config.execution.trials = trials;
            fockbox::RunOutputs outputs = fockbox::run_scenario(config);
            if (!out_dir.empty()) fockbox::write_outputs(outputs, config, out_dir);
            return outputs.summary.dump();
        },
        py::arg("config_path"), py::arg("out_dir") = std::string(), py::arg("seed") = -1,
        py::arg("trials") = 0,
        "Run a scenario config; returns the summary as a JSON string. Writes "
        "CSV/JSON/manifest files when out_dir is given.");

    m.def(
        "check_suite",
        [](const std::string& suite) {
            std::vector<std::tuple<std::string, bool, std::string>> out;
            for (const auto& r : fockbox::run_check_suite(suite))
                out.emplace_back(r.name, r.passed, r.details);
            return out;
        },
        py::arg("suite"),
        "Run an invariant suite (algebra, dynamics, collapse, locality, "
        "measurement, all); returns (name, passed, details) tuples.");

    m.def(
        "is_unistochastic",
        [](const std::vector<std::vector<double>>& rows, double tol) {
            if (rows.empty()) throw fockbox::InputError("empty matrix");
            const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
            Eigen::MatrixXd g(n, static_cast<Eigen::Index>(rows.front().size()));
            for (Eigen::Index r = 0; r < n; ++r) {
                if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) !=
                    g.cols())
                    throw fockbox::InputError("ragged matrix");
                for (Eigen::Index c = 0; c < g.cols(); ++c)
                    g(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            return unistochastic_to_dict(fockbox::is_unistochastic(g, tol));
        },
        py::arg("matrix"), py::arg("tol") = 1e-8,
        "Verdict ('true'/'false'/'undecided') plus witness for G_ij = |U_ij|^2.");

    m.def(
        "decay_jump_times",
        [](double tau, int trials, std::uint64_t seed) {
            return fockbox::sample_decay_times(tau, trials, fockbox::RngStream(seed));
        },
        py::arg("tau"), py::arg("trials"), py::arg("seed"),
        "Sample decay jump times t_d ~ Exponential(rate 2 tau).");

    m.def(
        "double_slit_histogram",
        [](const std::vector<std::complex<double>>& profile, int trials, std::uint64_t seed) {
            return fockbox::double_slit_scenario(profile, fockbox::RngStream(seed), trials)
                .histogram;
        },
        py::arg("profile"), py::arg("trials"), py::arg("seed"),
        "Per-cell hit counts for a normalized screen amplitude profile.");

    m.def(
        "epr_correlation",
        [](double theta_a, double theta_b, int trials, std::uint64_t seed) {
            fockbox::EprReport r =
                fockbox::epr_scenario(theta_a, theta_b, fockbox::RngStream(seed), trials);
            py::dict out;
            out["correlation"] = r.correlation;
            out["marginal_a_plus"] = r.marginal_a_plus;
            out["marginal_b_plus"] = r.marginal_b_plus;
            out["min_run_product"] = r.min_run_product;
            out["counts"] = std::vector<std::vector<std::size_t>>{
                {r.counts[0][0], r.counts[0][1]}, {r.counts[1][0], r.counts[1][1]}};
            return out;
        },
        py::arg("theta_a"), py::arg("theta_b"), py::arg("trials"), py::arg("seed"),
        "Joint-collapse EPR statistics for two analyzer angles (radians).");

    m.def(
        "pair_production_frequencies",
        [](int trials, std::uint64_t seed, double coupling_e, double coupling_mu) {
            fockbox::InteractionModel model =
                fockbox::make_pair_production_model(coupling_e, coupling_mu);
            fockbox::FrequencyReport report =
                fockbox::pair_production_scenario(model, fockbox::RngStream(seed), trials);
            py::dict out;
            for (const auto& e : report.entries) {
                py::dict entry;
                entry["probability"] = e.probability;
                entry["frequency"] = e.frequency;
                entry["count"] = e.count;
                out[py::str(e.signature.label())] = entry;
            }
            return out;
        },
        py::arg("trials"), py::arg("seed"), py::arg("coupling_e") = 0.12,
        py::arg("coupling_mu") = 0.12,
        "Sector probabilities and sampled frequencies of the bundled pair-production toy.");
}
