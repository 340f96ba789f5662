// fockbox command line front end: scenario runs, invariant check suites,
// unistochasticity verdicts and parameter sweeps.
//
// Exit codes: 0 success, 2 usage/config problems, 3 runtime failures
// (capacity, convergence, accuracy), 4 check-suite failures.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fockbox/checks.hpp"
#include "fockbox/collapse.hpp"
#include "fockbox/scenario.hpp"
#include "fockbox/version.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_runtime = 3;
constexpr int exit_check_failed = 4;

std::string default_output_dir() {
    const char* env = std::getenv("FOCKBOX_OUT_DIR");
    return env ? env : "fockbox_out";
}

std::string resolve_output_dir(const fockbox::ScenarioConfig& config, const std::string& cli_out) {
    if (!cli_out.empty()) return cli_out;
    if (!config.execution.output_dir.empty()) return config.execution.output_dir;
    return default_output_dir();
}

int run_one(fockbox::ScenarioConfig config, const std::string& out_dir) {
    fockbox::RunOutputs outputs = fockbox::run_scenario(config);
    fockbox::write_outputs(outputs, config, out_dir);
    std::cout << "wrote " << outputs.files.size() + 1 << " files to " << out_dir << "\n";
    return exit_ok;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"fockbox: truncated Fock-space scattering with sector collapse"};
    app.set_version_flag("--version", fockbox::engine_version);
    app.require_subcommand(1);

    // run
    auto* run_cmd = app.add_subcommand("run", "execute a scenario config");
    std::string run_config_path, run_out_dir;
    std::int64_t run_seed = -1;
    int run_trials = 0;
    run_cmd->add_option("config", run_config_path, "scenario config file")->required();
    run_cmd->add_option("--out", run_out_dir, "output directory (overrides config)");
    run_cmd->add_option("--seed", run_seed, "root seed (overrides config)");
    run_cmd->add_option("--trials", run_trials, "trial count (overrides config)");

    // check
    auto* check_cmd = app.add_subcommand("check", "run an invariant suite");
    std::string suite, check_json_path;
    check_cmd->add_option("suite", suite, "algebra|dynamics|collapse|locality|measurement|all")
        ->required();
    check_cmd->add_option("--json", check_json_path, "also write the results as JSON");

    // gamma
    auto* gamma_cmd = app.add_subcommand("gamma", "unistochasticity verdict for a Gamma table");
    std::string gamma_path;
    double gamma_tol = 1e-8;
    gamma_cmd->add_option("table", gamma_path, "plain-text numeric table")->required();
    gamma_cmd->add_option("--tol", gamma_tol, "witness tolerance");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run a config across parameter values");
    std::string sweep_config_path, sweep_param, sweep_out_dir;
    std::vector<double> sweep_values;
    sweep_cmd->add_option("config", sweep_config_path, "scenario config file")->required();
    sweep_cmd->add_option("--param", sweep_param, "dotted path of a numeric config leaf")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "parameter values")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (run_cmd->parsed()) {
        fockbox::ScenarioConfig config = fockbox::load_config(run_config_path);
        if (run_seed >= 0) config.execution.seed = static_cast<std::uint64_t>(run_seed);
        if (run_trials > 0) config.execution.trials = run_trials;
        const std::string out_dir = resolve_output_dir(config, run_out_dir);
        return run_one(std::move(config), out_dir);
    }

    if (check_cmd->parsed()) {
        const auto results = fockbox::run_check_suite(suite);
        bool ok = true;
        fockbox::ojson json_results = fockbox::ojson::array();
        for (const auto& r : results) {
            std::cout << (r.passed ? "PASS" : "FAIL") << " " << r.name << ": " << r.details
                      << "\n";
            json_results.push_back(
                {{"name", r.name}, {"passed", r.passed}, {"details", r.details}});
            ok = ok && r.passed;
        }
        std::cout << (ok ? "all checks passed" : "CHECK SUITE FAILED") << " (" << results.size()
                  << " properties)\n";
        if (!check_json_path.empty()) {
            std::ofstream json_file(check_json_path, std::ios::binary | std::ios::trunc);
            if (!json_file) throw fockbox::InputError("cannot write " + check_json_path);
            json_file << fockbox::ojson{{"suite", suite}, {"passed", ok}, {"results", json_results}}
                             .dump(2)
                      << "\n";
        }
        return ok ? exit_ok : exit_check_failed;
    }

    if (gamma_cmd->parsed()) {
        std::ifstream in(gamma_path);
        if (!in) throw fockbox::InputError("cannot read table: " + gamma_path);
        Eigen::MatrixXd table = fockbox::read_numeric_table(in);
        fockbox::UnistochasticResult res = fockbox::is_unistochastic(table, gamma_tol);
        std::cout << "verdict: " << fockbox::to_string(res.verdict) << "\n";
        if (!res.reason.empty()) std::cout << "reason: " << res.reason << "\n";
        if (res.witness) {
            std::cout << "witness (max | |U|^2 - G | = " << res.witness_error << "):\n";
            for (Eigen::Index r = 0; r < res.witness->rows(); ++r) {
                for (Eigen::Index c = 0; c < res.witness->cols(); ++c) {
                    const fockbox::cplx v = (*res.witness)(r, c);
                    std::printf("%s(%.12g%+.12gi)", c ? " " : "", v.real(), v.imag());
                }
                std::printf("\n");
            }
        }
        return exit_ok;
    }

    if (sweep_cmd->parsed()) {
        if (sweep_values.empty())
            throw fockbox::InputError("sweep needs a nonempty --values list");
        fockbox::ScenarioConfig base = fockbox::load_config(sweep_config_path);
        const std::string out_root = resolve_output_dir(base, sweep_out_dir);

        std::string combined = "value,summary_key,summary_value\n";
        for (std::size_t i = 0; i < sweep_values.size(); ++i) {
            fockbox::ojson raw = base.raw;
            fockbox::set_config_value(raw, sweep_param, sweep_values[i]);
            fockbox::ScenarioConfig config =
                fockbox::parse_config(raw.dump(2), sweep_config_path + "#" + std::to_string(i));
            const std::string out_dir = out_root + "/value_" + std::to_string(i);
            fockbox::RunOutputs outputs = fockbox::run_scenario(config);
            fockbox::write_outputs(outputs, config, out_dir);
            char valbuf[64];
            std::snprintf(valbuf, sizeof(valbuf), "%.17g", sweep_values[i]);
            for (const auto& [key, value] : outputs.summary.items()) {
                if (!value.is_number()) continue;
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.17g", value.get<double>());
                combined += std::string(valbuf) + "," + key + "," + buf + "\n";
            }
        }
        std::filesystem::create_directories(out_root);
        std::ofstream combined_file(std::filesystem::path(out_root) / "sweep_combined.csv",
                                    std::ios::binary | std::ios::trunc);
        combined_file << combined;
        std::cout << "sweep finished: " << sweep_values.size() << " runs under " << out_root
                  << "\n";
        return exit_ok;
    }

    return exit_usage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const fockbox::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const fockbox::ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const fockbox::AccuracyError& e) {
        std::cerr << "accuracy error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const fockbox::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return exit_runtime;
    }
}
