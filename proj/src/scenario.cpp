#include "fockbox/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fockbox/locality.hpp"
#include "fockbox/stats.hpp"
#include "fockbox/version.hpp"

namespace fockbox {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw InputError("config error at " + (path.empty() ? "<root>" : path) + ": " + message);
}

void expect_object(const ojson& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

// Unknown keys are rejected so typos never silently fall back to defaults.
void check_keys(const ojson& j, const std::string& path, const std::set<std::string>& known) {
    expect_object(j, path);
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) fail(path, "unknown key '" + key + "'");
}

double get_number(const ojson& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int get_int(const ojson& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string get_string(const ojson& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::array<int, 3> get_momentum(const ojson& j, const std::string& path, int dims) {
    if (!j.is_array() || static_cast<int>(j.size()) != dims)
        fail(path, "expected an array of " + std::to_string(dims) + " momentum components");
    std::array<int, 3> p{0, 0, 0};
    for (int d = 0; d < dims; ++d) p[static_cast<std::size_t>(d)] = get_int(j[static_cast<std::size_t>(d)], path);
    return p;
}

cplx get_complex(const ojson& j, const std::string& path) {
    if (j.is_number()) return cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return cplx(j[0].get<double>(), j[1].get<double>());
    fail(path, "expected a number or [re, im] pair");
}

RegistryPtr parse_registry(const ojson& block, const std::string& path) {
    check_keys(block, path, {"n_max", "momentum_grid", "species", "modes"});
    if (!block.contains("n_max")) fail(path, "missing required key 'n_max'");
    if (!block.contains("species")) fail(path, "missing required key 'species'");
    if (!block.contains("modes")) fail(path, "missing required key 'modes'");

    Registry::Builder builder;
    MomentumGrid grid;
    if (block.contains("momentum_grid")) {
        const ojson& g = block["momentum_grid"];
        const std::string gpath = path + ".momentum_grid";
        check_keys(g, gpath, {"dims", "min", "max"});
        grid.dims = g.contains("dims") ? get_int(g["dims"], gpath + ".dims") : 1;
        if (grid.dims < 1 || grid.dims > 3) fail(gpath + ".dims", "dims must be 1..3");
        if (g.contains("min")) grid.min = get_momentum(g["min"], gpath + ".min", grid.dims);
        if (g.contains("max")) grid.max = get_momentum(g["max"], gpath + ".max", grid.dims);
    }
    builder.grid(grid);
    builder.truncation(get_int(block["n_max"], path + ".n_max"));

    const ojson& species = block["species"];
    if (!species.is_array() || species.empty()) fail(path + ".species", "expected a nonempty array");
    for (std::size_t i = 0; i < species.size(); ++i) {
        const std::string spath = path + ".species." + std::to_string(i);
        const ojson& s = species[i];
        check_keys(s, spath, {"id", "statistics", "mass", "charge", "max_occupation"});
        if (!s.contains("id")) fail(spath, "missing required key 'id'");
        ParticleSpecies ps;
        ps.id = get_string(s["id"], spath + ".id");
        if (s.contains("statistics")) {
            const std::string st = get_string(s["statistics"], spath + ".statistics");
            if (st == "boson")
                ps.statistics = Statistics::boson;
            else if (st == "fermion")
                ps.statistics = Statistics::fermion;
            else
                fail(spath + ".statistics", "expected 'boson' or 'fermion'");
        }
        if (s.contains("mass")) ps.mass = get_number(s["mass"], spath + ".mass");
        if (s.contains("charge")) ps.charge = get_int(s["charge"], spath + ".charge");
        if (s.contains("max_occupation"))
            ps.max_occupation = get_int(s["max_occupation"], spath + ".max_occupation");
        try {
            builder.species(ps);
        } catch (const RegistryError& e) {
            fail(spath, e.what());
        }
    }

    const ojson& modes = block["modes"];
    if (!modes.is_array() || modes.empty()) fail(path + ".modes", "expected a nonempty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string mpath = path + ".modes." + std::to_string(i);
        const ojson& m = modes[i];
        check_keys(m, mpath, {"species", "momentum", "spin", "on_grid"});
        if (!m.contains("species")) fail(mpath, "missing required key 'species'");
        const std::string id = get_string(m["species"], mpath + ".species");
        try {
            if (m.contains("on_grid") && m["on_grid"].is_boolean() && m["on_grid"].get<bool>()) {
                builder.modes_on_grid(id, m.contains("spin") ? get_int(m["spin"], mpath + ".spin") : 0);
            } else {
                std::array<int, 3> p{0, 0, 0};
                if (m.contains("momentum")) p = get_momentum(m["momentum"], mpath + ".momentum", grid.dims);
                builder.mode(id, p, m.contains("spin") ? get_int(m["spin"], mpath + ".spin") : 0);
            }
        } catch (const RegistryError& e) {
            fail(mpath, e.what());
        }
    }
    try {
        return builder.build();
    } catch (const RegistryError& e) {
        fail(path, e.what());
    }
}

ModeIndex parse_mode_ref(const ojson& j, const std::string& path, const Registry& reg) {
    check_keys(j, path, {"species", "momentum", "spin"});
    if (!j.contains("species")) fail(path, "missing required key 'species'");
    const std::string id = get_string(j["species"], path + ".species");
    std::array<int, 3> p{0, 0, 0};
    if (j.contains("momentum")) p = get_momentum(j["momentum"], path + ".momentum", reg.grid().dims);
    const int spin = j.contains("spin") ? get_int(j["spin"], path + ".spin") : 0;
    try {
        return reg.mode_index(id, p, spin);
    } catch (const RegistryError& e) {
        fail(path, e.what());
    }
}

InteractionModel parse_model(const ojson& block, const std::string& path, RegistryPtr reg) {
    check_keys(block, path,
               {"free_terms", "interaction_terms", "switching_epsilon", "time_step", "t_schedule",
                "dimension_cap"});
    InteractionModel model;
    model.registry = std::move(reg);

    if (block.contains("free_terms")) {
        const ojson& terms = block["free_terms"];
        if (!terms.is_array()) fail(path + ".free_terms", "expected an array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string tpath = path + ".free_terms." + std::to_string(i);
            check_keys(terms[i], tpath, {"mode", "energy"});
            if (!terms[i].contains("mode") || !terms[i].contains("energy"))
                fail(tpath, "free term needs 'mode' and 'energy'");
            model.free_terms.push_back({parse_mode_ref(terms[i]["mode"], tpath + ".mode", *model.registry),
                                        get_number(terms[i]["energy"], tpath + ".energy")});
        }
    }
    if (block.contains("interaction_terms")) {
        const ojson& terms = block["interaction_terms"];
        if (!terms.is_array()) fail(path + ".interaction_terms", "expected an array");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string tpath = path + ".interaction_terms." + std::to_string(i);
            check_keys(terms[i], tpath, {"coupling", "factors"});
            if (!terms[i].contains("coupling") || !terms[i].contains("factors"))
                fail(tpath, "interaction term needs 'coupling' and 'factors'");
            InteractionTerm term;
            term.coupling = get_complex(terms[i]["coupling"], tpath + ".coupling");
            const ojson& factors = terms[i]["factors"];
            if (!factors.is_array() || factors.empty()) fail(tpath + ".factors", "expected a nonempty array");
            for (std::size_t f = 0; f < factors.size(); ++f) {
                const std::string fpath = tpath + ".factors." + std::to_string(f);
                check_keys(factors[f], fpath, {"op", "mode"});
                if (!factors[f].contains("op") || !factors[f].contains("mode"))
                    fail(fpath, "factor needs 'op' and 'mode'");
                const std::string op = get_string(factors[f]["op"], fpath + ".op");
                LadderKind kind;
                if (op == "create")
                    kind = LadderKind::create;
                else if (op == "annihilate")
                    kind = LadderKind::annihilate;
                else
                    fail(fpath + ".op", "expected 'create' or 'annihilate'");
                term.factors.push_back(
                    {kind, parse_mode_ref(factors[f]["mode"], fpath + ".mode", *model.registry)});
            }
            model.interaction_terms.push_back(std::move(term));
        }
    }
    if (block.contains("switching_epsilon"))
        model.switching_epsilon = get_number(block["switching_epsilon"], path + ".switching_epsilon");
    if (block.contains("time_step"))
        model.time_step = get_number(block["time_step"], path + ".time_step");
    if (block.contains("t_schedule")) {
        const ojson& sched = block["t_schedule"];
        if (!sched.is_array() || sched.empty()) fail(path + ".t_schedule", "expected a nonempty array");
        model.t_schedule.clear();
        for (std::size_t i = 0; i < sched.size(); ++i)
            model.t_schedule.push_back(get_number(sched[i], path + ".t_schedule." + std::to_string(i)));
    }
    if (block.contains("dimension_cap"))
        model.dimension_cap = get_int(block["dimension_cap"], path + ".dimension_cap");
    return model;
}

BasisState parse_basis_state(const ojson& j, const std::string& path, const Registry& reg) {
    if (!j.is_array()) fail(path, "expected an array of {mode, count} entries");
    std::vector<std::pair<ModeIndex, std::uint32_t>> occ;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string epath = path + "." + std::to_string(i);
        check_keys(j[i], epath, {"mode", "count"});
        if (!j[i].contains("mode")) fail(epath, "missing required key 'mode'");
        const int count = j[i].contains("count") ? get_int(j[i]["count"], epath + ".count") : 1;
        if (count < 1) fail(epath + ".count", "count must be >= 1");
        occ.emplace_back(parse_mode_ref(j[i]["mode"], epath + ".mode", reg),
                         static_cast<std::uint32_t>(count));
    }
    BasisState state(std::move(occ));
    try {
        state.validate(reg);
    } catch (const RegistryError& e) {
        fail(path, e.what());
    }
    return state;
}

const std::set<std::string> known_process_types{
    "decay",      "pair_production", "absorption", "double_slit",  "epr",
    "polarization", "trajectory",    "no_signaling", "dyson_check"};

ProcessBlock parse_process(const ojson& block, const std::string& path, const RegistryPtr& reg) {
    expect_object(block, path);
    if (!block.contains("type")) fail(path, "missing required key 'type'");
    ProcessBlock process;
    process.type = get_string(block["type"], path + ".type");
    if (!known_process_types.count(process.type))
        fail(path + ".type", "unknown process type '" + process.type + "'");

    if (process.type == "decay") {
        check_keys(block, path,
                   {"type", "tau", "horizon", "window", "observation_points", "s_values",
                    "interaction_window"});
        if (block.contains("tau")) process.decay.tau = get_number(block["tau"], path + ".tau");
        if (block.contains("interaction_window"))
            process.decay.interaction_window =
                get_number(block["interaction_window"], path + ".interaction_window");
        if (block.contains("horizon"))
            process.decay.horizon = get_number(block["horizon"], path + ".horizon");
        if (block.contains("window"))
            process.decay.window = get_number(block["window"], path + ".window");
        if (block.contains("observation_points"))
            process.decay.observation_points =
                get_int(block["observation_points"], path + ".observation_points");
        if (block.contains("s_values")) {
            const ojson& sv = block["s_values"];
            if (!sv.is_array()) fail(path + ".s_values", "expected an array");
            for (std::size_t i = 0; i < sv.size(); ++i)
                process.s_values.push_back(get_number(sv[i], path + ".s_values." + std::to_string(i)));
        }
        try {
            process.decay.validate();
        } catch (const DomainError& e) {
            fail(path, e.what());
        }
    } else if (process.type == "pair_production" || process.type == "absorption") {
        check_keys(block, path, {"type", "in_state"});
        if (!reg) fail(path, "process '" + process.type + "' needs a registry block");
        if (block.contains("in_state"))
            process.in_state = parse_basis_state(block["in_state"], path + ".in_state", *reg);
    } else if (process.type == "double_slit") {
        check_keys(block, path, {"type", "profile"});
        if (!block.contains("profile")) fail(path, "missing required key 'profile'");
        const ojson& profile = block["profile"];
        if (!profile.is_array() || profile.empty()) fail(path + ".profile", "expected a nonempty array");
        for (std::size_t i = 0; i < profile.size(); ++i)
            process.profile.push_back(get_complex(profile[i], path + ".profile." + std::to_string(i)));
        double total = 0.0;
        for (const cplx& a : process.profile) total += std::norm(a);
        if (std::abs(total - 1.0) > 1e-9)
            fail(path + ".profile", "profile must be normalized (sum |a|^2 = 1)");
    } else if (process.type == "epr") {
        check_keys(block, path, {"type", "theta_a_deg", "theta_b_deg"});
        if (block.contains("theta_a_deg"))
            process.theta_a = get_number(block["theta_a_deg"], path + ".theta_a_deg") * M_PI / 180.0;
        if (block.contains("theta_b_deg"))
            process.theta_b = get_number(block["theta_b_deg"], path + ".theta_b_deg") * M_PI / 180.0;
    } else if (process.type == "polarization") {
        check_keys(block, path, {"type", "analyzer_angle_deg", "input_angle_deg"});
        if (block.contains("analyzer_angle_deg"))
            process.analyzer_angle =
                get_number(block["analyzer_angle_deg"], path + ".analyzer_angle_deg") * M_PI / 180.0;
        if (block.contains("input_angle_deg"))
            process.input_angle =
                get_number(block["input_angle_deg"], path + ".input_angle_deg") * M_PI / 180.0;
    } else if (process.type == "trajectory") {
        check_keys(block, path, {"type", "n_steps", "step_amplitudes"});
        if (!block.contains("n_steps")) fail(path, "missing required key 'n_steps'");
        process.n_steps = get_int(block["n_steps"], path + ".n_steps");
        if (!block.contains("step_amplitudes")) fail(path, "missing required key 'step_amplitudes'");
        const ojson& steps = block["step_amplitudes"];
        if (!steps.is_array() || steps.empty())
            fail(path + ".step_amplitudes", "expected a nonempty array");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const std::string spath = path + ".step_amplitudes." + std::to_string(i);
            check_keys(steps[i], spath, {"displacement", "amplitude"});
            if (!steps[i].contains("displacement") || !steps[i].contains("amplitude"))
                fail(spath, "entry needs 'displacement' and 'amplitude'");
            process.step_model.displacement_amplitudes.emplace_back(
                get_int(steps[i]["displacement"], spath + ".displacement"),
                get_complex(steps[i]["amplitude"], spath + ".amplitude"));
        }
    } else if (process.type == "no_signaling") {
        check_keys(block, path, {"type", "p_m"});
        if (block.contains("p_m")) process.p_m = get_number(block["p_m"], path + ".p_m");
        if (process.p_m < 0.0 || process.p_m > 1.0) fail(path + ".p_m", "p_m must be in [0,1]");
    } else if (process.type == "dyson_check") {
        check_keys(block, path, {"type", "order", "tau0", "tau", "steps"});
        if (!reg) fail(path, "process 'dyson_check' needs a registry block");
        if (block.contains("order")) process.dyson_order = get_int(block["order"], path + ".order");
        if (process.dyson_order < 0 || process.dyson_order > 4)
            fail(path + ".order", "order must be 0..4");
        if (block.contains("tau0")) process.dyson_tau0 = get_number(block["tau0"], path + ".tau0");
        if (block.contains("tau")) process.dyson_tau = get_number(block["tau"], path + ".tau");
        if (block.contains("steps")) process.dyson_steps = get_int(block["steps"], path + ".steps");
    }
    return process;
}

ExecutionBlock parse_execution(const ojson& block, const std::string& path) {
    check_keys(block, path, {"trials", "seed", "output_dir", "tolerance_overrides"});
    ExecutionBlock exec;
    if (block.contains("trials")) {
        exec.trials = get_int(block["trials"], path + ".trials");
        if (exec.trials < 1) fail(path + ".trials", "trials must be >= 1");
    }
    if (block.contains("seed")) {
        if (!block["seed"].is_number_integer()) fail(path + ".seed", "expected an integer");
        exec.seed = block["seed"].get<std::uint64_t>();
    }
    if (block.contains("output_dir"))
        exec.output_dir = get_string(block["output_dir"], path + ".output_dir");
    if (block.contains("tolerance_overrides")) {
        const ojson& tol = block["tolerance_overrides"];
        const std::string tpath = path + ".tolerance_overrides";
        check_keys(tol, tpath, {"sector_epsilon", "stabilization"});
        if (tol.contains("sector_epsilon"))
            exec.sector_epsilon = get_number(tol["sector_epsilon"], tpath + ".sector_epsilon");
        if (tol.contains("stabilization"))
            exec.stabilization_tolerance = get_number(tol["stabilization"], tpath + ".stabilization");
    }
    return exec;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
    ojson raw;
    try {
        raw = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // anchor the parse error to a line/column
        std::size_t offset = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": JSON parse error: " + e.what());
    }

    check_keys(raw, "", {"registry", "model", "process", "execution"});
    if (!raw.contains("process")) fail("", "missing required key 'process'");

    ScenarioConfig config;
    config.raw = raw;
    config.source_path = origin;
    config.source_bytes = text;

    if (raw.contains("registry")) config.registry = parse_registry(raw["registry"], "registry");
    if (raw.contains("model")) {
        if (!config.registry) fail("model", "a model block needs a registry block");
        config.model = parse_model(raw["model"], "model", config.registry);
    }
    config.process = parse_process(raw["process"], "process", config.registry);
    if (raw.contains("execution")) config.execution = parse_execution(raw["execution"], "execution");

    const bool needs_model = config.process.type == "pair_production" ||
                             config.process.type == "absorption" ||
                             config.process.type == "dyson_check";
    if (needs_model && !config.model)
        fail("process", "process '" + config.process.type + "' needs a model block");
    return config;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

namespace {

std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ",";
        line += cells[i];
    }
    line += "\n";
    return line;
}

ojson s_matrix_summary(const SMatrix& s) {
    double max_col_defect = 0.0;
    for (Eigen::Index c = 0; c < s.entries.cols(); ++c)
        max_col_defect = std::max(max_col_defect, std::abs(s.entries.col(c).squaredNorm() - 1.0));
    return ojson{{"dimension", s.basis.dim()},
                 {"unitarity_defect", s.unitarity_defect},
                 {"stabilization_delta", s.stabilization_delta},
                 {"time_horizon", s.time_horizon},
                 {"max_column_sum_defect", max_col_defect}};
}

RunOutputs run_decay(const ScenarioConfig& config) {
    const DecaySpec& spec = config.process.decay;
    RngStream root(config.execution.seed);
    const int trials = config.execution.trials;
    std::vector<double> times = sample_decay_times(spec.tau, trials, root);

    std::string csv = "trial,seed_path,chosen_signature,jump_time\n";
    std::size_t jumps = 0;
    double mean = 0.0;
    for (int k = 0; k < trials; ++k) {
        const double t = times[static_cast<std::size_t>(k)];
        const bool jumped = t <= spec.horizon;
        if (jumped) ++jumps;
        mean += t;
        csv += csv_join({std::to_string(k), root.substream(static_cast<std::uint64_t>(k)).path(),
                         jumped ? "P_s|Q" : "P_u", jumped ? fmt_double(t) : ""});
    }
    mean /= static_cast<double>(trials);

    const double d = ks_statistic(times, [&](double t) { return exponential_cdf(t, 2.0 * spec.tau); });
    const double p = ks_p_value(d, static_cast<std::size_t>(trials));

    // survival curve against e^{-2 tau t} on the observation grid
    double max_survival_sigma = 0.0;
    ojson survival = ojson::array();
    for (int i = 0; i < spec.observation_points; ++i) {
        const double t = spec.horizon * static_cast<double>(i) /
                         static_cast<double>(spec.observation_points - 1);
        std::size_t alive = 0;
        for (double td : times)
            if (td > t) ++alive;
        const double expectation = decay_survival_probability(spec.tau, t);
        const double freq = static_cast<double>(alive) / static_cast<double>(trials);
        const double sigma =
            std::sqrt(std::max(1e-300, expectation * (1.0 - expectation) / trials));
        const double dev = std::abs(freq - expectation) / sigma;
        if (i > 0 && i < spec.observation_points - 1)
            max_survival_sigma = std::max(max_survival_sigma, dev);
        survival.push_back(
            {{"t", t}, {"empirical", freq}, {"expected", expectation}, {"sigma_dev", dev}});
    }

    std::vector<double> s_values = config.process.s_values;
    if (s_values.empty()) {
        const double step = 0.5 / spec.tau;
        for (double s = 0.0; s + spec.window <= spec.horizon && s_values.size() < 4; s += step)
            s_values.push_back(s);
    }
    TimeTranslationReport tt = time_translation_diagnostic(spec, s_values, root, trials);
    ojson tt_rows = ojson::array();
    for (const auto& row : tt.rows)
        tt_rows.push_back({{"s", row.s},
                           {"collapse_conditional_mc", row.collapse_conditional_mc},
                           {"collapse_conditional_exact", row.collapse_conditional_exact},
                           {"survivors", row.survivors},
                           {"unitary_window_weight", row.unitary_window_weight}});

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "decay"},
                        {"trials", trials},
                        {"seed", config.execution.seed},
                        {"tau", spec.tau},
                        {"horizon", spec.horizon},
                        {"window", spec.window},
                        {"jump_fraction", static_cast<double>(jumps) / trials},
                        {"mean_jump_time", mean},
                        {"expected_mean_jump_time", 1.0 / (2.0 * spec.tau)},
                        {"ks_statistic", d},
                        {"ks_p_value", p},
                        {"max_survival_sigma", max_survival_sigma},
                        {"memorylessness_max_sigma", tt.max_conditional_spread_sigma},
                        {"time_translation", tt_rows},
                        {"survival_curve", survival}};
    out.files.emplace_back("decay_trials.csv", std::move(csv));
    return out;
}

RunOutputs run_scatter(const ScenarioConfig& config) {
    InteractionModel model = *config.model;
    const RegistryPtr& reg = model.registry;

    BasisState in_state;
    if (config.process.in_state) {
        in_state = *config.process.in_state;
    } else if (config.process.type == "absorption") {
        in_state = BasisState({{reg->sole_mode("gamma"), 1}, {reg->sole_mode("A"), 1}});
    } else {
        in_state = BasisState({{reg->sole_mode("gamma"), 1}});
    }

    SMatrix s = extract_s_matrix(model, config.execution.stabilization_tolerance);
    StateVector out_state = normalize(apply_s(s, StateVector(reg, in_state)));
    const ContentSignature in_sig = signature(*reg, in_state);

    RngStream root(config.execution.seed);
    const int trials = config.execution.trials;

    std::string csv = "trial,seed_path,chosen_signature\n";
    std::map<ContentSignature, std::size_t> counts;
    std::size_t cross_sector = 0;
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        CollapseEvent event =
            collapse_sample(stream, out_state, in_sig, 0.0, config.execution.sector_epsilon);
        if (is_cross_sector_superposition(event.post_state, config.execution.sector_epsilon))
            ++cross_sector;
        ++counts[event.chosen_signature];
        csv += csv_join({std::to_string(k), event.rng_seed_path, event.chosen_signature.label()});
    }

    const auto probs = sector_probabilities(out_state, config.execution.sector_epsilon);
    double prob_sum = 0.0, max_sigma = 0.0;
    ojson sectors = ojson::array();
    for (const auto& [sig, prob] : probs) {
        prob_sum += prob;
        const auto it = counts.find(sig);
        const std::size_t count = it == counts.end() ? 0 : it->second;
        const double freq = static_cast<double>(count) / trials;
        const double sigma = std::sqrt(prob * (1.0 - prob) / trials);
        if (sigma > 0.0) max_sigma = std::max(max_sigma, std::abs(freq - prob) / sigma);
        sectors.push_back({{"signature", sig.label()},
                           {"probability", prob},
                           {"count", count},
                           {"frequency", freq}});
    }

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", config.process.type},
                        {"trials", trials},
                        {"seed", config.execution.seed},
                        {"in_state", in_state.label(*reg)},
                        {"in_signature", in_sig.label()},
                        {"sectors", sectors},
                        {"probability_sum", prob_sum},
                        {"max_abs_sigma", max_sigma},
                        {"cross_sector_post_states", cross_sector},
                        {"s_matrix", s_matrix_summary(s)}};
    out.files.emplace_back(config.process.type + "_trials.csv", std::move(csv));

    // sector-aggregated Gamma over the out-state's sectors, in the plain-text
    // format the `gamma` subcommand reads back
    std::vector<ContentSignature> out_sectors;
    for (const auto& [sig, prob] : probs) out_sectors.push_back(sig);
    std::ostringstream gamma_text;
    write_gamma_table(gamma_text, gamma_restricted(s, out_sectors));
    out.files.emplace_back("gamma_sectors.txt", gamma_text.str());
    return out;
}

RunOutputs run_double_slit(const ScenarioConfig& config) {
    RngStream root(config.execution.seed);
    const int trials = config.execution.trials;
    DoubleSlitResult result = double_slit_scenario(config.process.profile, root, trials);

    std::string csv = "trial,seed_path,cell\n";
    for (int k = 0; k < trials; ++k)
        csv += csv_join({std::to_string(k), result.seed_paths[static_cast<std::size_t>(k)],
                         std::to_string(result.hits[static_cast<std::size_t>(k)])});

    double max_sigma = 0.0;
    ojson cells = ojson::array();
    for (std::size_t i = 0; i < result.histogram.size(); ++i) {
        const double p = std::norm(config.process.profile[i]);
        const double freq = static_cast<double>(result.histogram[i]) / trials;
        const double sigma = std::sqrt(p * (1.0 - p) / trials);
        const double dev = sigma > 0.0 ? std::abs(freq - p) / sigma : 0.0;
        max_sigma = std::max(max_sigma, dev);
        cells.push_back({{"cell", i},
                         {"count", result.histogram[i]},
                         {"frequency", freq},
                         {"expected", p},
                         {"sigma_dev", dev}});
    }

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "double_slit"},
                        {"trials", trials},
                        {"seed", config.execution.seed},
                        {"cells", cells},
                        {"max_cell_sigma", max_sigma}};
    out.files.emplace_back("double_slit_trials.csv", std::move(csv));
    return out;
}

RunOutputs run_epr(const ScenarioConfig& config) {
    RngStream root(config.execution.seed);
    const int trials = config.execution.trials;
    EprReport report = epr_scenario(config.process.theta_a, config.process.theta_b, root, trials);

    std::string csv = "trial,seed_path,region_a,region_b,eigenvalue_a,eigenvalue_b,product\n";
    for (std::size_t k = 0; k < report.runs.size(); ++k) {
        const EprRun& run = report.runs[k];
        const int ea = run.a == 0 ? 1 : -1;
        const int eb = run.b == 0 ? 1 : -1;
        csv += csv_join({std::to_string(k), run.seed_path, run.a == 0 ? "+" : "-",
                         run.b == 0 ? "+" : "-", std::to_string(ea), std::to_string(eb),
                         std::to_string(ea * eb)});
    }

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "epr"},
                        {"trials", trials},
                        {"seed", config.execution.seed},
                        {"theta_a_deg", config.process.theta_a * 180.0 / M_PI},
                        {"theta_b_deg", config.process.theta_b * 180.0 / M_PI},
                        {"counts",
                         {{"++", report.counts[0][0]},
                          {"+-", report.counts[0][1]},
                          {"-+", report.counts[1][0]},
                          {"--", report.counts[1][1]}}},
                        {"correlation", report.correlation},
                        {"min_run_product", report.min_run_product},
                        {"marginal_a_plus", report.marginal_a_plus},
                        {"marginal_b_plus", report.marginal_b_plus},
                        {"chi_square", report.chi_square},
                        {"chi_square_dof", report.chi_square_dof},
                        {"chi_square_p", report.chi_square_p}};
    out.files.emplace_back("epr_trials.csv", std::move(csv));
    return out;
}

RunOutputs run_polarization(const ScenarioConfig& config) {
    MeasurementScenario scenario = make_polarization_scenario(config.process.analyzer_angle);
    StateVector in = probe_state(
        scenario, {std::cos(config.process.input_angle), std::sin(config.process.input_angle)});

    RngStream root(config.execution.seed);
    const int trials = config.execution.trials;
    std::string csv = "trial,seed_path,fired_region,eigenvalue\n";
    std::map<std::string, std::size_t> counts;
    for (int k = 0; k < trials; ++k) {
        RngStream stream = root.substream(static_cast<std::uint64_t>(k));
        MeasurementRecord record = run_measurement(scenario, in, stream);
        ++counts[record.fired_region];
        csv += csv_join({std::to_string(k), record.event.rng_seed_path, record.fired_region,
                         fmt_double(record.reported_eigenvalue)});
    }

    const double rel = config.process.input_angle - config.process.analyzer_angle;
    const double expected_parallel = std::cos(rel) * std::cos(rel);
    const double freq_parallel = static_cast<double>(counts["parallel"]) / trials;
    const double sigma =
        std::sqrt(std::max(1e-300, expected_parallel * (1.0 - expected_parallel) / trials));

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "polarization"},
                        {"trials", trials},
                        {"seed", config.execution.seed},
                        {"analyzer_angle_deg", config.process.analyzer_angle * 180.0 / M_PI},
                        {"input_angle_deg", config.process.input_angle * 180.0 / M_PI},
                        {"frequency_parallel", freq_parallel},
                        {"expected_parallel", expected_parallel},
                        {"sigma_dev", std::abs(freq_parallel - expected_parallel) / sigma}};
    out.files.emplace_back("polarization_trials.csv", std::move(csv));
    return out;
}

RunOutputs run_trajectory(const ScenarioConfig& config) {
    RngStream root(config.execution.seed);
    RngStream stream = root.substream(0);
    TrajectoryResult result =
        trajectory_scenario(config.process.n_steps, config.process.step_model, stream);

    std::string csv = "step,seed_path,chosen_signature,cell\n";
    for (std::size_t i = 0; i < result.events.size(); ++i)
        csv += csv_join({std::to_string(i), result.events[i].rng_seed_path,
                         result.events[i].chosen_signature.label(),
                         std::to_string(result.cells[i])});

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "trajectory"},
                        {"trials", 1},
                        {"seed", config.execution.seed},
                        {"n_steps", config.process.n_steps},
                        {"inferred_drift", result.inferred_drift},
                        {"expected_drift", result.expected_drift}};
    out.files.emplace_back("trajectory_steps.csv", std::move(csv));
    return out;
}

RunOutputs run_dyson_check(const ScenarioConfig& config) {
    const InteractionModel& model = *config.model;
    FockBasis basis = enumerate_basis(*model.registry, model.dimension_cap);
    Hamiltonians hams = build_hamiltonians(model, basis);
    const ProcessBlock& p = config.process;
    const Eigen::MatrixXcd exact = interaction_picture_u(hams, p.dyson_tau0, p.dyson_tau);
    const Eigen::MatrixXcd approx =
        dyson_truncated(hams, p.dyson_order, p.dyson_tau0, p.dyson_tau, p.dyson_steps);
    const double defect = (exact - approx).norm();

    double coupling_scale = 0.0;
    for (const auto& term : model.interaction_terms)
        coupling_scale = std::max(coupling_scale, std::abs(term.coupling));

    std::string csv = "order,tau0,tau,steps,coupling_scale,defect\n";
    csv += csv_join({std::to_string(p.dyson_order), fmt_double(p.dyson_tau0),
                     fmt_double(p.dyson_tau), std::to_string(p.dyson_steps),
                     fmt_double(coupling_scale), fmt_double(defect)});

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "dyson_check"},
                        {"trials", 1},
                        {"seed", config.execution.seed},
                        {"order", p.dyson_order},
                        {"tau0", p.dyson_tau0},
                        {"tau", p.dyson_tau},
                        {"steps", p.dyson_steps},
                        {"coupling_scale", coupling_scale},
                        {"defect", defect}};
    out.files.emplace_back("dyson_check.csv", std::move(csv));
    return out;
}

RunOutputs run_no_signaling(const ScenarioConfig& config) {
    RngStream root(config.execution.seed);
    SignalingReport hypothetical =
        no_signaling_mc(config.process.p_m, static_cast<std::size_t>(config.execution.trials),
                        root.substream(0));
    SignalingReport engine = engine_two_detector_mc(
        static_cast<std::size_t>(config.execution.trials), root.substream(1));

    auto to_json = [](const SignalingReport& r) {
        return ojson{{"p_m", r.p_m},
                     {"p_both_on", r.p_both_on},
                     {"p_one_off", r.p_one_off},
                     {"z_statistic", r.z_statistic},
                     {"trials", r.trials}};
    };

    std::string csv = "process,p_m,p_both_on,p_one_off,z_statistic,trials\n";
    csv += csv_join({"hypothetical", fmt_double(hypothetical.p_m), fmt_double(hypothetical.p_both_on),
                     fmt_double(hypothetical.p_one_off), fmt_double(hypothetical.z_statistic),
                     std::to_string(hypothetical.trials)});
    csv += csv_join({"engine", fmt_double(engine.p_m), fmt_double(engine.p_both_on),
                     fmt_double(engine.p_one_off), fmt_double(engine.z_statistic),
                     std::to_string(engine.trials)});

    RunOutputs out;
    out.summary = ojson{{"summary_version", 1},
                        {"scenario", "no_signaling"},
                        {"trials", config.execution.trials},
                        {"seed", config.execution.seed},
                        {"hypothetical", to_json(hypothetical)},
                        {"engine", to_json(engine)}};
    out.files.emplace_back("no_signaling.csv", std::move(csv));
    return out;
}

}  // namespace

RunOutputs run_scenario(const ScenarioConfig& config) {
    RunOutputs out;
    if (config.process.type == "decay")
        out = run_decay(config);
    else if (config.process.type == "pair_production" || config.process.type == "absorption")
        out = run_scatter(config);
    else if (config.process.type == "double_slit")
        out = run_double_slit(config);
    else if (config.process.type == "epr")
        out = run_epr(config);
    else if (config.process.type == "polarization")
        out = run_polarization(config);
    else if (config.process.type == "trajectory")
        out = run_trajectory(config);
    else if (config.process.type == "no_signaling")
        out = run_no_signaling(config);
    else if (config.process.type == "dyson_check")
        out = run_dyson_check(config);
    else
        throw InputError("unknown process type: " + config.process.type);

    out.files.emplace_back("summary.json", out.summary.dump(2) + "\n");
    return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ojson write_outputs(const RunOutputs& outputs, const ScenarioConfig& config,
                    const std::string& out_dir) {
    namespace fs = std::filesystem;
    const std::string started = iso8601_utc_now();
    fs::create_directories(out_dir);

    ojson file_list = ojson::array();
    for (const auto& [name, bytes] : outputs.files) {
        const fs::path path = fs::path(out_dir) / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot write output file: " + path.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        file_list.push_back(name);
    }

    ojson manifest{{"engine_version", engine_version},
                   {"config_digest", fnv1a64_hex(config.source_bytes)},
                   {"config_path", config.source_path},
                   {"root_seed", config.execution.seed},
                   {"started_at", started},
                   {"finished_at", iso8601_utc_now()},
                   {"outputs", file_list}};
    std::ofstream mf(fs::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw InputError("cannot write manifest");
    mf << manifest.dump(2) << "\n";
    return manifest;
}

void set_config_value(ojson& config, const std::string& dotted_path, double value) {
    if (dotted_path.empty()) throw InputError("empty parameter path");
    ojson* node = &config;
    std::size_t start = 0;
    while (start <= dotted_path.size()) {
        std::size_t end = dotted_path.find('.', start);
        if (end == std::string::npos) end = dotted_path.size();
        const std::string token = dotted_path.substr(start, end - start);
        if (token.empty()) throw InputError("malformed parameter path: " + dotted_path);
        if (node->is_array()) {
            std::size_t index = 0;
            try {
                index = std::stoul(token);
            } catch (...) {
                throw InputError("expected an array index at '" + token + "' in " + dotted_path);
            }
            if (index >= node->size())
                throw InputError("array index out of range at '" + token + "' in " + dotted_path);
            node = &(*node)[index];
        } else if (node->is_object()) {
            if (!node->contains(token))
                throw InputError("unknown config key '" + token + "' in " + dotted_path);
            node = &(*node)[token];
        } else {
            throw InputError("path descends into a scalar at '" + token + "' in " + dotted_path);
        }
        start = end + 1;
    }
    if (!node->is_number())
        throw InputError("parameter path must address a numeric leaf: " + dotted_path);
    *node = value;
}

}  // namespace fockbox
