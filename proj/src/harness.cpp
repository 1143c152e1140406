#include "cmr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "cmr/baseline.hpp"
#include "cmr/reference.hpp"

namespace cmr {

using nlohmann::json;

RunMode parse_mode(const std::string& s) {
    if (s == "conservative") return RunMode::conservative;
    if (s == "component_baseline" || s == "baseline") return RunMode::component_baseline;
    if (s == "single_rate") return RunMode::single_rate;
    throw ConfigError("unknown mode '" + s + "' (expected conservative, component_baseline or single_rate)");
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::conservative: return "conservative";
        case RunMode::component_baseline: return "component_baseline";
        case RunMode::single_rate: return "single_rate";
    }
    return "?";
}

// ------------------------------------------------------------------ config

void RunConfig::validate() const {
    try {
        effective_tolerance().validate();
        integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (n_cells < 2) throw ConfigError("grid.n_cells must be >= 2");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive and finite");
    for (double s : snapshot_times) {
        if (!(s >= 0.0 && s <= t_end)) throw ConfigError("snapshot time " + std::to_string(s) + " outside [0, t_end]");
    }
    if (engine.max_newton_retries < 1) throw ConfigError("engine.max_newton_retries must be >= 1");
    try {
        (void)make_problem();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

Problem RunConfig::make_problem() const {
    Problem p;
    if (problem == "burgers-shock" || problem == "burgers-rarefaction" || problem == "burgers") {
        BurgersParams b = burgers;
        b.t_end = t_end;
        p = cmr::burgers(b);
    } else if (problem == "buckley-leverett") {
        p = buckley_leverett(t_end);
    } else if (problem == "dam-break") {
        DamBreakParams d = dam_break;
        d.t_end = t_end;
        p = cmr::dam_break(d);
    } else if (problem == "rotating-sw") {
        RotatingSWParams r = rotating_sw;
        r.t_end = t_end;
        p = rotating_shallow_water(r);
    } else if (problem == "linear-advection") {
        p = linear_advection(advection_speed, 0.0, 1.0, t_end);
    } else {
        throw ConfigError("unknown problem '" + problem + "'");
    }
    return p;
}

ToleranceConfig RunConfig::effective_tolerance() const {
    ToleranceConfig t = tol;
    t.order_r = order_override.value_or(integrator.order());
    return t;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"burgers-shock", "burgers-rarefaction", "buckley-leverett",
                                                "dam-break",     "rotating-sw",         "linear-advection"};
    return names;
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.problem = name;
    c.integrator.scheme = Scheme::trbdf2;
    c.output_dir = "out/" + name;
    if (name == "burgers-shock" || name == "burgers-rarefaction") {
        c.burgers = name == "burgers-shock" ? BurgersParams{1.0, 0.0, 0.0, 1.0} : BurgersParams{0.0, 1.0, 0.0, 1.0};
        c.n_cells = 400;
        c.tol.tau_abs = 1e-4;
        c.tol.tau_rel = 1e-6;
        c.tol.global_dt = 0.1;
        c.integrator.newton_tol = 1e-14;
        c.t_end = 1.0;
        c.snapshot_times = name == "burgers-shock" ? std::vector<double>{0.0, 0.45, 1.0}
                                                   : std::vector<double>{0.0, 0.5, 1.0};
    } else if (name == "buckley-leverett") {
        c.n_cells = 100;
        c.tol.tau_abs = 1e-4;
        c.tol.tau_rel = 1e-5;
        c.tol.global_dt = 0.1;
        c.integrator.newton_tol = 1e-13;
        c.t_end = 0.5;
        c.snapshot_times = {0.0, 0.5};
        c.compute_reference = true;
    } else if (name == "dam-break") {
        c.n_cells = 300;
        c.tol.tau_abs = 1e-2;
        c.tol.tau_rel = 1e-4;
        c.tol.global_dt = 8.0;
        c.integrator.newton_tol = 1e-13;
        c.t_end = 100.0;
        c.snapshot_times = {0.0, 42.0, 100.0};
        c.engine.widening = true;
    } else if (name == "rotating-sw") {
        c.n_cells = 480;
        c.tol.tau_abs = 1e-3;
        c.tol.tau_rel = 1e-4;
        c.tol.global_dt = 700.0;
        c.integrator.newton_tol = 1e-12;
        c.t_end = 3e6;
        c.snapshot_times = {0.0, 3e6};
        c.engine.widening = false;
    } else if (name == "linear-advection") {
        c.n_cells = 100;
        c.tol.tau_abs = 1e-4;
        c.tol.tau_rel = 1e-4;
        c.tol.global_dt = 0.02;
        c.integrator.newton_tol = 1e-12;
        c.t_end = 1.0;
        c.snapshot_times = {0.0, 1.0};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

namespace {

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    for (const auto& [k, v] : j.items()) {
        std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) {
            flatten(v, key, out);
        } else {
            out[key] = v;
        }
    }
}

std::string canonical_key(std::string key) {
    const std::string long_form = "tolerance.";
    if (key.rfind(long_form, 0) == 0) key = "tol." + key.substr(long_form.size());
    return key;
}

double as_number(const std::string& key, const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_null() || (v.is_string() && (v == "inf" || v == "infinity"))) {
        return std::numeric_limits<double>::infinity();
    }
    throw ConfigError("config key '" + key + "' must be a number");
}

int as_int(const std::string& key, const json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<int>(v.get<double>());
    throw ConfigError("config key '" + key + "' must be an integer");
}

bool as_bool(const std::string& key, const json& v) {
    if (v.is_boolean()) return v.get<bool>();
    throw ConfigError("config key '" + key + "' must be a boolean");
}

std::string as_string(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    throw ConfigError("config key '" + key + "' must be a string");
}

}  // namespace

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    std::map<std::string, json> flat;
    for (const auto& [k, v] : j.items()) {
        if (v.is_object()) {
            flatten(v, k, flat);
        } else {
            flat[k] = v;
        }
    }
    std::map<std::string, json> keys;
    for (auto& [k, v] : flat) keys[canonical_key(k)] = v;

    std::string name;
    if (auto it = keys.find("problem"); it != keys.end()) name = as_string("problem", it->second);
    if (auto it = keys.find("problem.name"); it != keys.end()) name = as_string("problem.name", it->second);
    if (name.empty()) throw ConfigError("config must name a problem");
    if (name == "burgers") name = "burgers-shock";
    RunConfig c = preset_config(name);
    keys.erase("problem");
    keys.erase("problem.name");

    for (const auto& [key, v] : keys) {
        if (key == "problem.u_left") {
            c.burgers.u_left = as_number(key, v);
        } else if (key == "problem.u_right") {
            c.burgers.u_right = as_number(key, v);
        } else if (key == "problem.x0") {
            c.burgers.x0 = as_number(key, v);
            c.dam_break.x0 = as_number(key, v);
        } else if (key == "problem.h_left") {
            c.dam_break.h_left = as_number(key, v);
        } else if (key == "problem.h_right") {
            c.dam_break.h_right = as_number(key, v);
        } else if (key == "problem.g") {
            c.dam_break.g = as_number(key, v);
            c.rotating_sw.g = as_number(key, v);
        } else if (key == "problem.dry_fraction") {
            c.dam_break.dry_fraction = as_number(key, v);
        } else if (key == "problem.f") {
            c.rotating_sw.f = as_number(key, v);
        } else if (key == "problem.eta0") {
            c.rotating_sw.eta0 = as_number(key, v);
        } else if (key == "problem.L") {
            c.rotating_sw.L = as_number(key, v);
        } else if (key == "problem.speed") {
            c.advection_speed = as_number(key, v);
        } else if (key == "grid.n_cells") {
            c.n_cells = as_int(key, v);
        } else if (key == "tol.tau_abs") {
            c.tol.tau_abs = as_number(key, v);
        } else if (key == "tol.tau_rel") {
            c.tol.tau_rel = as_number(key, v);
        } else if (key == "tol.nu") {
            c.tol.nu = as_number(key, v);
        } else if (key == "tol.order_r") {
            c.order_override = as_int(key, v);
        } else if (key == "tol.max_depth") {
            c.tol.max_depth = as_int(key, v);
        } else if (key == "tol.global_dt") {
            c.tol.global_dt = as_number(key, v);
        } else if (key == "tol.global_control") {
            const std::string g = as_string(key, v);
            if (g == "fixed") {
                c.tol.global_control = GlobalControl::fixed;
            } else if (g == "adaptive") {
                c.tol.global_control = GlobalControl::adaptive;
            } else {
                throw ConfigError("tol.global_control must be 'fixed' or 'adaptive', got '" + g + "'");
            }
        } else if (key == "tol.max_global_dt") {
            c.tol.max_global_dt = as_number(key, v);
        } else if (key == "tol.max_growth") {
            c.tol.max_growth = as_number(key, v);
        } else if (key == "integrator.scheme") {
            try {
                c.integrator.scheme = parse_scheme(as_string(key, v));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "integrator.theta") {
            c.integrator.theta = as_number(key, v);
        } else if (key == "integrator.gamma") {
            c.integrator.gamma = as_number(key, v);
        } else if (key == "integrator.newton_tol") {
            c.integrator.newton_tol = as_number(key, v);
        } else if (key == "integrator.newton_max_iter") {
            c.integrator.newton_max_iter = as_int(key, v);
        } else if (key == "engine.widening") {
            c.engine.widening = as_bool(key, v);
        } else if (key == "engine.max_newton_retries") {
            c.engine.max_newton_retries = as_int(key, v);
        } else if (key == "mode") {
            c.mode = parse_mode(as_string(key, v));
        } else if (key == "t_end") {
            c.t_end = as_number(key, v);
        } else if (key == "snapshot_times") {
            if (!v.is_array()) throw ConfigError("snapshot_times must be an array");
            c.snapshot_times.clear();
            for (const auto& s : v) c.snapshot_times.push_back(as_number(key, s));
        } else if (key == "output_dir") {
            c.output_dir = as_string(key, v);
        } else if (key == "reference") {
            c.compute_reference = as_bool(key, v);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    // Snapshots outside a shortened run are dropped rather than rejected when t_end was overridden.
    if (keys.count("t_end") && !keys.count("snapshot_times")) {
        std::erase_if(c.snapshot_times, [&](double s) { return s > c.t_end; });
        if (std::find(c.snapshot_times.begin(), c.snapshot_times.end(), c.t_end) == c.snapshot_times.end()) {
            c.snapshot_times.push_back(c.t_end);
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

std::string resolve_output_dir(const RunConfig& config) {
    if (const char* env = std::getenv("MULTIRATE_OUT_DIR"); env && *env) return env;
    return config.output_dir;
}

// -------------------------------------------------------------- running

std::pair<double, double> mass_drift(double m0, double m_final, double abs_mass0) {
    double scale = std::abs(m0);
    if (scale <= 1e-8 * abs_mass0) scale = abs_mass0;
    if (scale == 0.0) scale = 1.0;
    const double diff = m_final - m0;
    return {1.0 + diff / scale, std::abs(diff) / scale};
}

json RunReport::to_json() const {
    json j;
    j["problem"] = problem;
    j["mode"] = mode;
    j["valid"] = valid;
    if (!valid) j["failure"] = failure;
    j["mass_initial"] = mass_initial;
    j["mass_final"] = mass_final;
    j["mass_ratio"] = mass_ratio;
    j["mass_diff_normalized"] = mass_diff_normalized;
    j["l1_error"] = l1_error ? json(*l1_error) : json(nullptr);
    j["n_global_steps"] = n_global_steps;
    j["n_total_substeps"] = n_total_substeps;
    j["n_function_evals"] = n_function_evals;
    j["n_components_updated"] = n_components_updated;
    j["n_newton_iters"] = n_newton_iters;
    j["ledger"] = {{"bitwise_left_right", ledger_bitwise},
                   {"max_side_mismatch", max_side_mismatch},
                   {"max_reconstruction_residual", max_reconstruction_residual},
                   {"max_mass_balance_residual", max_mass_balance_residual}};
    j["runtime_seconds"] = runtime_seconds;
    double cmax = 0.0;
    for (const auto& c : courant_history) cmax = std::max(cmax, c.courant);
    j["max_courant"] = cmax;
    json refined = json::array();
    for (const auto& [t, n] : refined_history) refined.push_back({t, n});
    j["refined_cells_per_step"] = refined;
    return j;
}

namespace {

bool near_time(double a, double b, double scale) { return std::abs(a - b) <= 1e-12 * std::max(1.0, scale); }

}  // namespace

RunReport run_experiment(const RunConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    const Problem problem = config.make_problem();
    const ToleranceConfig tol = config.effective_tolerance();

    RunReport rep;
    rep.problem = config.problem;
    rep.mode = to_string(config.mode);
    rep.grid = build_grid(problem.x_left, problem.x_right, config.n_cells);
    State u = problem.initial_state(rep.grid);
    const State u0 = u;
    rep.mass_initial = total_mass(u, rep.grid);
    const std::vector<double> abs0 = total_abs_mass(u, rep.grid);

    std::vector<double> snaps = config.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    for (double s : snaps) {
        if (near_time(s, 0.0, config.t_end)) rep.snapshots.push_back({0.0, u});
    }

    const GlobalStepController controller(tol, tol.order_r);
    std::set<std::pair<int, int>> step_active;
    double current_step = 0.0;
    auto trace = [&](const SubstepTrace& tr) {
        if (tr.level < 1 || !tr.active_cells) return;
        for (int c : *tr.active_cells) step_active.insert({tr.level, c});
    };

    std::unique_ptr<MultirateEngine> engine;
    std::unique_ptr<ComponentBaseline> baseline;
    Stepper stepper;
    if (config.mode == RunMode::component_baseline) {
        baseline = std::make_unique<ComponentBaseline>(*problem.law, rep.grid, problem.bc, tol, config.integrator,
                                                       config.engine.max_newton_retries);
        stepper = [&](State& s, double dt) { return baseline->step(s, dt); };
    } else {
        EngineOptions opts = config.engine;
        opts.mode = config.mode == RunMode::single_rate ? EngineMode::single_rate : EngineMode::conservative;
        engine = std::make_unique<MultirateEngine>(*problem.law, rep.grid, problem.bc, tol, config.integrator, opts);
        engine->set_trace(trace);
        stepper = [&](State& s, double dt) {
            current_step = s.time;
            step_active.clear();
            return engine->step(s, dt);
        };
    }

    auto observer = [&](const StepReport& sr, const State& s) {
        rep.courant_history.push_back({sr.t_start, sr.dt, sr.courant});
        rep.refined_history.emplace_back(sr.t_start, sr.refined_cells);
        if (sr.audited) {
            rep.audits.push_back(sr.audit);
            rep.max_mass_balance_residual = std::max(rep.max_mass_balance_residual, sr.audit.mass_balance_residual);
        }
        for (const auto& [lvl, c] : step_active) rep.active_map.push_back({current_step, lvl, c});
        step_active.clear();
        for (double t : snaps) {
            if (t > 0.0 && near_time(t, s.time, config.t_end)) rep.snapshots.push_back({s.time, s});
        }
    };

    try {
        const IntegrationSummary sum = drive(stepper, controller, u, config.t_end, snaps, observer);
        rep.n_global_steps = sum.n_global_steps;
        rep.n_total_substeps = sum.n_substeps;
        rep.n_function_evals = sum.function_evals;
        rep.n_components_updated = sum.components_updated;
        rep.n_newton_iters = sum.newton_iters;
        rep.max_reconstruction_residual = sum.max_reconstruction_residual;
        rep.max_side_mismatch = sum.max_side_mismatch;
        rep.ledger_bitwise = sum.ledger_bitwise;
    } catch (const std::exception& e) {
        rep.valid = false;
        rep.failure = e.what();
        rep.n_global_steps = static_cast<long>(rep.courant_history.size());
    }

    rep.final_state = u;
    rep.mass_final = total_mass(u, rep.grid);
    for (std::size_t v = 0; v < rep.mass_initial.size(); ++v) {
        const auto [ratio, diff] = mass_drift(rep.mass_initial[v], rep.mass_final[v], abs0[v]);
        rep.mass_ratio.push_back(ratio);
        rep.mass_diff_normalized.push_back(diff);
    }
    if (rep.valid && config.compute_reference) {
        const State ref = reference_solve(u0, config.t_end, *problem.law, rep.grid, problem.bc);
        rep.l1_error = l1_error(u, ref, rep.grid);
    }
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

// -------------------------------------------------------------- outputs

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
}

}  // namespace

void write_outputs(const RunConfig& config, const RunReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    fs::create_directories(base);
    const Problem problem = config.make_problem();

    {
        auto f = open_out(base / "snapshots.csv");
        f << "t,x";
        for (const auto& n : problem.var_names) f << ',' << n;
        f << '\n';
        for (const auto& s : report.snapshots) {
            for (int i = 0; i < s.u.n_cells(); ++i) {
                f << fmt(s.t) << ',' << fmt(report.grid.centers[i]);
                for (int v = 0; v < s.u.n_vars(); ++v) f << ',' << fmt(s.u(v, i));
                f << '\n';
            }
        }
    }
    {
        auto f = open_out(base / "active_map.csv");
        f << "step_start_time,level,cell_index\n";
        for (const auto& a : report.active_map) f << fmt(a.step_start_time) << ',' << a.level << ',' << a.cell << '\n';
    }
    {
        auto f = open_out(base / "courant.csv");
        f << "t,dt,courant\n";
        for (const auto& c : report.courant_history) f << fmt(c.t) << ',' << fmt(c.dt) << ',' << fmt(c.courant) << '\n';
    }
    {
        auto f = open_out(base / "audit.csv");
        f << "step,max_side_mismatch,reconstruction_residual,mass_balance_residual\n";
        for (std::size_t s = 0; s < report.audits.size(); ++s) {
            const auto& a = report.audits[s];
            f << s << ',' << fmt(a.max_side_mismatch) << ',' << fmt(a.reconstruction_residual) << ','
              << fmt(a.mass_balance_residual) << '\n';
        }
    }
    {
        json j = report.to_json();
        j["config"] = {{"problem", config.problem},
                       {"n_cells", config.n_cells},
                       {"tau_abs", config.tol.tau_abs},
                       {"tau_rel", config.tol.tau_rel},
                       {"nu", config.tol.nu},
                       {"global_dt", config.tol.global_dt},
                       {"global_control",
                        config.tol.global_control == GlobalControl::fixed ? "fixed" : "adaptive"},
                       {"max_global_dt", std::isfinite(config.tol.max_global_dt) ? json(config.tol.max_global_dt)
                                                                                 : json("inf")},
                       {"scheme", to_string(config.integrator.scheme)},
                       {"newton_tol", config.integrator.newton_tol},
                       {"widening", config.engine.widening},
                       {"t_end", config.t_end}};
        auto f = open_out(base / "report.json");
        f << j.dump(2) << '\n';
    }
}

// ---------------------------------------------------- consistency study

std::vector<ConsistencyRow> consistency_experiment(const ConsistencyOptions& options) {
    std::vector<ConsistencyRow> rows;
    for (int n : options.grids) {
        const Problem prob = linear_advection(1.0, 0.0, 1.0, 1.0);
        const Grid1D grid = build_grid(0.0, 1.0, n);
        State u = prob.initial_state(grid);
        const double dt = options.cfl * grid.dx;

        ToleranceConfig tol;
        tol.tau_abs = 1e9;
        tol.tau_rel = 0.0;
        tol.global_dt = dt;
        tol.max_depth = 2;
        tol.order_r = 1;
        IntegratorConfig integ;
        integ.scheme = options.scheme;
        integ.theta = 1.0;
        integ.newton_tol = 1e-13;

        MultirateEngine engine(*prob.law, grid, prob.bc, tol, integ);
        const int k0 = n / 2;
        if (options.force_refinement) {
            engine.set_policy([k0](int level, double, double, const IndexSet&) -> std::optional<RefinementDecision> {
                if (level == 0) return RefinementDecision{{k0}, 2};
                return RefinementDecision{{}, 0};
            });
        }
        engine.step(u, dt);

        double err = 0.0;
        std::vector<double> exact(1);
        for (int off = -3; off <= 2; ++off) {
            const int i = ((k0 + off) % n + n) % n;
            prob.initial_average(grid.interface_x(i) - dt, grid.interface_x(i + 1) - dt, exact);
            err = std::max(err, std::abs(u(0, i) - exact[0]));
        }
        rows.push_back({n, grid.dx, dt, err / dt});
    }
    return rows;
}

double observed_order(const std::vector<ConsistencyRow>& rows) {
    if (rows.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        const double x = std::log(r.dx);
        const double y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace cmr
