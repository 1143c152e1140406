// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//
// Failing criteria are reported, not hidden: the exit status is 0 unless
// --strict is given, so the suite documents the current state of the solver.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmr/harness.hpp"
#include "cmr/integrators.hpp"
#include "cmr/multirate.hpp"
#include "cmr/single_rate.hpp"

using namespace cmr;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

// Runs are shared between criteria; the rotating shallow-water pair is expensive.
class RunCache {
public:
    const RunReport& get(const std::string& key, const std::function<RunConfig()>& make) {
        auto it = runs_.find(key);
        if (it != runs_.end()) return it->second;
        const RunConfig cfg = make();
        const auto t0 = std::chrono::steady_clock::now();
        RunReport rep = run_experiment(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "  [run] %-32s %7.1fs steps=%ld%s\n", key.c_str(), secs, rep.n_global_steps,
                     rep.valid ? "" : " (engine failure)");
        return runs_.emplace(key, std::move(rep)).first->second;
    }

    const RunReport& preset(const std::string& name, RunMode mode) {
        return get(name + "/" + to_string(mode), [&] {
            RunConfig c = preset_config(name);
            c.mode = mode;
            c.output_dir.clear();
            return c;
        });
    }

private:
    std::map<std::string, RunReport> runs_;
};

std::string failure_note(const RunReport& r) { return r.valid ? "" : " engine failure: " + r.failure; }

Verdict conservation(RunCache& runs) {
    const RunReport& r = runs.preset("buckley-leverett", RunMode::conservative);
    const bool ok = r.valid && r.mass_diff_normalized[0] <= 1e-12 && std::abs(r.mass_ratio[0] - 1.0) <= 1e-12 &&
                    r.runtime_seconds < 60.0;
    return {ok, format("mass_ratio=%.15f diff=%.3e runtime=%.1fs", r.mass_ratio[0], r.mass_diff_normalized[0],
                       r.runtime_seconds) +
                    failure_note(r)};
}

Verdict baseline_contrast(RunCache& runs) {
    const RunReport& r = runs.preset("buckley-leverett", RunMode::component_baseline);
    const double ratio = r.mass_ratio[0], diff = r.mass_diff_normalized[0];
    const bool ok = r.valid && ratio >= 0.93 && ratio <= 0.99 && diff >= 0.02;
    return {ok, format("baseline mass_ratio=%.6f diff=%.3e (wanted ratio in [0.93, 0.99], diff >= 0.02)", ratio,
                       diff) +
                    failure_note(r)};
}

Verdict accuracy(RunCache& runs) {
    const RunReport& c = runs.preset("buckley-leverett", RunMode::conservative);
    const RunReport& b = runs.preset("buckley-leverett", RunMode::component_baseline);
    const double lc = c.l1_error.value_or(INFINITY), lb = b.l1_error.value_or(INFINITY);
    return {lc <= 4e-3 && lb <= 4e-3, format("l1 conservative=%.3e baseline=%.3e (bound 4e-3)", lc, lb)};
}

// Position where the profile first drops through the mid value, linearly interpolated.
double crossing(const Snapshot& s, const Grid1D& g, double level) {
    for (int i = 0; i + 1 < g.n_cells; ++i) {
        const double a = s.u(0, i), b = s.u(0, i + 1);
        if (a >= level && b < level) return g.centers[i] + (a - level) / (a - b) * g.dx;
    }
    return NAN;
}

Verdict burgers_shock(RunCache& runs) {
    const RunReport& r = runs.preset("burgers-shock", RunMode::conservative);
    if (!r.valid || r.snapshots.empty()) return {false, "run failed:" + failure_note(r)};
    const double x = crossing(r.snapshots.back(), r.grid, 0.5);
    const bool located = std::abs(x - 0.5) <= 2.0 * r.grid.dx;
    // The last two slabs may be shortened to land on output times.
    const auto& h = r.courant_history;
    const std::size_t settled = h.size() > 2 ? h.size() - 2 : 0;
    double cmin = INFINITY, cmax = 0.0, dmin = INFINITY, dmax = 0.0;
    for (std::size_t j = 0; j < settled; ++j) {
        cmin = std::min(cmin, h[j].courant);
        cmax = std::max(cmax, h[j].courant);
        dmin = std::min(dmin, h[j].dt);
        dmax = std::max(dmax, h[j].dt);
    }
    const bool courant_ok = settled > 0 && cmin >= 2.2 && cmax <= 2.8;
    return {located && courant_ok,
            format("shock at x=%.4f (|err|=%.4f, bound %.3f); settled steps=%zu dt in [%.4g, %.4g], "
                   "Courant in [%.3f, %.3f] (wanted 2.5 +- 0.3)",
                   x, std::abs(x - 0.5), 2.0 * r.grid.dx, settled, dmin, dmax, cmin, cmax)};
}

Verdict burgers_rarefaction(RunCache& runs) {
    const RunReport& r = runs.preset("burgers-rarefaction", RunMode::conservative);
    if (!r.valid) return {false, "run failed:" + failure_note(r)};
    double cmax = 0.0;
    for (const auto& c : r.courant_history) cmax = std::max(cmax, c.courant);
    bool monotone = true;
    std::string sizes;
    for (std::size_t j = 0; j < r.refined_history.size(); ++j) {
        if (j > 0 && r.refined_history[j].second < r.refined_history[j - 1].second) monotone = false;
        sizes += (j ? "," : "") + std::to_string(r.refined_history[j].second);
    }
    const bool ok = std::abs(cmax - 10.0) <= 0.3 && monotone;
    return {ok, format("max Courant=%.3f; refined cells per step [%s] %s", cmax, sizes.c_str(),
                       monotone ? "non-decreasing" : "DECREASES")};
}

Verdict single_rate_equivalence() {
    double worst = 0.0;
    std::string where;
    for (const auto& name : preset_names()) {
        const RunConfig cfg = preset_config(name);
        const Problem p = cfg.make_problem();
        const Grid1D g = build_grid(p.x_left, p.x_right, cfg.n_cells);
        ToleranceConfig tol = cfg.effective_tolerance();
        tol.tau_abs = 1e9;
        MultirateEngine engine(*p.law, g, p.bc, tol, cfg.integrator, cfg.engine);
        State a = p.initial_state(g), b = a;
        double local = 0.0;
        const int steps = std::min(5, static_cast<int>(std::ceil(cfg.t_end / tol.global_dt - 1e-9)));
        for (int s = 0; s < steps; ++s) {
            engine.step(a, tol.global_dt);
            single_rate_step(b, tol.global_dt, *p.law, g, p.bc, cfg.integrator);
            for (std::size_t j = 0; j < a.values().size(); ++j) {
                local = std::max(local, std::abs(a.values()[j] - b.values()[j]));
            }
        }
        where += format("%s%s=%.1e", where.empty() ? "" : " ", name.c_str(), local);
        worst = std::max(worst, local);
    }
    return {worst <= 1e-14, "max-norm difference per preset (5 global steps): " + where};
}

Verdict ledger_exactness(RunCache& runs) {
    bool ok = true;
    std::string detail;
    for (const auto& name : preset_names()) {
        const RunReport& r = runs.preset(name, RunMode::conservative);
        const bool good = r.valid && r.ledger_bitwise && r.max_reconstruction_residual <= 1e-13;
        ok = ok && good;
        detail += format("%s%s: bitwise=%s recon=%.1e%s", detail.empty() ? "" : "; ", name.c_str(),
                         r.ledger_bitwise ? "yes" : "no", r.max_reconstruction_residual, r.valid ? "" : " INVALID");
    }
    return {ok, detail};
}

Verdict trbdf2_properties() {
    const double g = 2.0 - std::sqrt(2.0);
    const auto structure = JacobianStructure::dense(1);
    const StagedRhs decay = plain_rhs([](std::span<const double> x, std::span<double> f) { f[0] = -x[0]; });
    std::vector<double> logs_dt, logs_err;
    for (int n : {10, 20, 40, 80}) {
        std::vector<double> y{1.0};
        const double dt = 1.0 / n;
        for (int k = 0; k < n; ++k) y = trbdf2_step(decay, y, k * dt, dt, g, structure, {1e-15, 30})->u_next;
        logs_dt.push_back(std::log(dt));
        logs_err.push_back(std::log(std::abs(y[0] - std::exp(-1.0))));
    }
    double mx = 0, my = 0;
    for (std::size_t j = 0; j < logs_dt.size(); ++j) {
        mx += logs_dt[j] / logs_dt.size();
        my += logs_err[j] / logs_dt.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t j = 0; j < logs_dt.size(); ++j) {
        sxy += (logs_dt[j] - mx) * (logs_err[j] - my);
        sxx += (logs_dt[j] - mx) * (logs_dt[j] - mx);
    }
    const double slope = sxy / sxx;
    const double stiff = std::abs(trbdf2_amplification(-1e6, g));

    StageRecord rec;
    rec.t_n = 0.5;
    rec.dt = 0.4;
    rec.gamma = g;
    const double tg = rec.t_n + g * rec.dt;
    rec.u_n = {std::pow(rec.t_n, 3)};
    rec.f_n = {3 * rec.t_n * rec.t_n};
    rec.u_gamma = {tg * tg * tg};
    rec.f_gamma = {3 * tg * tg};
    const double t1 = rec.t_n + rec.dt;
    const double herr = std::abs(hermite_extrapolate(rec, t1)[0] - t1 * t1 * t1);

    const bool ok = std::abs(slope - 2.0) <= 0.2 && stiff < 1e-3 && herr <= 1e-12;
    return {ok, format("order slope=%.3f |R(-1e6)|=%.2e Hermite cubic error=%.1e", slope, stiff, herr)};
}

Verdict consistency() {
    ConsistencyOptions be;
    be.scheme = Scheme::theta;
    const auto rb = consistency_experiment(be);
    ConsistencyOptions fe;
    fe.scheme = Scheme::forward_euler;
    const auto rf = consistency_experiment(fe);
    const double slope = observed_order(rb);
    const double plateau = rf.back().error / rf.front().error;
    std::string be_list, fe_list;
    for (std::size_t j = 0; j < rb.size(); ++j) {
        be_list += format("%s%.3e", j ? "," : "", rb[j].error);
        fe_list += format("%s%.3e", j ? "," : "", rf[j].error);
    }
    return {slope >= 0.8 && plateau > 0.5,
            format("backward Euler error/dt [%s] slope=%.3f (wanted >= 0.8); forward Euler [%s] ratio=%.3f "
                   "(wanted > 0.5)",
                   be_list.c_str(), slope, fe_list.c_str(), plateau)};
}

Verdict rotating_sw_cost(RunCache& runs) {
    const RunReport& mr = runs.preset("rotating-sw", RunMode::conservative);
    const RunReport& sr = runs.preset("rotating-sw", RunMode::single_rate);
    if (!mr.valid || !sr.valid) return {false, "run failed:" + failure_note(mr) + failure_note(sr)};
    const double ratio = static_cast<double>(mr.n_function_evals) / static_cast<double>(sr.n_function_evals);
    const bool ok = ratio <= 0.7 && mr.n_global_steps >= 50 && mr.n_global_steps <= 130;
    return {ok, format("function evals multirate=%ld single-rate=%ld ratio=%.3f (wanted <= 0.7); global steps=%ld "
                       "(wanted 50..130); substeps=%ld",
                       mr.n_function_evals, sr.n_function_evals, ratio, mr.n_global_steps, mr.n_total_substeps)};
}

// Largest upward jump in depth between neighbouring cells; the exact dam-break profile is non-increasing.
double worst_rise(const RunReport& r) {
    double rise = 0.0;
    for (const auto& s : r.snapshots) {
        for (int i = 0; i + 1 < s.u.n_cells(); ++i) rise = std::max(rise, s.u(0, i + 1) - s.u(0, i));
    }
    return rise;
}

Verdict dam_break(RunCache& runs) {
    auto make = [](bool widen) {
        return [widen] {
            RunConfig c = preset_config("dam-break");
            c.engine.widening = widen;
            c.output_dir.clear();
            c.snapshot_times.clear();
            for (double t = 0.0; t < c.t_end; t += 4.0) c.snapshot_times.push_back(t);
            c.snapshot_times.push_back(c.t_end);
            return c;
        };
    };
    const RunReport& on = runs.get("dam-break/widening", make(true));
    const RunReport& off = runs.get("dam-break/no-widening", make(false));
    const double jump = 1.5;
    const double rise_on = worst_rise(on) / jump, rise_off = worst_rise(off) / jump;
    const bool clean = on.valid && rise_on <= 0.01;
    const bool oscillates = off.valid && rise_off > 0.01;
    return {clean && oscillates,
            format("largest spurious rise / jump: widening=%.2e (wanted <= 1e-2), no widening=%.2e (wanted > 1e-2); "
                   "substeps %ld vs %ld",
                   rise_on, rise_off, on.n_total_substeps, off.n_total_substeps) +
                failure_note(on) + failure_note(off)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks for the multirate solver"};
    bool strict = false;
    std::vector<int> only;
    app.add_flag("--strict", strict, "Exit with status 1 when any criterion fails");
    app.add_option("--only", only, "Run only the listed criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    RunCache runs;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"conservation", [&] { return conservation(runs); }},
        {"baseline contrast", [&] { return baseline_contrast(runs); }},
        {"accuracy", [&] { return accuracy(runs); }},
        {"Burgers shock", [&] { return burgers_shock(runs); }},
        {"Burgers rarefaction", [&] { return burgers_rarefaction(runs); }},
        {"single-rate equivalence", single_rate_equivalence},
        {"ledger exactness", [&] { return ledger_exactness(runs); }},
        {"TR-BDF2 order", trbdf2_properties},
        {"consistency", consistency},
        {"rotating SW cost", [&] { return rotating_sw_cost(runs); }},
        {"dam break", [&] { return dam_break(runs); }},
    };
    const std::set<int> selected(only.begin(), only.end());

    int failed = 0, run = 0;
    for (std::size_t j = 0; j < criteria.size(); ++j) {
        const int id = static_cast<int>(j) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Verdict v;
        try {
            v = criteria[j].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        ++run;
        if (!v.pass) ++failed;
        const std::string line =
            format("%s %2d %-24s ", v.pass ? "PASS" : "FAIL", id, criteria[j].first.c_str()) + v.detail;
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", run - failed, run);
    return strict && failed > 0 ? 1 : 0;
}
