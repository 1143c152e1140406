#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cmr/harness.hpp"

using namespace cmr;
using doctest::Approx;
using nlohmann::json;

namespace {

std::string first_line(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig quick_advection() {
    RunConfig c = preset_config("linear-advection");
    c.n_cells = 40;
    c.t_end = 0.1;
    c.snapshot_times = {0.0, 0.1};
    return c;
}

}  // namespace

TEST_CASE("presets") {
    for (const auto& name : preset_names()) CHECK_NOTHROW(preset_config(name).validate());
    CHECK_THROWS_AS(preset_config("nope"), ConfigError);

    const RunConfig b = preset_config("burgers-shock");
    CHECK(b.n_cells == 400);
    CHECK(b.tol.tau_abs == 1e-4);
    CHECK(b.tol.tau_rel == 1e-6);
    CHECK(b.tol.global_dt == 0.1);
    CHECK(b.integrator.newton_tol == 1e-14);

    const RunConfig d = preset_config("dam-break");
    CHECK(d.n_cells == 300);
    CHECK(d.tol.global_dt == 8.0);
    CHECK(d.engine.widening);

    const RunConfig sw = preset_config("rotating-sw");
    CHECK(sw.n_cells == 480);
    CHECK(sw.tol.global_dt == 700.0);
    CHECK(sw.t_end == 3e6);
}

TEST_CASE("config parsing") {
    const RunConfig dotted = parse_config(json::parse(R"({"problem": "buckley-leverett", "grid.n_cells": 50,
        "tol.tau_abs": 1e-3, "integrator.scheme": "theta", "integrator.theta": 1.0, "mode": "single_rate"})"));
    const RunConfig nested = parse_config(json::parse(R"({"problem": "buckley-leverett", "grid": {"n_cells": 50},
        "tol": {"tau_abs": 1e-3}, "integrator": {"scheme": "theta", "theta": 1.0}, "mode": "single_rate"})"));
    CHECK(dotted.n_cells == 50);
    CHECK(nested.n_cells == 50);
    CHECK(dotted.tol.tau_abs == nested.tol.tau_abs);
    CHECK(dotted.integrator.scheme == Scheme::theta);
    CHECK(nested.mode == RunMode::single_rate);
    CHECK(dotted.tol.tau_rel == 1e-5);  // inherited from the preset

    const RunConfig shorter = parse_config(json::parse(R"({"problem": "burgers-shock", "t_end": 0.3})"));
    CHECK(shorter.t_end == 0.3);
    CHECK(shorter.snapshot_times.back() == 0.3);

    const RunConfig adaptive = parse_config(json::parse(R"({"problem": "dam-break", "tol.global_control": "adaptive"})"));
    CHECK(adaptive.tol.global_control == GlobalControl::adaptive);

    CHECK_THROWS_AS(parse_config(json::parse(R"({"grid.n_cells": 10})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "tol.tau_abz": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "grid.n_cells": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "tol.nu": 2.0})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "grid.n_cells": "many"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "tol.global_control": "auto"})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"problem": "dam-break", "mode": "fast"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse("[1, 2]")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("mass drift normalisation") {
    auto [r, d] = mass_drift(2.0, 2.0, 2.0);
    CHECK(r == 1.0);
    CHECK(d == 0.0);
    std::tie(r, d) = mass_drift(2.0, 1.9, 2.0);
    CHECK(r == Approx(0.95));
    CHECK(d == Approx(0.05));
    // Vanishing signed mass falls back to the L1 mass.
    std::tie(r, d) = mass_drift(1e-17, 0.04, 4.0);
    CHECK(r == Approx(1.01));
    CHECK(d == Approx(0.01));
}

TEST_CASE("output directory override") {
    RunConfig c = quick_advection();
    c.output_dir = "configured";
    ::setenv("MULTIRATE_OUT_DIR", "/tmp/elsewhere", 1);
    CHECK(resolve_output_dir(c) == "/tmp/elsewhere");
    ::unsetenv("MULTIRATE_OUT_DIR");
    CHECK(resolve_output_dir(c) == "configured");
}

TEST_CASE("run outputs and determinism") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "cmr-harness-test";
    fs::remove_all(root);

    const RunConfig c = quick_advection();
    const RunReport a = run_experiment(c);
    REQUIRE(a.valid);
    CHECK(a.n_global_steps == 5);
    CHECK(a.snapshots.size() == 2);
    CHECK(a.mass_diff_normalized[0] <= 1e-12);
    CHECK(a.ledger_bitwise);
    write_outputs(c, a, (root / "a").string());
    write_outputs(c, run_experiment(c), (root / "b").string());

    CHECK(first_line(root / "a" / "snapshots.csv") == "t,x,u");
    CHECK(first_line(root / "a" / "active_map.csv") == "step_start_time,level,cell_index");
    CHECK(first_line(root / "a" / "courant.csv") == "t,dt,courant");
    for (const char* f : {"snapshots.csv", "active_map.csv", "courant.csv", "audit.csv"}) {
        CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
    }
    const json rep = json::parse(slurp(root / "a" / "report.json"));
    CHECK(rep["n_global_steps"] == 5);
    CHECK(rep["ledger"]["bitwise_left_right"] == true);

    RunConfig dam = preset_config("dam-break");
    dam.t_end = 16.0;
    dam.snapshot_times = {0.0, 16.0};
    const RunReport dr = run_experiment(dam);
    REQUIRE(dr.valid);
    write_outputs(dam, dr, (root / "dam").string());
    CHECK(first_line(root / "dam" / "snapshots.csv") == "t,x,h,q");
    fs::remove_all(root);
}

TEST_CASE("consistency study without forced refinement converges") {
    for (Scheme s : {Scheme::theta, Scheme::forward_euler}) {
        ConsistencyOptions o;
        o.scheme = s;
        o.force_refinement = false;
        o.cfl = s == Scheme::forward_euler ? 0.5 : 2.0;
        const auto rows = consistency_experiment(o);
        REQUIRE(rows.size() == 3);
        CHECK(observed_order(rows) >= 0.8);
    }
}
