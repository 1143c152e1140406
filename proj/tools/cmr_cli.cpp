// Command-line driver for the multirate solver.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "cmr/harness.hpp"

namespace {

constexpr int exit_engine_failure = 1;
constexpr int exit_config_error = 2;

void print_summary(const cmr::RunReport& r) {
    std::printf("%-20s %-19s steps=%-5ld substeps=%-6ld fevals=%-10ld updates=%-9ld", r.problem.c_str(),
                r.mode.c_str(), r.n_global_steps, r.n_total_substeps, r.n_function_evals, r.n_components_updated);
    std::printf(" mass_ratio=%.6f diff=%.3e", r.mass_ratio.empty() ? 1.0 : r.mass_ratio[0],
                r.mass_diff_normalized.empty() ? 0.0 : r.mass_diff_normalized[0]);
    if (r.l1_error) std::printf(" l1=%.4e", *r.l1_error);
    std::printf(" recon=%.2e time=%.2fs%s\n", r.max_reconstruction_residual, r.runtime_seconds,
                r.valid ? "" : " INVALID");
    if (!r.valid) std::fprintf(stderr, "engine failure: %s\n", r.failure.c_str());
}

int finish(const cmr::RunConfig& cfg, const cmr::RunReport& rep) {
    const std::string dir = cmr::resolve_output_dir(cfg);
    if (!dir.empty()) {
        cmr::write_outputs(cfg, rep, dir);
        std::printf("outputs written to %s\n", dir.c_str());
    }
    print_summary(rep);
    return rep.valid ? 0 : exit_engine_failure;
}

cmr::RunConfig select_config(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) return cmr::load_config(config_path);
    if (!preset.empty()) return cmr::preset_config(preset);
    throw cmr::ConfigError("either --config or --preset is required");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conservative flux-partitioned multirate solver for 1D conservation laws"};
    app.require_subcommand(1);

    std::string config_path, preset, output_dir, mode, scheme = "backward_euler", grids_arg = "100,200,400";
    double cfl = 2.0;

    auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--output-dir", output_dir, "Override output directory");

    auto* pre = app.add_subcommand("preset", "Run a built-in experiment");
    pre->add_option("name", preset, "burgers-shock | burgers-rarefaction | buckley-leverett | dam-break | "
                                    "rotating-sw | linear-advection")
        ->required();
    pre->add_option("--mode", mode, "conservative | component_baseline | single_rate");
    pre->add_option("--output-dir", output_dir, "Override output directory");

    auto* cmp = app.add_subcommand("compare", "Run conservative, component_baseline and single_rate side by side");
    cmp->add_option("--config", config_path, "Config file");
    cmp->add_option("--preset", preset, "Preset name instead of a config file");

    auto* aud = app.add_subcommand("audit", "Run the conservative engine and report the ledger audit");
    aud->add_option("--config", config_path, "Config file");
    aud->add_option("--preset", preset, "Preset name instead of a config file");

    auto* con = app.add_subcommand("consistency", "Interface consistency study on linear advection");
    con->add_option("--scheme", scheme, "backward_euler | forward_euler");
    con->add_option("--cfl", cfl, "Courant number of the global step");
    con->add_option("--grids", grids_arg, "Comma-separated cell counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config_error;
    }

    try {
        if (run->parsed()) {
            cmr::RunConfig cfg = cmr::load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            return finish(cfg, cmr::run_experiment(cfg));
        }
        if (pre->parsed()) {
            cmr::RunConfig cfg = cmr::preset_config(preset);
            if (!mode.empty()) cfg.mode = cmr::parse_mode(mode);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            if (!mode.empty() && output_dir.empty()) cfg.output_dir += "-" + mode;
            return finish(cfg, cmr::run_experiment(cfg));
        }
        if (cmp->parsed()) {
            const cmr::RunConfig base = select_config(config_path, preset);
            int status = 0;
            for (auto m : {cmr::RunMode::conservative, cmr::RunMode::component_baseline, cmr::RunMode::single_rate}) {
                cmr::RunConfig cfg = base;
                cfg.mode = m;
                cfg.output_dir = cmr::resolve_output_dir(base);
                if (!cfg.output_dir.empty()) cfg.output_dir += "/" + cmr::to_string(m);
                const cmr::RunReport rep = cmr::run_experiment(cfg);
                if (!cfg.output_dir.empty()) cmr::write_outputs(cfg, rep, cfg.output_dir);
                print_summary(rep);
                if (!rep.valid) status = exit_engine_failure;
            }
            return status;
        }
        if (aud->parsed()) {
            cmr::RunConfig cfg = select_config(config_path, preset);
            cfg.mode = cmr::RunMode::conservative;
            const cmr::RunReport rep = cmr::run_experiment(cfg);
            std::printf("steps=%ld bitwise_left_right=%s max_side_mismatch=%.3e max_reconstruction=%.3e "
                        "max_mass_balance=%.3e\n",
                        rep.n_global_steps, rep.ledger_bitwise ? "yes" : "no", rep.max_side_mismatch,
                        rep.max_reconstruction_residual, rep.max_mass_balance_residual);
            if (!rep.valid) {
                std::fprintf(stderr, "engine failure: %s\n", rep.failure.c_str());
                return exit_engine_failure;
            }
            return rep.ledger_bitwise && rep.max_reconstruction_residual <= 1e-13 ? 0 : exit_engine_failure;
        }
        if (con->parsed()) {
            cmr::ConsistencyOptions opt;
            if (scheme == "backward_euler") {
                opt.scheme = cmr::Scheme::theta;
            } else if (scheme == "forward_euler") {
                opt.scheme = cmr::Scheme::forward_euler;
            } else {
                throw cmr::ConfigError("unknown scheme '" + scheme + "'");
            }
            opt.cfl = cfl;
            opt.grids.clear();
            std::size_t pos = 0;
            while (pos <= grids_arg.size()) {
                const std::size_t comma = std::min(grids_arg.find(',', pos), grids_arg.size());
                const std::string tok = grids_arg.substr(pos, comma - pos);
                try {
                    opt.grids.push_back(std::stoi(tok));
                } catch (const std::exception&) {
                    throw cmr::ConfigError("bad grid list '" + grids_arg + "'");
                }
                pos = comma + 1;
            }
            const auto rows = cmr::consistency_experiment(opt);
            std::printf("%8s %12s %12s %14s\n", "N", "dx", "dt", "error/dt");
            for (const auto& r : rows) std::printf("%8d %12.4e %12.4e %14.6e\n", r.n_cells, r.dx, r.dt, r.error);
            std::printf("observed order %.3f, final/initial error ratio %.3f\n", cmr::observed_order(rows),
                        rows.back().error / rows.front().error);
            return 0;
        }
    } catch (const cmr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_engine_failure;
    }
    return 0;
}
