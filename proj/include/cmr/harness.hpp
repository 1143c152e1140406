#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cmr/active_set.hpp"
#include "cmr/grid.hpp"
#include "cmr/integrators.hpp"
#include "cmr/multirate.hpp"
#include "cmr/problems.hpp"

namespace cmr {

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RunMode { conservative, component_baseline, single_rate };
RunMode parse_mode(const std::string& s);
std::string to_string(RunMode m);

struct RunConfig {
    std::string problem = "buckley-leverett";
    BurgersParams burgers;
    DamBreakParams dam_break;
    RotatingSWParams rotating_sw;
    double advection_speed = 1.0;

    int n_cells = 100;
    ToleranceConfig tol;
    /// When unset the controller order follows the integrator.
    std::optional<int> order_override;
    IntegratorConfig integrator;
    EngineOptions engine;
    RunMode mode = RunMode::conservative;
    double t_end = 0.5;
    std::vector<double> snapshot_times;
    std::string output_dir;  // empty: no files
    bool compute_reference = false;

    /// Throws ConfigError.
    void validate() const;
    [[nodiscard]] Problem make_problem() const;
    [[nodiscard]] ToleranceConfig effective_tolerance() const;
};

/// Names accepted by preset_config.
const std::vector<std::string>& preset_names();
/// Full-size configuration of a named experiment. Throws ConfigError for unknown names.
RunConfig preset_config(const std::string& name);

/// Reads nested or dotted-key JSON on top of the preset of the named problem (when one exists).
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

struct CourantEntry {
    double t, dt, courant;
};
struct ActiveEntry {
    double step_start_time;
    int level;
    int cell;
};
struct Snapshot {
    double t;
    State u;
};

struct RunReport {
    std::string problem;
    std::string mode;
    bool valid = true;
    std::string failure;

    std::vector<double> mass_initial, mass_final, mass_ratio, mass_diff_normalized;
    std::optional<double> l1_error;
    long n_global_steps = 0;
    long n_total_substeps = 0;
    long n_function_evals = 0;
    long n_components_updated = 0;  // unknowns solved for, summed over sub-steps
    long n_newton_iters = 0;
    double max_reconstruction_residual = 0.0;
    double max_side_mismatch = 0.0;
    double max_mass_balance_residual = 0.0;
    bool ledger_bitwise = true;
    double runtime_seconds = 0.0;

    std::vector<CourantEntry> courant_history;
    std::vector<std::pair<double, std::size_t>> refined_history;  // (step start, refined cells)
    std::vector<ActiveEntry> active_map;
    std::vector<AuditReport> audits;
    std::vector<Snapshot> snapshots;
    Grid1D grid;
    State final_state;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Mass drift normalised by |m0|, or by the L1 mass when m0 vanishes relative to it.
/// Returns (ratio, normalised diff) with ratio = 1 + (m_f - m0) / scale.
std::pair<double, double> mass_drift(double m0, double m_final, double abs_mass0);

/// Runs one experiment. Engine failures are reported through RunReport::valid.
RunReport run_experiment(const RunConfig& config);

/// Writes snapshots.csv, active_map.csv, courant.csv, audit.csv and report.json into dir.
void write_outputs(const RunConfig& config, const RunReport& report, const std::string& dir);

/// Output directory after the MULTIRATE_OUT_DIR override.
std::string resolve_output_dir(const RunConfig& config);

struct ConsistencyRow {
    int n_cells;
    double dx;
    double dt;
    double error;  // max |u - exact| / dt over the cells around the refined interface
};

struct ConsistencyOptions {
    Scheme scheme = Scheme::theta;  // theta = 1 gives backward Euler
    double cfl = 2.0;
    std::vector<int> grids{100, 200, 400};
    bool force_refinement = true;
};

/// One step of linear advection started from exact averages, with the flux at the
/// middle interface rejected and the step halved there.
std::vector<ConsistencyRow> consistency_experiment(const ConsistencyOptions& options);

/// Least-squares slope of log(error) against log(dx).
double observed_order(const std::vector<ConsistencyRow>& rows);

}  // namespace cmr
