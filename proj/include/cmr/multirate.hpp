#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmr/active_set.hpp"
#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"
#include "cmr/grid.hpp"
#include "cmr/integrators.hpp"
#include "cmr/ledger.hpp"

namespace cmr {

/// Unrecoverable engine condition: Newton retries exhausted, recursion too deep, non-finite state.
class EngineFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An interface flux that passed the error test, replayed on finer sub-steps.
///
/// The stage values are applied unchanged at the matching stage points of every
/// sub-step, which scales the accepted contribution by dt_star / accepted_dt.
struct AcceptedFluxRecord {
    int interface_index = -1;
    std::vector<double> value_start, value_gamma, value_end;
    double accepted_dt = 0.0;
    double accepted_at_time = 0.0;
};

enum class EngineMode {
    conservative,  // flux-partitioned multirate
    single_rate,   // any rejection refines every cell
};

struct EngineOptions {
    EngineMode mode = EngineMode::conservative;
    /// Reject extra interfaces downstream of rejected ones in systems.
    bool widening = false;
    /// Consecutive Newton failures tolerated along one refinement path.
    int max_newton_retries = 5;
    /// When every level-0 flux is rejected, return without committing so the
    /// caller can retake the interval as m shorter global steps.
    bool split_full_rejection = true;
};

/// One call of the sub-step algorithm.
struct SubstepTrace {
    int level = 0;
    long substep = 0;
    double t_star = 0.0;
    double dt_star = 0.0;
    const IndexSet* active_cells = nullptr;
    IndexSet rejected;
    long refinement = 0;  // sub-steps of the next level, 0 when nothing was rejected
    bool newton_failed = false;
};

/// Overrides the estimator at one sub-step, used by forced-refinement experiments.
struct RefinementDecision {
    IndexSet rejected;
    long m = 0;  // 0 keeps the step-size proposal
};
using RefinementPolicy = std::function<std::optional<RefinementDecision>(
    int level, double t_star, double dt_star, const IndexSet& fresh)>;

struct StepReport {
    double t_start = 0.0;
    double dt = 0.0;
    double courant = 0.0;  // max |lambda| dt / dx over the step's start state
    int max_level = 0;
    long n_substeps = 0;
    /// Sum over sub-steps of the number of unknowns solved for.
    long components_updated = 0;
    long function_evals = 0;
    long newton_iters = 0;
    /// Cells recomputed below level 0 during the step.
    std::size_t refined_cells = 0;
    /// RMS of eps_k / (tau_rel |F_k| + tau_a) over the level-0 fluxes.
    double error_norm = 0.0;
    /// Largest eps_k / (tau_rel |F_k| + tau_a) over the level-0 fluxes that were accepted, 0 when none were.
    double latent_error = 0.0;
    std::size_t level0_rejected = 0;
    std::size_t level0_fluxes = 0;
    long level0_refinement = 0;
    /// Nothing was committed: every level-0 flux failed and split_full_rejection is on.
    /// level0_refinement holds the proposed number of pieces.
    bool full_rejection = false;
    AuditReport audit;
    bool audited = false;
};

/// Chooses the tentative global step: fixed, or adapted from the level-0 error norm.
class GlobalStepController {
public:
    explicit GlobalStepController(const ToleranceConfig& tol, int order) : tol_(tol), order_(order) {}

    [[nodiscard]] double initial() const noexcept;
    /// Fixed mode returns global_dt. Adaptive mode returns nu dt err^(-1/(r+1)),
    /// growth-limited, then capped and snapped to max_global_dt / m.
    [[nodiscard]] double next(double dt_used, double error_norm) const;
    [[nodiscard]] int max_depth() const noexcept { return tol_.max_depth; }
    [[nodiscard]] bool fixed() const noexcept { return tol_.global_control == GlobalControl::fixed; }

private:
    ToleranceConfig tol_;
    int order_;
};

/// RMS of eps / threshold; eps and flux_magnitude run over the same interfaces.
double rms_error_norm(std::span<const double> eps, std::span<const double> flux_magnitude,
                      const ToleranceConfig& tol);

/// Largest |lambda| dt / dx over all cells.
double courant_number(const State& u, const ConservationLaw& law, const Grid1D& grid, double dt);

class MultirateEngine {
public:
    MultirateEngine(const ConservationLaw& law, Grid1D grid, BoundaryCondition bc, ToleranceConfig tol,
                    IntegratorConfig integrator, EngineOptions options = {});
    ~MultirateEngine();
    MultirateEngine(const MultirateEngine&) = delete;
    MultirateEngine& operator=(const MultirateEngine&) = delete;

    /// Advances u by one global step of length dt from u.time and audits the ledger.
    StepReport step(State& u, double dt);

    void set_trace(std::function<void(const SubstepTrace&)> trace) { trace_ = std::move(trace); }
    void set_policy(RefinementPolicy policy) { policy_ = std::move(policy); }

    [[nodiscard]] const FluxLedger& ledger() const noexcept { return ledger_; }
    [[nodiscard]] const Grid1D& grid() const noexcept { return grid_; }
    [[nodiscard]] const Topology& topology() const noexcept { return topo_; }
    [[nodiscard]] const ToleranceConfig& tolerance() const noexcept { return tol_; }
    [[nodiscard]] const IntegratorConfig& integrator() const noexcept { return integrator_; }

private:
    struct LocalSystem;
    struct StepContext;

    void level_M(StepContext& ctx, int level, double t0, double t1, long m, const IndexSet& active,
                 const IndexSet& fresh, int newton_failures);
    void substep_S(StepContext& ctx, LocalSystem& sys, int level, long s, double ta, double tb,
                   int newton_failures);

    const ConservationLaw& law_;
    Grid1D grid_;
    BoundaryCondition bc_;
    Topology topo_;
    ToleranceConfig tol_;
    IntegratorConfig integrator_;
    EngineOptions options_;
    FluxLedger ledger_;
    std::vector<const AcceptedFluxRecord*> frozen_;  // by interface, null when fresh
    std::function<void(const SubstepTrace&)> trace_;
    RefinementPolicy policy_;
};

/// Per-run totals returned by drive().
struct IntegrationSummary {
    long n_global_steps = 0;
    long n_substeps = 0;
    long components_updated = 0;
    long function_evals = 0;
    long newton_iters = 0;
    double max_reconstruction_residual = 0.0;
    double max_side_mismatch = 0.0;
    bool ledger_bitwise = true;
};

using Stepper = std::function<StepReport(State& u, double dt)>;
using StepObserver = std::function<void(const StepReport&, const State&)>;

/// Repeats global steps from u.time to t_end, landing exactly on every time in `stops`.
/// The step after each one comes from `controller`. A fully rejected attempt is
/// retaken as level0_refinement equal pieces; only committed steps reach `observer`.
IntegrationSummary drive(const Stepper& stepper, const GlobalStepController& controller, State& u, double t_end,
                         const std::vector<double>& stops, const StepObserver& observer = nullptr);

}  // namespace cmr
