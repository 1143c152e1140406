#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"

namespace cmr {

/// Error tolerances and step-control parameters of the multirate engine.
/// How the tentative global step is chosen between global steps.
enum class GlobalControl {
    fixed,     // every global step is global_dt
    adaptive,  // grown or shrunk from the RMS of the level-0 flux errors
};

struct ToleranceConfig {
    double tau_abs = 1e-4;
    double tau_rel = 1e-5;
    double nu = 0.9;      // safety factor in (0, 1]
    int order_r = 2;      // convergence order of the base scheme
    int max_depth = 10;   // deepest refinement level allowed
    double global_dt = 0.1;  // tentative global step (the first one when adaptive)
    GlobalControl global_control = GlobalControl::fixed;
    /// Adaptive mode only: largest global step; proposals below it are snapped to
    /// max_global_dt / m. Infinity lets the global step grow freely.
    double max_global_dt = std::numeric_limits<double>::infinity();
    double max_growth = 2.0;  // adaptive mode: bound on growth between steps

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
    [[nodiscard]] double threshold(double flux_magnitude) const noexcept {
        return tau_rel * flux_magnitude + tau_abs;
    }
};

/// Sorted interface or cell indices.
using IndexSet = std::vector<int>;

/// Active cells A_C and rejected fluxes R_F at one refinement level.
struct ActiveSet {
    IndexSet active_cells;
    IndexSet rejected_fluxes;
};

/// eps_k = max_v |computed - extrapolated| for interface-major blocks of n_vars values.
std::vector<double> estimate_flux_error(std::span<const double> computed, std::span<const double> extrapolated,
                                        int n_vars);

/// FluxField form over an explicit interface scope.
std::vector<double> estimate_flux_error(const FluxField& computed, const FluxField& extrapolated,
                                        const IndexSet& scope);

/// Positions p with eps[p] > tau_rel * max_v |F[p]| + tau_abs (F interface-major).
std::vector<int> select_rejected(std::span<const double> eps, std::span<const double> flux, int n_vars,
                                 const ToleranceConfig& tol);

/// Interfaces of `scope` whose error exceeds the threshold.
IndexSet select_rejected(const std::vector<double>& eps, const FluxField& computed, const ToleranceConfig& tol,
                         const IndexSet& scope);

/// Sign content of the characteristic speeds of one cell.
struct WaveDirections {
    bool negative = false;
    bool positive = false;
};

/// Adds ceil(C) interfaces on each side that carries waves away from every rejected interface.
/// C and the directions are taken over the two cells flanking the interface. Non-periodic
/// grids clip at the domain ends, periodic grids wrap.
IndexSet widen_rejections(const IndexSet& rejected, std::span<const double> local_courant,
                          std::span<const WaveDirections> directions, const Topology& topo);

/// Cells flanking any rejected interface.
IndexSet derive_active_cells(const IndexSet& rejected, const Topology& topo);

/// nu * dt_star * min_k ((tau_rel |F_k| + tau_abs) / eps_k)^(1 / (r + 1)) over the rejected set.
/// Interfaces with eps_k == 0 do not constrain the step; the result may be +infinity.
double propose_substep(std::span<const double> eps, std::span<const double> flux_magnitude,
                       const ToleranceConfig& tol, double dt_star);

/// Number m of equal sub-steps of dt_star that makes dt_star / m <= dt_new (m >= 1).
long fraction_count(double dt_new, double dt_star);

/// dt_star / fraction_count(dt_new, dt_star).
double snap_to_fraction(double dt_new, double dt_star);

}  // namespace cmr
