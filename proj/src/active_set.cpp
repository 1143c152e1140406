#include "cmr/active_set.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace cmr {

void ToleranceConfig::validate() const {
    if (!(tau_abs > 0.0)) throw std::invalid_argument("tolerance: tau_abs must be positive");
    if (!(tau_rel >= 0.0)) throw std::invalid_argument("tolerance: tau_rel must be non-negative");
    if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("tolerance: nu must lie in (0,1]");
    if (order_r < 1) throw std::invalid_argument("tolerance: order_r must be >= 1");
    if (max_depth < 1 || max_depth > 20) throw std::invalid_argument("tolerance: max_depth must lie in [1,20]");
    if (!(global_dt > 0.0)) throw std::invalid_argument("tolerance: global_dt must be positive");
    if (!(max_global_dt > 0.0)) throw std::invalid_argument("tolerance: max_global_dt must be positive");
    if (!(max_growth >= 1.0)) throw std::invalid_argument("tolerance: max_growth must be >= 1");
}

std::vector<double> estimate_flux_error(std::span<const double> computed, std::span<const double> extrapolated,
                                        int n_vars) {
    const std::size_t m = computed.size() / static_cast<std::size_t>(n_vars);
    std::vector<double> eps(m, 0.0);
    for (std::size_t p = 0; p < m; ++p) {
        double e = 0.0;
        for (int v = 0; v < n_vars; ++v) {
            const std::size_t j = p * n_vars + v;
            e = std::max(e, std::abs(computed[j] - extrapolated[j]));
        }
        eps[p] = e;
    }
    return eps;
}

namespace {

std::vector<double> gather(const FluxField& f, const IndexSet& scope) {
    std::vector<double> out;
    out.reserve(scope.size() * f.n_vars);
    for (int k : scope) {
        for (int v = 0; v < f.n_vars; ++v) out.push_back(f(v, k));
    }
    return out;
}

}  // namespace

std::vector<double> estimate_flux_error(const FluxField& computed, const FluxField& extrapolated,
                                        const IndexSet& scope) {
    return estimate_flux_error(gather(computed, scope), gather(extrapolated, scope), computed.n_vars);
}

std::vector<int> select_rejected(std::span<const double> eps, std::span<const double> flux, int n_vars,
                                 const ToleranceConfig& tol) {
    std::vector<int> out;
    for (std::size_t p = 0; p < eps.size(); ++p) {
        double fmax = 0.0;
        for (int v = 0; v < n_vars; ++v) fmax = std::max(fmax, std::abs(flux[p * n_vars + v]));
        if (eps[p] > tol.threshold(fmax)) out.push_back(static_cast<int>(p));
    }
    return out;
}

IndexSet select_rejected(const std::vector<double>& eps, const FluxField& computed, const ToleranceConfig& tol,
                         const IndexSet& scope) {
    const auto local = select_rejected(eps, gather(computed, scope), computed.n_vars, tol);
    IndexSet out;
    out.reserve(local.size());
    for (int p : local) out.push_back(scope[p]);
    return out;
}

IndexSet widen_rejections(const IndexSet& rejected, std::span<const double> local_courant,
                          std::span<const WaveDirections> directions, const Topology& topo) {
    std::set<int> out(rejected.begin(), rejected.end());
    const int ni = topo.n_interfaces();
    for (int k : rejected) {
        double c = 0.0;
        WaveDirections dir;
        for (int cell : {topo.left_cell(k), topo.right_cell(k)}) {
            if (cell < 0) continue;
            c = std::max(c, local_courant[cell]);
            dir.negative = dir.negative || directions[cell].negative;
            dir.positive = dir.positive || directions[cell].positive;
        }
        const int reach = static_cast<int>(std::ceil(c));
        for (int s = 1; s <= reach; ++s) {
            for (int sign : {-1, +1}) {
                if (sign < 0 && !dir.negative) continue;
                if (sign > 0 && !dir.positive) continue;
                int j = k + sign * s;
                if (topo.periodic()) {
                    j = ((j % ni) + ni) % ni;
                } else if (j < 0 || j >= ni) {
                    continue;
                }
                out.insert(j);
            }
        }
    }
    return {out.begin(), out.end()};
}

IndexSet derive_active_cells(const IndexSet& rejected, const Topology& topo) {
    std::set<int> cells;
    for (int k : rejected) {
        if (const int l = topo.left_cell(k); l >= 0) cells.insert(l);
        if (const int r = topo.right_cell(k); r >= 0) cells.insert(r);
    }
    return {cells.begin(), cells.end()};
}

double propose_substep(std::span<const double> eps, std::span<const double> flux_magnitude,
                       const ToleranceConfig& tol, double dt_star) {
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < eps.size(); ++p) {
        if (!(eps[p] > 0.0)) continue;
        ratio = std::min(ratio, tol.threshold(flux_magnitude[p]) / eps[p]);
    }
    if (!std::isfinite(ratio)) return std::numeric_limits<double>::infinity();
    return tol.nu * dt_star * std::pow(ratio, 1.0 / (tol.order_r + 1));
}

long fraction_count(double dt_new, double dt_star) {
    if (!(dt_new > 0.0)) throw std::invalid_argument("snap_to_fraction: dt_new must be positive");
    if (dt_new >= dt_star) return 1;
    const double m = std::ceil(dt_star / dt_new);
    constexpr double max_fraction = 1 << 24;
    return static_cast<long>(std::min(m, max_fraction));
}

double snap_to_fraction(double dt_new, double dt_star) {
    return dt_star / static_cast<double>(fraction_count(dt_new, dt_star));
}

}  // namespace cmr
