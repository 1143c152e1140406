#include "cmr/flux.hpp"

#include <algorithm>
#include <cmath>

namespace cmr {

double WaveSpeeds::max_abs() const noexcept { return std::max(std::abs(min), std::abs(max)); }

bool rusanov_flux_into(std::span<const double> ul, std::span<const double> ur, const FluxFunction& f,
                       std::span<double> out, std::span<double> scratch) {
    const int d = f.n_vars;
    auto fl = scratch.subspan(0, d);
    auto fr = scratch.subspan(d, d);
    f.evaluate(ul, fl);
    f.evaluate(ur, fr);
    const double alpha = f.wave_speed_bound(ul, ur);
    bool finite = std::isfinite(alpha);
    for (int v = 0; v < d; ++v) {
        out[v] = 0.5 * ((fr[v] + fl[v]) - alpha * (ur[v] - ul[v]));
        finite = finite && std::isfinite(out[v]);
    }
    return finite;
}

std::vector<double> rusanov_flux(std::span<const double> ul, std::span<const double> ur, const FluxFunction& f) {
    std::vector<double> out(static_cast<std::size_t>(f.n_vars));
    std::vector<double> scratch(2 * static_cast<std::size_t>(f.n_vars));
    if (!rusanov_flux_into(ul, ur, f, out, scratch)) {
        throw NumericalFailure("rusanov_flux: non-finite flux");
    }
    return out;
}

void RusanovLaw::numerical_flux(std::span<const double> ul, std::span<const double> ur,
                                std::span<double> flux) const {
    double scratch[8];
    if (f_.n_vars <= 4) {
        rusanov_flux_into(ul, ur, f_, flux, std::span<double>(scratch, 2 * f_.n_vars));
    } else {
        std::vector<double> s(2 * static_cast<std::size_t>(f_.n_vars));
        rusanov_flux_into(ul, ur, f_, flux, s);
    }
}

void interface_flux(const State& state, const ConservationLaw& law, const Topology& topo,
                    const BoundaryCondition& bc, int k, std::span<double> flux) {
    const int d = law.n_vars();
    std::vector<double> ul(d), ur(d);
    const int lc = topo.left_cell(k);
    const int rc = topo.right_cell(k);
    if (lc >= 0) state.cell(lc, ul);
    if (rc >= 0) state.cell(rc, ur);
    if (lc < 0) ghost_value(bc, true, ur, ul);
    if (rc < 0) ghost_value(bc, false, ul, ur);
    law.numerical_flux(ul, ur, flux);
}

SemiDiscreteResult semidiscrete_rhs(const State& state, const ConservationLaw& law, const Grid1D& grid,
                                    const BoundaryCondition& bc) {
    const int d = law.n_vars();
    const int n = grid.n_cells;
    if (state.n_vars() != d || state.n_cells() != n) {
        throw std::invalid_argument("semidiscrete_rhs: state shape does not match law/grid");
    }
    const Topology topo(n, bc.kind == BoundaryKind::periodic);
    SemiDiscreteResult out{State(d, n, state.time), FluxField(d, n)};
    std::vector<double> f(d);
    for (int k = 0; k < topo.n_interfaces(); ++k) {
        interface_flux(state, law, topo, bc, k, f);
        for (int v = 0; v < d; ++v) {
            if (!std::isfinite(f[v])) throw NumericalFailure("semidiscrete_rhs: non-finite flux");
            out.fluxes(v, k) = f[v];
        }
    }
    if (topo.periodic()) {
        for (int v = 0; v < d; ++v) out.fluxes(v, n) = out.fluxes(v, 0);
    }
    std::vector<double> u(d), s(d, 0.0);
    for (int i = 0; i < n; ++i) {
        if (law.has_source()) {
            state.cell(i, u);
            law.source(u, s);
        }
        for (int v = 0; v < d; ++v) {
            out.tendency(v, i) = -(out.fluxes(v, i + 1) - out.fluxes(v, i)) / grid.dx + s[v];
        }
    }
    return out;
}

}  // namespace cmr
