#include "cmr/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cmr {

struct ComponentBaseline::Context {
    State& u;
    StepReport& rep;
    std::vector<double> level0_eps, level0_mag;
    bool level0_estimated = false;
    std::vector<char> refined;
};

ComponentBaseline::ComponentBaseline(const ConservationLaw& law, Grid1D grid, BoundaryCondition bc,
                                     ToleranceConfig tol, IntegratorConfig integrator, int max_newton_retries)
    : law_(law), grid_(std::move(grid)), bc_(std::move(bc)),
      topo_(grid_.n_cells, bc_.kind == BoundaryKind::periodic), tol_(tol), integrator_(integrator),
      max_newton_retries_(max_newton_retries), latent_(static_cast<std::size_t>(grid_.n_cells)) {
    tol_.validate();
    integrator_.validate();
}

StepReport ComponentBaseline::step(State& u, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("baseline: global step must be positive");
    StepReport rep;
    rep.t_start = u.time;
    rep.dt = dt;
    rep.courant = courant_number(u, law_, grid_, dt);
    Context ctx{u, rep, {}, {}, false, std::vector<char>(static_cast<std::size_t>(grid_.n_cells), 0)};
    IndexSet all(static_cast<std::size_t>(grid_.n_cells));
    for (int i = 0; i < grid_.n_cells; ++i) all[i] = i;
    const double t0 = u.time;
    level(ctx, 0, t0, t0 + dt, 1, all, 0);
    u.time = t0 + dt;
    if (!u.all_finite()) throw EngineFailure("baseline: non-finite state at t=" + std::to_string(t0));
    rep.error_norm = ctx.level0_estimated ? rms_error_norm(ctx.level0_eps, ctx.level0_mag, tol_)
                                          : std::numeric_limits<double>::infinity();
    rep.refined_cells = static_cast<std::size_t>(std::count(ctx.refined.begin(), ctx.refined.end(), 1));
    return rep;
}

void ComponentBaseline::level(Context& ctx, int lvl, double t0, double t1, long m, const IndexSet& active,
                              int newton_failures) {
    if (lvl > tol_.max_depth) {
        throw EngineFailure("baseline: refinement depth exceeds max_depth at t=" + std::to_string(t0));
    }
    ctx.rep.max_level = std::max(ctx.rep.max_level, lvl);
    if (lvl > 0) {
        for (int c : active) ctx.refined[c] = 1;
    }
    const double span = t1 - t0;
    for (long s = 0; s < m; ++s) {
        const double ta = s == 0 ? t0 : t0 + span * static_cast<double>(s) / static_cast<double>(m);
        const double tb = s == m - 1 ? t1 : t0 + span * static_cast<double>(s + 1) / static_cast<double>(m);
        substep(ctx, lvl, ta, tb, active, newton_failures);
    }
}

void ComponentBaseline::substep(Context& ctx, int lvl, double ta, double tb, const IndexSet& active,
                                int newton_failures) {
    const int d = law_.n_vars();
    const int nc = grid_.n_cells;
    const double dt = tb - ta;
    const std::size_t na = active.size();
    const std::size_t n = na * d;
    State& u = ctx.u;

    std::vector<int> local(static_cast<std::size_t>(nc), -1);
    for (std::size_t a = 0; a < na; ++a) local[active[a]] = static_cast<int>(a);

    // Interfaces touching an active cell, with their flanking cells.
    IndexSet ifaces;
    for (int c : active) {
        ifaces.push_back(topo_.left_interface(c));
        ifaces.push_back(topo_.right_interface(c));
    }
    std::sort(ifaces.begin(), ifaces.end());
    ifaces.erase(std::unique(ifaces.begin(), ifaces.end()), ifaces.end());
    std::vector<int> pos(static_cast<std::size_t>(topo_.n_interfaces()), -1);
    for (std::size_t p = 0; p < ifaces.size(); ++p) pos[ifaces[p]] = static_cast<int>(p);

    std::vector<std::vector<int>> neighbors(na);
    for (std::size_t a = 0; a < na; ++a) {
        const int l = topo_.left_cell(topo_.left_interface(active[a]));
        const int r = topo_.right_cell(topo_.right_interface(active[a]));
        if (l >= 0 && local[l] >= 0) neighbors[a].push_back(local[l]);
        if (r >= 0 && local[r] >= 0) neighbors[a].push_back(local[r]);
    }
    const JacobianStructure structure = JacobianStructure::from_cell_graph(neighbors, d);

    const double gamma_offset = integrator_.scheme == Scheme::trbdf2 ? integrator_.gamma * dt : 0.0;
    std::vector<double> fl(ifaces.size() * d), ul(d), ur(d), src(d, 0.0);

    // State of cell c at time t: the unknown when active, else the latent interpolant.
    auto cell_state = [&](int c, double t, std::span<const double> x, std::span<double> out) {
        if (local[c] >= 0) {
            std::copy_n(x.begin() + local[c] * d, d, out.begin());
            return;
        }
        const Latent& lat = latent_[c];
        const double s = lat.tb > lat.ta ? (t - lat.ta) / (lat.tb - lat.ta) : 1.0;
        for (int v = 0; v < d; ++v) out[v] = lat.ua[v] + s * (lat.ub[v] - lat.ua[v]);
    };
    auto rhs = [&](StagePoint sp, std::span<const double> x, std::span<double> f) {
        const double t = sp == StagePoint::start ? ta : (sp == StagePoint::gamma ? ta + gamma_offset : tb);
        for (std::size_t p = 0; p < ifaces.size(); ++p) {
            const int lc = topo_.left_cell(ifaces[p]);
            const int rc = topo_.right_cell(ifaces[p]);
            if (lc >= 0) cell_state(lc, t, x, ul);
            if (rc >= 0) cell_state(rc, t, x, ur);
            if (lc < 0) ghost_value(bc_, true, ur, ul);
            if (rc < 0) ghost_value(bc_, false, ul, ur);
            law_.numerical_flux(ul, ur, std::span<double>(fl).subspan(p * d, d));
        }
        for (std::size_t a = 0; a < na; ++a) {
            const double* fL = &fl[pos[topo_.left_interface(active[a])] * d];
            const double* fR = &fl[pos[topo_.right_interface(active[a])] * d];
            if (law_.has_source()) law_.source(x.subspan(a * d, d), src);
            for (int v = 0; v < d; ++v) f[a * d + v] = -(fR[v] - fL[v]) / grid_.dx + src[v];
        }
    };

    std::vector<double> x0(n);
    for (std::size_t a = 0; a < na; ++a) {
        for (int v = 0; v < d; ++v) x0[a * d + v] = u(v, active[a]);
    }
    StepCounters counters;
    std::vector<double> u_next, x_pred;
    bool ok = false;
    if (integrator_.scheme == Scheme::trbdf2) {
        auto rec = trbdf2_step(rhs, x0, ta, dt, integrator_.gamma, structure, integrator_.newton(), &counters);
        if (rec) {
            ok = true;
            x_pred = hermite_extrapolate(*rec, tb);
            u_next = std::move(rec->u_next);
        }
    } else {
        const double theta = integrator_.scheme == Scheme::forward_euler ? 0.0 : integrator_.theta;
        auto rec = theta_step(rhs, x0, ta, dt, theta, structure, integrator_.newton(), &counters);
        if (rec) {
            ok = true;
            x_pred.resize(n);
            for (std::size_t j = 0; j < n; ++j) x_pred[j] = x0[j] + dt * rec->f_n[j];
            u_next = std::move(rec->u_next);
        }
    }
    ctx.rep.n_substeps += 1;
    ctx.rep.function_evals += counters.rhs_evals * static_cast<long>(n);
    ctx.rep.newton_iters += counters.newton_iterations;

    if (!ok) {
        if (newton_failures + 1 > max_newton_retries_) {
            throw EngineFailure("baseline: Newton failed repeatedly at t=" + std::to_string(ta));
        }
        level(ctx, lvl + 1, ta, tb, 2, active, newton_failures + 1);
        return;
    }

    std::vector<double> eps(na, 0.0), mag(na, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
        for (int v = 0; v < d; ++v) {
            eps[a] = std::max(eps[a], std::abs(u_next[a * d + v] - x_pred[a * d + v]));
            mag[a] = std::max(mag[a], std::abs(u_next[a * d + v]));
        }
    }
    if (lvl == 0) {
        ctx.level0_eps = eps;
        ctx.level0_mag = mag;
        ctx.level0_estimated = true;
    }

    IndexSet next_active;
    std::vector<double> eps_r, mag_r;
    for (std::size_t a = 0; a < na; ++a) {
        const int c = active[a];
        if (eps[a] > tol_.threshold(mag[a])) {
            next_active.push_back(c);
            eps_r.push_back(eps[a]);
            mag_r.push_back(mag[a]);
            continue;
        }
        Latent& lat = latent_[c];
        lat.ta = ta;
        lat.tb = tb;
        lat.ua.assign(x0.begin() + a * d, x0.begin() + (a + 1) * d);
        lat.ub.assign(u_next.begin() + a * d, u_next.begin() + (a + 1) * d);
        for (int v = 0; v < d; ++v) u(v, c) = u_next[a * d + v];
    }
    if (next_active.empty()) return;
    if (lvl + 1 > tol_.max_depth) {
        throw EngineFailure("baseline: refinement depth would exceed max_depth at t=" + std::to_string(ta));
    }
    const double dt_new = propose_substep(eps_r, mag_r, tol_, dt);
    const long m = std::isfinite(dt_new) ? std::max(2L, fraction_count(dt_new, dt)) : 2L;
    level(ctx, lvl + 1, ta, tb, m, next_active, 0);
}

}  // namespace cmr
