#include "cmr/multirate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace cmr {

double GlobalStepController::initial() const noexcept {
    if (tol_.global_control == GlobalControl::fixed) return tol_.global_dt;
    return std::min(tol_.global_dt, tol_.max_global_dt);
}

double GlobalStepController::next(double dt_used, double error_norm) const {
    if (tol_.global_control == GlobalControl::fixed) return tol_.global_dt;
    constexpr double min_factor = 0.2;
    double fac = tol_.max_growth;
    if (error_norm > 0.0) fac = tol_.nu * std::pow(error_norm, -1.0 / (order_ + 1));
    if (!std::isfinite(fac)) fac = error_norm > 0.0 ? min_factor : tol_.max_growth;
    fac = std::clamp(fac, min_factor, tol_.max_growth);
    const double proposal = dt_used * fac;
    if (!std::isfinite(tol_.max_global_dt)) return proposal;
    if (proposal >= tol_.max_global_dt) return tol_.max_global_dt;
    return snap_to_fraction(proposal, tol_.max_global_dt);
}

double rms_error_norm(std::span<const double> eps, std::span<const double> flux_magnitude,
                      const ToleranceConfig& tol) {
    if (eps.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t p = 0; p < eps.size(); ++p) {
        const double r = eps[p] / tol.threshold(flux_magnitude[p]);
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(eps.size()));
}

double courant_number(const State& u, const ConservationLaw& law, const Grid1D& grid, double dt) {
    std::vector<double> c(static_cast<std::size_t>(u.n_vars()));
    double speed = 0.0;
    for (int i = 0; i < u.n_cells(); ++i) {
        u.cell(i, c);
        speed = std::max(speed, law.wave_speeds(c).max_abs());
    }
    return speed * dt / grid.dx;
}

// Restriction of the semi-discrete system to the active cells of one level.
// Unknowns are cell-major: x[a * d + v] for the a-th active cell.
struct MultirateEngine::LocalSystem {
    const MultirateEngine& eng;
    int d;
    IndexSet cells;
    IndexSet fresh;
    std::vector<int> fresh_left, fresh_right;  // local cell or -1 for a ghost
    std::vector<int> cell_left, cell_right;    // fresh position or -1 when frozen
    std::vector<const AcceptedFluxRecord*> frozen_left, frozen_right;
    JacobianStructure structure;
    std::vector<double> fbuf, ul, ur, src;

    LocalSystem(const MultirateEngine& e, const IndexSet& active, const IndexSet& fresh_ifaces)
        : eng(e), d(e.law_.n_vars()), cells(active), fresh(fresh_ifaces) {
        const Topology& topo = eng.topo_;
        std::vector<int> local(static_cast<std::size_t>(topo.n_cells()), -1);
        for (std::size_t a = 0; a < cells.size(); ++a) local[cells[a]] = static_cast<int>(a);
        std::vector<int> fresh_pos(static_cast<std::size_t>(topo.n_interfaces()), -1);
        for (std::size_t p = 0; p < fresh.size(); ++p) fresh_pos[fresh[p]] = static_cast<int>(p);

        fresh_left.resize(fresh.size());
        fresh_right.resize(fresh.size());
        for (std::size_t p = 0; p < fresh.size(); ++p) {
            const int lc = topo.left_cell(fresh[p]);
            const int rc = topo.right_cell(fresh[p]);
            fresh_left[p] = lc >= 0 ? local[lc] : -1;
            fresh_right[p] = rc >= 0 ? local[rc] : -1;
            if ((lc >= 0 && fresh_left[p] < 0) || (rc >= 0 && fresh_right[p] < 0)) {
                throw EngineFailure("partition error: fresh interface " + std::to_string(fresh[p]) +
                                    " borders an inactive cell");
            }
        }

        const std::size_t na = cells.size();
        cell_left.assign(na, -1);
        cell_right.assign(na, -1);
        frozen_left.assign(na, nullptr);
        frozen_right.assign(na, nullptr);
        std::vector<std::vector<int>> neighbors(na);
        for (std::size_t a = 0; a < na; ++a) {
            const int li = topo.left_interface(cells[a]);
            const int ri = topo.right_interface(cells[a]);
            cell_left[a] = fresh_pos[li];
            cell_right[a] = fresh_pos[ri];
            if (cell_left[a] < 0) frozen_left[a] = eng.frozen_[li];
            if (cell_right[a] < 0) frozen_right[a] = eng.frozen_[ri];
            if ((cell_left[a] < 0 && !frozen_left[a]) || (cell_right[a] < 0 && !frozen_right[a])) {
                throw EngineFailure("partition error: cell " + std::to_string(cells[a]) +
                                    " has an interface that is neither fresh nor accepted");
            }
            if (cell_left[a] >= 0 && fresh_left[cell_left[a]] >= 0) neighbors[a].push_back(fresh_left[cell_left[a]]);
            if (cell_right[a] >= 0 && fresh_right[cell_right[a]] >= 0) {
                neighbors[a].push_back(fresh_right[cell_right[a]]);
            }
        }
        structure = JacobianStructure::from_cell_graph(neighbors, d);
        fbuf.resize(fresh.size() * d);
        ul.resize(d);
        ur.resize(d);
        src.assign(d, 0.0);
    }

    [[nodiscard]] std::size_t size() const noexcept { return cells.size() * d; }

    // Fresh interface fluxes for the local state x, interface-major.
    bool fluxes(std::span<const double> x, std::span<double> out) {
        bool ok = true;
        for (std::size_t p = 0; p < fresh.size(); ++p) {
            const int la = fresh_left[p];
            const int ra = fresh_right[p];
            if (la >= 0) std::copy_n(x.begin() + la * d, d, ul.begin());
            if (ra >= 0) std::copy_n(x.begin() + ra * d, d, ur.begin());
            if (la < 0) ghost_value(eng.bc_, true, ur, ul);
            if (ra < 0) ghost_value(eng.bc_, false, ul, ur);
            auto f = out.subspan(p * d, d);
            eng.law_.numerical_flux(ul, ur, f);
            for (double v : f) ok = ok && std::isfinite(v);
        }
        return ok;
    }

    static std::span<const double> stage_value(const AcceptedFluxRecord& r, StagePoint sp) {
        switch (sp) {
            case StagePoint::start: return r.value_start;
            case StagePoint::gamma: return r.value_gamma;
            case StagePoint::end: return r.value_end;
        }
        return r.value_end;
    }

    void rhs(StagePoint sp, std::span<const double> x, std::span<double> f) {
        if (!fluxes(x, fbuf)) {
            std::fill(f.begin(), f.end(), std::numeric_limits<double>::quiet_NaN());
            return;
        }
        const double dx = eng.grid_.dx;
        const bool has_source = eng.law_.has_source();
        for (std::size_t a = 0; a < cells.size(); ++a) {
            const double* fl = cell_left[a] >= 0 ? &fbuf[cell_left[a] * d] : stage_value(*frozen_left[a], sp).data();
            const double* fr =
                cell_right[a] >= 0 ? &fbuf[cell_right[a] * d] : stage_value(*frozen_right[a], sp).data();
            if (has_source) eng.law_.source(x.subspan(a * d, d), src);
            for (int v = 0; v < d; ++v) f[a * d + v] = -(fr[v] - fl[v]) / dx + src[v];
        }
    }

    // Sum over stage points of weight * source, per active cell.
    void source_quadrature(const StageWeights& w, std::span<const double> xs, std::span<const double> xg,
                           std::span<const double> xe, std::span<double> out) const {
        std::vector<double> s0(d), s1(d), s2(d);
        for (std::size_t a = 0; a < cells.size(); ++a) {
            eng.law_.source(xs.subspan(a * d, d), s0);
            if (w.gamma != 0.0) eng.law_.source(xg.subspan(a * d, d), s1);
            eng.law_.source(xe.subspan(a * d, d), s2);
            for (int v = 0; v < d; ++v) {
                out[a * d + v] = w.start * s0[v] + (w.gamma != 0.0 ? w.gamma * s1[v] : 0.0) + w.end * s2[v];
            }
        }
    }
};

struct MultirateEngine::StepContext {
    State& u;
    StepReport& rep;
    std::deque<AcceptedFluxRecord> records;
    std::vector<double> level0_eps, level0_fmag;
    bool level0_estimated = false;
    std::vector<char> refined;
};

MultirateEngine::MultirateEngine(const ConservationLaw& law, Grid1D grid, BoundaryCondition bc,
                                 ToleranceConfig tol, IntegratorConfig integrator, EngineOptions options)
    : law_(law), grid_(std::move(grid)), bc_(std::move(bc)),
      topo_(grid_.n_cells, bc_.kind == BoundaryKind::periodic), tol_(tol), integrator_(integrator),
      options_(options), ledger_(law.n_vars(), grid_.n_cells, topo_.periodic()),
      frozen_(static_cast<std::size_t>(topo_.n_interfaces()), nullptr) {
    tol_.validate();
    integrator_.validate();
    if (bc_.kind == BoundaryKind::dirichlet && static_cast<int>(bc_.left_value.size()) != law.n_vars()) {
        throw std::invalid_argument("engine: dirichlet values do not match n_vars");
    }
}

MultirateEngine::~MultirateEngine() = default;

StepReport MultirateEngine::step(State& u, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("engine: global step must be positive");
    if (u.n_vars() != law_.n_vars() || u.n_cells() != grid_.n_cells) {
        throw std::invalid_argument("engine: state shape does not match problem");
    }
    StepReport rep;
    rep.t_start = u.time;
    rep.dt = dt;
    rep.courant = courant_number(u, law_, grid_, dt);

    ledger_.reset();
    std::fill(frozen_.begin(), frozen_.end(), nullptr);
    const State before = u;
    StepContext ctx{u, rep, {}, {}, {}, false, std::vector<char>(static_cast<std::size_t>(grid_.n_cells), 0)};

    IndexSet all_cells(static_cast<std::size_t>(grid_.n_cells));
    for (int i = 0; i < grid_.n_cells; ++i) all_cells[i] = i;
    IndexSet all_ifaces(static_cast<std::size_t>(topo_.n_interfaces()));
    for (int k = 0; k < topo_.n_interfaces(); ++k) all_ifaces[k] = k;

    const double t0 = u.time;
    const double t1 = t0 + dt;
    level_M(ctx, 0, t0, t1, 1, all_cells, all_ifaces, 0);
    if (rep.full_rejection) {
        rep.error_norm = ctx.level0_estimated ? rms_error_norm(ctx.level0_eps, ctx.level0_fmag, tol_)
                                              : std::numeric_limits<double>::infinity();
        return rep;
    }
    u.time = t1;
    if (!u.all_finite()) throw EngineFailure("non-finite state after global step at t=" + std::to_string(t0));

    rep.error_norm = ctx.level0_estimated ? rms_error_norm(ctx.level0_eps, ctx.level0_fmag, tol_)
                                          : std::numeric_limits<double>::infinity();
    rep.refined_cells = static_cast<std::size_t>(std::count(ctx.refined.begin(), ctx.refined.end(), 1));
    rep.audit = conservation_audit(ledger_, before, u, grid_);
    rep.audited = true;
    return rep;
}

void MultirateEngine::level_M(StepContext& ctx, int level, double t0, double t1, long m, const IndexSet& active,
                              const IndexSet& fresh, int newton_failures) {
    if (level > tol_.max_depth) {
        throw EngineFailure("refinement depth " + std::to_string(level) + " exceeds max_depth " +
                            std::to_string(tol_.max_depth) + " at t=" + std::to_string(t0));
    }
    ctx.rep.max_level = std::max(ctx.rep.max_level, level);
    if (level > 0) {
        for (int c : active) ctx.refined[c] = 1;
    }
    LocalSystem sys(*this, active, fresh);
    const double span = t1 - t0;
    for (long s = 0; s < m; ++s) {
        const double ta = s == 0 ? t0 : t0 + span * static_cast<double>(s) / static_cast<double>(m);
        const double tb = s == m - 1 ? t1 : t0 + span * static_cast<double>(s + 1) / static_cast<double>(m);
        substep_S(ctx, sys, level, s, ta, tb, newton_failures);
    }
}

void MultirateEngine::substep_S(StepContext& ctx, LocalSystem& sys, int level, long s, double ta, double tb,
                                int newton_failures) {
    const int d = sys.d;
    const double dt = tb - ta;
    const std::size_t n = sys.size();
    const std::size_t nf = sys.fresh.size();
    State& u = ctx.u;

    std::vector<double> x0(n);
    for (std::size_t a = 0; a < sys.cells.size(); ++a) {
        for (int v = 0; v < d; ++v) x0[a * d + v] = u(v, sys.cells[a]);
    }

    StagedRhs rhs = [&sys](StagePoint sp, std::span<const double> x, std::span<double> f) { sys.rhs(sp, x, f); };
    StepCounters counters;
    StageWeights w;
    std::vector<double> u_next, f_n, x_gamma, x_end, x_pred;
    bool ok = false;
    if (integrator_.scheme == Scheme::trbdf2) {
        auto rec = trbdf2_step(rhs, x0, ta, dt, integrator_.gamma, sys.structure, integrator_.newton(), &counters);
        if (rec) {
            ok = true;
            w = trbdf2_weights(integrator_.gamma);
            x_pred = hermite_extrapolate(*rec, tb);
            u_next = std::move(rec->u_next);
            x_gamma = std::move(rec->eval_gamma);
            x_end = std::move(rec->eval_next);
        }
    } else {
        const double theta = integrator_.scheme == Scheme::forward_euler ? 0.0 : integrator_.theta;
        auto rec = theta_step(rhs, x0, ta, dt, theta, sys.structure, integrator_.newton(), &counters);
        if (rec) {
            ok = true;
            w = theta_weights(theta);
            // Explicit Euler predictor as the reference for first-order error estimation.
            x_pred.resize(n);
            for (std::size_t j = 0; j < n; ++j) x_pred[j] = x0[j] + dt * rec->f_n[j];
            u_next = std::move(rec->u_next);
            x_end = std::move(rec->eval_next);
            x_gamma = x0;
        }
    }
    ctx.rep.n_substeps += 1;
    ctx.rep.components_updated += static_cast<long>(n);
    ctx.rep.function_evals += counters.rhs_evals * static_cast<long>(n);
    ctx.rep.newton_iters += counters.newton_iterations;

    SubstepTrace trace;
    trace.level = level;
    trace.substep = s;
    trace.t_star = ta;
    trace.dt_star = dt;
    trace.active_cells = &sys.cells;

    if (!ok) {
        // Newton failure: every fresh flux is rejected and the interval is halved.
        if (newton_failures + 1 > options_.max_newton_retries) {
            throw EngineFailure("Newton failed " + std::to_string(newton_failures + 1) + " times in a row at t=" +
                                std::to_string(ta) + " (dt=" + std::to_string(dt) + ")");
        }
        trace.newton_failed = true;
        trace.rejected = sys.fresh;
        trace.refinement = 2;
        if (trace_) trace_(trace);
        if (level == 0 && options_.split_full_rejection) {
            ctx.rep.full_rejection = true;
            ctx.rep.level0_refinement = 2;
            ctx.rep.level0_fluxes = ctx.rep.level0_rejected = sys.fresh.size();
            return;
        }
        level_M(ctx, level + 1, ta, tb, 2, sys.cells, sys.fresh, newton_failures + 1);
        return;
    }

    std::vector<double> f_start(nf * d), f_gamma(nf * d, 0.0), f_end(nf * d), f_ext(nf * d);
    bool finite = sys.fluxes(x0, f_start);
    if (w.gamma != 0.0) finite = sys.fluxes(x_gamma, f_gamma) && finite;
    finite = sys.fluxes(x_end, f_end) && finite;
    const bool ext_finite = sys.fluxes(x_pred, f_ext);
    ctx.rep.function_evals += static_cast<long>(n);
    if (!finite) throw EngineFailure("non-finite flux at t=" + std::to_string(ta));

    std::vector<double> eps = estimate_flux_error(f_end, f_ext, d);
    if (!ext_finite) std::fill(eps.begin(), eps.end(), std::numeric_limits<double>::infinity());
    std::vector<double> fmag(nf, 0.0);
    for (std::size_t p = 0; p < nf; ++p) {
        for (int v = 0; v < d; ++v) fmag[p] = std::max(fmag[p], std::abs(f_end[p * d + v]));
    }
    if (level == 0 && s == 0) {
        ctx.level0_eps = eps;
        ctx.level0_fmag = fmag;
        ctx.level0_estimated = true;
    }

    std::vector<int> rejected_pos = select_rejected(eps, f_end, d, tol_);
    long forced_m = 0;
    if (policy_) {
        if (auto dec = policy_(level, ta, dt, sys.fresh)) {
            rejected_pos.clear();
            for (int k : dec->rejected) {
                auto it = std::lower_bound(sys.fresh.begin(), sys.fresh.end(), k);
                if (it != sys.fresh.end() && *it == k) rejected_pos.push_back(static_cast<int>(it - sys.fresh.begin()));
            }
            forced_m = dec->m;
        }
    }
    std::sort(rejected_pos.begin(), rejected_pos.end());
    rejected_pos.erase(std::unique(rejected_pos.begin(), rejected_pos.end()), rejected_pos.end());

    if (!rejected_pos.empty() && options_.mode == EngineMode::single_rate) {
        rejected_pos.resize(nf);
        for (std::size_t p = 0; p < nf; ++p) rejected_pos[p] = static_cast<int>(p);
    } else if (!rejected_pos.empty() && options_.widening && d >= 2) {
        std::vector<double> courant(static_cast<std::size_t>(grid_.n_cells), 0.0);
        std::vector<WaveDirections> dirs(static_cast<std::size_t>(grid_.n_cells));
        for (std::size_t a = 0; a < sys.cells.size(); ++a) {
            const WaveSpeeds ws = law_.wave_speeds(std::span<const double>(x_end).subspan(a * d, d));
            courant[sys.cells[a]] = ws.max_abs() * dt / grid_.dx;
            dirs[sys.cells[a]] = {ws.min < 0.0, ws.max > 0.0};
        }
        IndexSet r;
        for (int p : rejected_pos) r.push_back(sys.fresh[p]);
        const IndexSet widened = widen_rejections(r, courant, dirs, topo_);
        rejected_pos.clear();
        for (int k : widened) {
            auto it = std::lower_bound(sys.fresh.begin(), sys.fresh.end(), k);
            if (it != sys.fresh.end() && *it == k) rejected_pos.push_back(static_cast<int>(it - sys.fresh.begin()));
        }
    }

    if (level == 0) {
        ctx.rep.level0_fluxes = nf;
        ctx.rep.level0_rejected = rejected_pos.size();
        std::vector<char> hit(nf, 0);
        for (int p : rejected_pos) hit[p] = 1;
        for (std::size_t p = 0; p < nf; ++p) {
            if (!hit[p]) ctx.rep.latent_error = std::max(ctx.rep.latent_error, eps[p] / tol_.threshold(fmag[p]));
        }
    }

    IndexSet rejected;
    rejected.reserve(rejected_pos.size());
    for (int p : rejected_pos) rejected.push_back(sys.fresh[p]);
    if (!rejected.empty() && level + 1 > tol_.max_depth) {
        throw EngineFailure("refinement depth would exceed max_depth " + std::to_string(tol_.max_depth) +
                            " at t=" + std::to_string(ta) + " (dt=" + std::to_string(dt) + ", " +
                            std::to_string(rejected.size()) + " rejected fluxes)");
    }

    // Accepted fresh fluxes enter the ledger once and become frozen for the finer levels.
    std::vector<char> is_rejected(nf, 0);
    for (int p : rejected_pos) is_rejected[p] = 1;
    std::vector<int> newly_frozen;
    std::vector<double> piece(d);
    for (std::size_t p = 0; p < nf; ++p) {
        if (is_rejected[p]) continue;
        for (int v = 0; v < d; ++v) {
            const std::size_t j = p * d + v;
            piece[v] = dt * (w.start * f_start[j] + w.gamma * f_gamma[j] + w.end * f_end[j]);
        }
        ledger_.add_flux(sys.fresh[p], piece);
        if (!rejected.empty()) {
            auto& rec = ctx.records.emplace_back();
            rec.interface_index = sys.fresh[p];
            rec.value_start.assign(f_start.begin() + p * d, f_start.begin() + (p + 1) * d);
            rec.value_gamma.assign(f_gamma.begin() + p * d, f_gamma.begin() + (p + 1) * d);
            rec.value_end.assign(f_end.begin() + p * d, f_end.begin() + (p + 1) * d);
            rec.accepted_dt = dt;
            rec.accepted_at_time = ta;
            frozen_[sys.fresh[p]] = &rec;
            newly_frozen.push_back(sys.fresh[p]);
        }
    }

    const IndexSet next_active = derive_active_cells(rejected, topo_);
    std::vector<double> src_q;
    if (law_.has_source()) {
        src_q.resize(n);
        sys.source_quadrature(w, x0, x_gamma, x_end, src_q);
    }
    std::size_t q = 0;
    for (std::size_t a = 0; a < sys.cells.size(); ++a) {
        const int c = sys.cells[a];
        while (q < next_active.size() && next_active[q] < c) ++q;
        if (q < next_active.size() && next_active[q] == c) continue;
        for (int v = 0; v < d; ++v) u(v, c) = u_next[a * d + v];
        if (law_.has_source()) {
            for (int v = 0; v < d; ++v) piece[v] = dt * src_q[a * d + v];
            ledger_.add_source(c, piece);
        }
    }

    if (rejected.empty()) {
        if (trace_) trace_(trace);
        return;
    }

    long m = forced_m;
    if (m <= 0) {
        std::vector<double> eps_r, fmag_r;
        for (int p : rejected_pos) {
            eps_r.push_back(eps[p]);
            fmag_r.push_back(fmag[p]);
        }
        const double dt_new = propose_substep(eps_r, fmag_r, tol_, dt);
        m = std::isfinite(dt_new) ? std::max(2L, fraction_count(dt_new, dt)) : 2L;
    }
    if (level == 0) ctx.rep.level0_refinement = m;
    trace.rejected = rejected;
    trace.refinement = m;
    if (trace_) trace_(trace);
    if (level == 0 && options_.split_full_rejection && rejected.size() == nf) {
        // Nothing was committed above, so u is still the start state.
        ctx.rep.full_rejection = true;
        for (int k : newly_frozen) frozen_[k] = nullptr;
        return;
    }

    level_M(ctx, level + 1, ta, tb, m, next_active, rejected, 0);
    for (int k : newly_frozen) frozen_[k] = nullptr;
}

IntegrationSummary drive(const Stepper& stepper, const GlobalStepController& controller, State& u, double t_end,
                         const std::vector<double>& stops, const StepObserver& observer) {
    if (!(t_end >= u.time)) throw std::invalid_argument("drive: t_end precedes the initial time");
    std::vector<double> marks;
    for (double s : stops) {
        if (s > u.time && s < t_end) marks.push_back(s);
    }
    marks.push_back(t_end);
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    IntegrationSummary sum;
    double last_err = 0.0;
    double last_h = 0.0;
    // Covers [u.time, slab_end]; a fully rejected attempt is split into equal pieces.
    auto take = [&](auto&& self, double slab_end, int depth) -> void {
        const double h = slab_end - u.time;
        const StepReport rep = stepper(u, h);
        sum.n_substeps += rep.n_substeps;
        sum.components_updated += rep.components_updated;
        sum.function_evals += rep.function_evals;
        sum.newton_iters += rep.newton_iters;
        if (rep.full_rejection) {
            if (depth >= controller.max_depth()) {
                throw EngineFailure("global step split more than max_depth times at t=" + std::to_string(u.time));
            }
            const long m = std::max(2L, rep.level0_refinement);
            const double t0 = u.time;
            for (long j = 1; j <= m; ++j) {
                const double end = j == m ? slab_end : t0 + h * static_cast<double>(j) / static_cast<double>(m);
                self(self, end, depth + 1);
            }
            return;
        }
        u.time = slab_end;
        ++sum.n_global_steps;
        last_err = rep.error_norm;
        last_h = h;
        if (rep.audited) {
            sum.max_reconstruction_residual =
                std::max(sum.max_reconstruction_residual, rep.audit.reconstruction_residual);
            sum.max_side_mismatch = std::max(sum.max_side_mismatch, rep.audit.max_side_mismatch);
            sum.ledger_bitwise = sum.ledger_bitwise && rep.audit.side_mismatch_bitwise_zero;
        }
        if (observer) observer(rep, u);
    };

    double dt = controller.initial();
    const double t_origin = u.time;
    std::size_t next = 0;
    const double t_scale = std::max(std::abs(t_end), 1.0);
    while (next < marks.size()) {
        const double target = marks[next];
        const double remaining = target - u.time;
        if (remaining <= 1e-14 * t_scale) {
            u.time = target;
            ++next;
            continue;
        }
        // Fixed slabs stay on the grid t_start + k dt even after landing on an output time.
        double step_end = u.time + dt;
        if (controller.fixed()) {
            const double k = std::floor((u.time - t_origin) / dt + 1e-9) + 1.0;
            step_end = t_origin + k * dt;
        }
        const bool landed = step_end >= target - 1e-12 * (target - u.time);
        const double slab_end = landed ? target : step_end;
        const double dt_try = slab_end - u.time;
        take(take, slab_end, 0);
        if (landed) ++next;
        const double proposal = controller.next(last_h, last_err);
        // A step shortened only to hit an output time does not shrink the next one.
        dt = (landed && last_h == dt_try && dt_try < dt && last_err <= 1.0) ? std::max(dt, proposal) : proposal;
    }
    return sum;
}

}  // namespace cmr
