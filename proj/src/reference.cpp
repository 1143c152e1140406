#include "cmr/reference.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace cmr {

State reference_solve(const State& u0, double t_end, const ConservationLaw& law, const Grid1D& grid,
                      const BoundaryCondition& bc, const ReferenceOptions& options) {
    namespace odeint = boost::numeric::odeint;
    using Vec = std::vector<double>;
    if (!(t_end >= u0.time)) throw std::invalid_argument("reference_solve: t_end precedes the initial time");
    State out = u0;
    if (t_end == u0.time) return out;

    State work = u0;
    auto system = [&](const Vec& x, Vec& dxdt, double t) {
        work.values() = x;
        work.time = t;
        const SemiDiscreteResult r = semidiscrete_rhs(work, law, grid, bc);
        dxdt = r.tendency.values();
    };
    const double max_dt = options.max_dt > 0.0 ? options.max_dt : 1e-5 * std::max(1.0, t_end);
    auto stepper = odeint::make_controlled(options.atol, options.rtol, max_dt, odeint::runge_kutta_dopri5<Vec>());
    Vec x = u0.values();
    try {
        odeint::integrate_adaptive(stepper, system, x, u0.time, t_end, std::min(max_dt, t_end - u0.time));
    } catch (const std::exception& e) {
        throw OracleFailure(std::string("reference_solve: ") + e.what());
    }
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
        throw OracleFailure("reference_solve: non-finite solution");
    }
    out.values() = x;
    out.time = t_end;
    return out;
}

double l1_error(const State& a, const State& b, const Grid1D& grid) {
    if (a.n_vars() != b.n_vars() || a.n_cells() != b.n_cells() || a.n_cells() != grid.n_cells) {
        throw std::invalid_argument("l1_error: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < a.values().size(); ++j) s += std::abs(a.values()[j] - b.values()[j]);
    return s * grid.dx;
}

}  // namespace cmr
