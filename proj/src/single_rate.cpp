#include "cmr/single_rate.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace cmr {

JacobianStructure stencil_structure(const Topology& topo, int n_vars) {
    const int n = topo.n_cells();
    std::vector<std::vector<int>> neighbors(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int l = topo.left_cell(topo.left_interface(i));
        const int r = topo.right_cell(topo.right_interface(i));
        if (l >= 0) neighbors[i].push_back(l);
        if (r >= 0) neighbors[i].push_back(r);
    }
    return JacobianStructure::from_cell_graph(neighbors, n_vars);
}

std::vector<double> pack_cell_major(const State& u) {
    const int d = u.n_vars();
    std::vector<double> x(u.values().size());
    for (int i = 0; i < u.n_cells(); ++i) {
        for (int v = 0; v < d; ++v) x[static_cast<std::size_t>(i) * d + v] = u(v, i);
    }
    return x;
}

void unpack_cell_major(std::span<const double> x, State& u) {
    const int d = u.n_vars();
    for (int i = 0; i < u.n_cells(); ++i) {
        for (int v = 0; v < d; ++v) u(v, i) = x[static_cast<std::size_t>(i) * d + v];
    }
}

void single_rate_step(State& u, double dt, const ConservationLaw& law, const Grid1D& grid,
                      const BoundaryCondition& bc, const IntegratorConfig& integrator, StepCounters* counters) {
    const Topology topo(grid.n_cells, bc.kind == BoundaryKind::periodic);
    const JacobianStructure structure = stencil_structure(topo, law.n_vars());
    State work = u;
    auto f = [&](std::span<const double> x, std::span<double> out) {
        unpack_cell_major(x, work);
        try {
            const SemiDiscreteResult r = semidiscrete_rhs(work, law, grid, bc);
            const auto packed = pack_cell_major(r.tendency);
            std::copy(packed.begin(), packed.end(), out.begin());
        } catch (const NumericalFailure&) {
            std::fill(out.begin(), out.end(), std::numeric_limits<double>::quiet_NaN());
        }
    };
    const std::vector<double> x0 = pack_cell_major(u);
    std::vector<double> x1;
    if (integrator.scheme == Scheme::trbdf2) {
        auto rec = trbdf2_step(plain_rhs(f), x0, u.time, dt, integrator.gamma, structure, integrator.newton(),
                               counters);
        if (!rec) throw std::runtime_error("single-rate step: Newton failed at t=" + std::to_string(u.time));
        x1 = std::move(rec->u_next);
    } else {
        const double theta = integrator.scheme == Scheme::forward_euler ? 0.0 : integrator.theta;
        auto rec = theta_step(plain_rhs(f), x0, u.time, dt, theta, structure, integrator.newton(), counters);
        if (!rec) throw std::runtime_error("single-rate step: Newton failed at t=" + std::to_string(u.time));
        x1 = std::move(rec->u_next);
    }
    unpack_cell_major(x1, u);
    u.time += dt;
}

}  // namespace cmr
