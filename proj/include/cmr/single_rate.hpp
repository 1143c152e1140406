#pragma once

#include <vector>

#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"
#include "cmr/grid.hpp"
#include "cmr/integrators.hpp"
#include "cmr/newton.hpp"

namespace cmr {

/// Jacobian sparsity of the full three-point finite-volume stencil, unknowns cell-major.
JacobianStructure stencil_structure(const Topology& topo, int n_vars);

/// Cell-major packing used by the implicit solvers: x[i * d + v] = u(v, i).
std::vector<double> pack_cell_major(const State& u);
void unpack_cell_major(std::span<const double> x, State& u);

/// One fixed TR-BDF2 (or theta) step of the whole semi-discrete system, built directly
/// on semidiscrete_rhs. Throws std::runtime_error when Newton fails.
void single_rate_step(State& u, double dt, const ConservationLaw& law, const Grid1D& grid,
                      const BoundaryCondition& bc, const IntegratorConfig& integrator,
                      StepCounters* counters = nullptr);

}  // namespace cmr
