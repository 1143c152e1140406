#pragma once

#include <vector>

#include "cmr/active_set.hpp"
#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"
#include "cmr/grid.hpp"
#include "cmr/integrators.hpp"
#include "cmr/multirate.hpp"

namespace cmr {

/// Component-partitioned multirate scheme.
///
/// Cells, not fluxes, are tested. Latent cells keep their tentative value and are
/// interpolated linearly in time while their active neighbours are re-solved on
/// finer sub-steps. Fluxes at the active/latent boundary are therefore evaluated
/// twice with different data, so total mass is not conserved.
class ComponentBaseline {
public:
    ComponentBaseline(const ConservationLaw& law, Grid1D grid, BoundaryCondition bc, ToleranceConfig tol,
                      IntegratorConfig integrator, int max_newton_retries = 5);

    /// One global step; error_norm is the RMS of the level-0 per-cell error ratios.
    StepReport step(State& u, double dt);

private:
    struct Latent {
        double ta = 0.0, tb = 0.0;
        std::vector<double> ua, ub;
    };
    struct Context;

    void level(Context& ctx, int lvl, double t0, double t1, long m, const IndexSet& active, int newton_failures);
    void substep(Context& ctx, int lvl, double ta, double tb, const IndexSet& active, int newton_failures);

    const ConservationLaw& law_;
    Grid1D grid_;
    BoundaryCondition bc_;
    Topology topo_;
    ToleranceConfig tol_;
    IntegratorConfig integrator_;
    int max_newton_retries_;
    std::vector<Latent> latent_;
};

}  // namespace cmr
