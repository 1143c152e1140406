#pragma once

#include <stdexcept>

#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"
#include "cmr/grid.hpp"

namespace cmr {

class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReferenceOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Largest step; non-positive selects 1e-5 * max(1, t_end).
    double max_dt = 0.0;
};

/// Integrates the semi-discrete system from u0.time to t_end with an adaptive
/// Dormand-Prince 5(4) pair. Throws OracleFailure when the step size collapses.
State reference_solve(const State& u0, double t_end, const ConservationLaw& law, const Grid1D& grid,
                      const BoundaryCondition& bc, const ReferenceOptions& options = {});

/// sum_v sum_i dx |a - b|
double l1_error(const State& a, const State& b, const Grid1D& grid);

}  // namespace cmr
