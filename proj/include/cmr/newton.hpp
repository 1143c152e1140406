#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cmr {

/// Sparsity of a finite-difference Jacobian.
///
/// Columns sharing a color are perturbed together; that is valid when no
/// row depends on two columns of the same color.
struct JacobianStructure {
    int n = 0;
    int n_colors = 0;
    std::vector<int> color;                    // per column
    std::vector<std::vector<int>> column_rows;  // rows that depend on each column

    /// Every column its own color, every row dependent on every column.
    static JacobianStructure dense(int n);

    /// Unknowns laid out as x[cell * n_vars + v]; cells couple to themselves and
    /// to the listed neighbors (all variables). Uses a greedy distance-2 coloring.
    static JacobianStructure from_cell_graph(const std::vector<std::vector<int>>& neighbors, int n_vars);
};

struct NewtonOptions {
    double tol = 1e-12;  // max-norm of the update between consecutive iterates
    int max_iter = 25;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    int residual_evals = 0;
    double last_update = 0.0;
};

using ResidualFn = std::function<void(std::span<const double> x, std::span<double> r)>;

/// Newton iteration on residual(x) = 0 starting from `x`; `x` holds the last iterate on return.
///
/// The Jacobian is rebuilt by forward differences at every iteration with
/// perturbation sqrt(eps) * (1 + |x_j|). Convergence is declared when the update
/// drops below max(tol, 8 eps ||x||_inf); a singular Jacobian, non-finite residual
/// or exhausted iteration budget yields converged == false.
NewtonReport newton_solve(const ResidualFn& residual, std::vector<double>& x, const JacobianStructure& structure,
                          const NewtonOptions& options);

}  // namespace cmr
