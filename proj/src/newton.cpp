#include "cmr/newton.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cmr {

JacobianStructure JacobianStructure::dense(int n) {
    JacobianStructure s;
    s.n = n;
    s.n_colors = n;
    s.color.resize(static_cast<std::size_t>(n));
    s.column_rows.assign(static_cast<std::size_t>(n), std::vector<int>{});
    for (int j = 0; j < n; ++j) {
        s.color[j] = j;
        s.column_rows[j].resize(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) s.column_rows[j][r] = r;
    }
    return s;
}

JacobianStructure JacobianStructure::from_cell_graph(const std::vector<std::vector<int>>& neighbors, int n_vars) {
    const int nc = static_cast<int>(neighbors.size());
    std::vector<int> cell_color(static_cast<std::size_t>(nc), -1);
    int n_cell_colors = 0;
    for (int a = 0; a < nc; ++a) {
        std::set<int> taken;
        for (int b : neighbors[a]) {
            if (cell_color[b] >= 0) taken.insert(cell_color[b]);
            for (int c : neighbors[b]) {
                if (c != a && cell_color[c] >= 0) taken.insert(cell_color[c]);
            }
        }
        int c = 0;
        while (taken.count(c)) ++c;
        cell_color[a] = c;
        n_cell_colors = std::max(n_cell_colors, c + 1);
    }

    JacobianStructure s;
    s.n = nc * n_vars;
    s.n_colors = n_cell_colors * n_vars;
    s.color.resize(static_cast<std::size_t>(s.n));
    s.column_rows.resize(static_cast<std::size_t>(s.n));
    for (int a = 0; a < nc; ++a) {
        std::vector<int> cells{a};
        for (int b : neighbors[a]) {
            if (b != a) cells.push_back(b);
        }
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        for (int v = 0; v < n_vars; ++v) {
            const int col = a * n_vars + v;
            s.color[col] = cell_color[a] * n_vars + v;
            auto& rows = s.column_rows[col];
            for (int b : cells) {
                for (int w = 0; w < n_vars; ++w) rows.push_back(b * n_vars + w);
            }
        }
    }
    return s;
}

namespace {

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

NewtonReport newton_solve(const ResidualFn& residual, std::vector<double>& x, const JacobianStructure& structure,
                          const NewtonOptions& options) {
    const int n = static_cast<int>(x.size());
    NewtonReport rep;
    if (n == 0) {
        rep.converged = true;
        return rep;
    }
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    const double eps = std::numeric_limits<double>::epsilon();

    std::vector<double> r(n), rp(n), xp(n), h(n);
    Eigen::VectorXd rhs(n);
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::SparseMatrix<double> jac(n, n);
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;

    std::vector<std::vector<int>> by_color(static_cast<std::size_t>(structure.n_colors));
    for (int j = 0; j < n; ++j) by_color[structure.color[j]].push_back(j);

    bool pattern_analyzed = false;
    for (int it = 1; it <= options.max_iter; ++it) {
        residual(x, r);
        ++rep.residual_evals;
        if (!finite(r)) return rep;

        triplets.clear();
        for (const auto& cols : by_color) {
            if (cols.empty()) continue;
            xp = x;
            for (int j : cols) {
                h[j] = sqrt_eps * (1.0 + std::abs(x[j]));
                xp[j] = x[j] + h[j];
            }
            residual(xp, rp);
            ++rep.residual_evals;
            for (int j : cols) {
                for (int row : structure.column_rows[j]) {
                    triplets.emplace_back(row, j, (rp[row] - r[row]) / h[j]);
                }
            }
        }
        jac.setFromTriplets(triplets.begin(), triplets.end());
        if (!pattern_analyzed) {
            lu.analyzePattern(jac);
            pattern_analyzed = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) return rep;
        for (int i = 0; i < n; ++i) rhs[i] = -r[i];
        Eigen::VectorXd dx = lu.solve(rhs);
        if (lu.info() != Eigen::Success || !dx.allFinite()) return rep;

        double update = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] += dx[i];
            update = std::max(update, std::abs(dx[i]));
        }
        rep.iterations = it;
        rep.last_update = update;
        if (!finite(x)) return rep;
        if (update <= std::max(options.tol, 8.0 * eps * inf_norm(x))) {
            rep.converged = true;
            return rep;
        }
    }
    return rep;
}

}  // namespace cmr
