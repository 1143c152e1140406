#include "cmr/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmr {

State::State(int n_vars, int n_cells, double t)
    : time(t), n_vars_(n_vars), n_cells_(n_cells),
      values_(static_cast<std::size_t>(n_vars) * static_cast<std::size_t>(n_cells), 0.0) {
    if (n_vars < 1 || n_cells < 1) {
        throw std::invalid_argument("State: n_vars and n_cells must be positive");
    }
}

void State::cell(int i, std::span<double> out) const noexcept {
    for (int v = 0; v < n_vars_; ++v) {
        out[v] = (*this)(v, i);
    }
}

void State::set_cell(int i, std::span<const double> in) noexcept {
    for (int v = 0; v < n_vars_; ++v) {
        (*this)(v, i) = in[v];
    }
}

bool State::all_finite() const noexcept {
    for (double x : values_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Grid1D build_grid(double x_left, double x_right, int n_cells) {
    if (!(x_right > x_left) || !std::isfinite(x_left) || !std::isfinite(x_right)) {
        throw std::invalid_argument("build_grid: degenerate domain");
    }
    if (n_cells < 2) {
        throw std::invalid_argument("build_grid: need at least 2 cells, got " + std::to_string(n_cells));
    }
    Grid1D g;
    g.x_left = x_left;
    g.x_right = x_right;
    g.n_cells = n_cells;
    g.dx = (x_right - x_left) / n_cells;
    g.centers.resize(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) {
        g.centers[i] = x_left + (i + 0.5) * g.dx;
    }
    return g;
}

State cell_average_init(const Grid1D& grid, int n_vars, const InitialProfile& u0, const CellAverager& exact) {
    State s(n_vars, grid.n_cells, 0.0);
    std::vector<double> buf(static_cast<std::size_t>(n_vars));
    for (int i = 0; i < grid.n_cells; ++i) {
        if (exact) {
            exact(grid.interface_x(i), grid.interface_x(i + 1), buf);
        } else {
            u0(grid.centers[i], buf);
        }
        for (int v = 0; v < n_vars; ++v) {
            if (!std::isfinite(buf[v])) {
                throw std::invalid_argument("cell_average_init: non-finite initial value at cell " +
                                            std::to_string(i));
            }
            s(v, i) = buf[v];
        }
    }
    return s;
}

std::vector<double> total_mass(const State& state, const Grid1D& grid) {
    std::vector<double> m(static_cast<std::size_t>(state.n_vars()), 0.0);
    for (int v = 0; v < state.n_vars(); ++v) {
        double acc = 0.0;
        for (double x : state.var(v)) acc += x;
        m[v] = grid.dx * acc;
    }
    return m;
}

std::vector<double> total_abs_mass(const State& state, const Grid1D& grid) {
    std::vector<double> m(static_cast<std::size_t>(state.n_vars()), 0.0);
    for (int v = 0; v < state.n_vars(); ++v) {
        double acc = 0.0;
        for (double x : state.var(v)) acc += std::abs(x);
        m[v] = grid.dx * acc;
    }
    return m;
}

}  // namespace cmr
