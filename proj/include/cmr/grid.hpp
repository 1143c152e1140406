#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cmr {

/// Uniform 1D finite-volume grid on [x_left, x_right].
struct Grid1D {
    double x_left = 0.0;
    double x_right = 1.0;
    int n_cells = 0;
    double dx = 0.0;
    std::vector<double> centers;

    [[nodiscard]] int n_interfaces() const noexcept { return n_cells + 1; }
    /// Position of interface k, k = 0..n_cells.
    [[nodiscard]] double interface_x(int k) const noexcept { return x_left + k * dx; }
};

/// Cell-average state, variable-major: values[v * n_cells + i].
class State {
public:
    State() = default;
    State(int n_vars, int n_cells, double time = 0.0);

    [[nodiscard]] int n_vars() const noexcept { return n_vars_; }
    [[nodiscard]] int n_cells() const noexcept { return n_cells_; }

    double& operator()(int v, int i) noexcept { return values_[static_cast<std::size_t>(v) * n_cells_ + i]; }
    double operator()(int v, int i) const noexcept { return values_[static_cast<std::size_t>(v) * n_cells_ + i]; }

    [[nodiscard]] std::span<double> var(int v) noexcept {
        return {values_.data() + static_cast<std::size_t>(v) * n_cells_, static_cast<std::size_t>(n_cells_)};
    }
    [[nodiscard]] std::span<const double> var(int v) const noexcept {
        return {values_.data() + static_cast<std::size_t>(v) * n_cells_, static_cast<std::size_t>(n_cells_)};
    }

    /// Copies the d values of cell i into out (out.size() >= n_vars).
    void cell(int i, std::span<double> out) const noexcept;
    void set_cell(int i, std::span<const double> in) noexcept;

    [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    [[nodiscard]] bool all_finite() const noexcept;

    double time = 0.0;

private:
    int n_vars_ = 0;
    int n_cells_ = 0;
    std::vector<double> values_;
};

using InitialProfile = std::function<void(double x, std::span<double> out)>;
/// Exact cell average of each variable over [a, b]; optional.
using CellAverager = std::function<void(double a, double b, std::span<double> out)>;

/// Throws std::invalid_argument when x_right <= x_left or n_cells < 2.
Grid1D build_grid(double x_left, double x_right, int n_cells);

/// Midpoint sampling of u0, or the exact averages when `exact` is supplied.
State cell_average_init(const Grid1D& grid, int n_vars, const InitialProfile& u0,
                        const CellAverager& exact = nullptr);

/// mass[v] = sum_i dx * values[v][i]
std::vector<double> total_mass(const State& state, const Grid1D& grid);

/// sum_i dx * |values[v][i]|, used to normalise mass drift when the signed mass vanishes.
std::vector<double> total_abs_mass(const State& state, const Grid1D& grid);

}  // namespace cmr
