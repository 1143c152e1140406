#pragma once

#include <span>
#include <vector>

#include "cmr/grid.hpp"

namespace cmr {

enum class BoundaryKind {
    dirichlet,  // ghost holds a prescribed value
    periodic,   // ghost mirrors the opposite-end interior cell
    outflow,    // zero-gradient: ghost copies the adjacent interior cell
};

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::periodic;
    std::vector<double> left_value;   // dirichlet only
    std::vector<double> right_value;  // dirichlet only

    static BoundaryCondition periodic();
    static BoundaryCondition dirichlet(std::vector<double> left, std::vector<double> right);
    static BoundaryCondition outflow();
};

struct GhostValues {
    std::vector<double> left;
    std::vector<double> right;
};

/// Ghost-cell values for the current state. Time is accepted for future time-dependent data.
GhostValues apply_bc(const State& state, const BoundaryCondition& bc, double t);

/// Ghost value next to a boundary cell whose current values are `inner`.
void ghost_value(const BoundaryCondition& bc, bool left_side, std::span<const double> inner,
                 std::span<double> out);

/// Interface/cell adjacency of a 1D grid under a boundary condition.
///
/// Interface k separates left_cell(k) and right_cell(k); -1 marks a ghost.
/// Periodic grids have n_cells distinct interfaces, interface n_cells aliases 0.
class Topology {
public:
    Topology(int n_cells, bool periodic) : n_cells_(n_cells), periodic_(periodic) {}

    [[nodiscard]] int n_cells() const noexcept { return n_cells_; }
    [[nodiscard]] bool periodic() const noexcept { return periodic_; }
    [[nodiscard]] int n_interfaces() const noexcept { return periodic_ ? n_cells_ : n_cells_ + 1; }

    [[nodiscard]] int left_cell(int k) const noexcept {
        if (periodic_) return k == 0 ? n_cells_ - 1 : k - 1;
        return k - 1;
    }
    [[nodiscard]] int right_cell(int k) const noexcept {
        if (periodic_) return k;
        return k < n_cells_ ? k : -1;
    }
    [[nodiscard]] int left_interface(int i) const noexcept { return i; }
    [[nodiscard]] int right_interface(int i) const noexcept {
        return periodic_ ? (i + 1) % n_cells_ : i + 1;
    }

private:
    int n_cells_;
    bool periodic_;
};

}  // namespace cmr
