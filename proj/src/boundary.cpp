#include "cmr/boundary.hpp"

#include <stdexcept>

namespace cmr {

BoundaryCondition BoundaryCondition::periodic() { return {BoundaryKind::periodic, {}, {}}; }

BoundaryCondition BoundaryCondition::dirichlet(std::vector<double> left, std::vector<double> right) {
    if (left.empty() || left.size() != right.size()) {
        throw std::invalid_argument("dirichlet boundary: left/right values must be non-empty and equal length");
    }
    return {BoundaryKind::dirichlet, std::move(left), std::move(right)};
}

BoundaryCondition BoundaryCondition::outflow() { return {BoundaryKind::outflow, {}, {}}; }

void ghost_value(const BoundaryCondition& bc, bool left_side, std::span<const double> inner,
                 std::span<double> out) {
    switch (bc.kind) {
        case BoundaryKind::dirichlet: {
            const auto& v = left_side ? bc.left_value : bc.right_value;
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = v[j];
            break;
        }
        case BoundaryKind::outflow:
        case BoundaryKind::periodic:
            // Periodic callers pass the opposite-end cell as `inner`.
            for (std::size_t j = 0; j < out.size(); ++j) out[j] = inner[j];
            break;
    }
}

GhostValues apply_bc(const State& state, const BoundaryCondition& bc, double /*t*/) {
    const int d = state.n_vars();
    const int n = state.n_cells();
    GhostValues g{std::vector<double>(d), std::vector<double>(d)};
    std::vector<double> first(d), last(d);
    state.cell(0, first);
    state.cell(n - 1, last);
    if (bc.kind == BoundaryKind::periodic) {
        g.left = last;
        g.right = first;
        return g;
    }
    if (bc.kind == BoundaryKind::dirichlet && static_cast<int>(bc.left_value.size()) != d) {
        throw std::invalid_argument("apply_bc: dirichlet values do not match n_vars");
    }
    ghost_value(bc, true, first, g.left);
    ghost_value(bc, false, last, g.right);
    return g;
}

}  // namespace cmr
