#pragma once

#include <span>
#include <vector>

#include "cmr/boundary.hpp"
#include "cmr/grid.hpp"

namespace cmr {

/// Time-integrated interface fluxes and cell sources over one global step.
///
/// Every flux piece is stored once and added to the accumulators of both
/// neighbouring cells, so the left and right contributions agree bit for bit.
class FluxLedger {
public:
    FluxLedger() = default;
    FluxLedger(int n_vars, int n_cells, bool periodic);

    void reset();
    /// Adds one time-integrated flux piece (n_vars values) at interface k.
    void add_flux(int k, std::span<const double> piece);
    /// Adds one time-integrated source piece (n_vars values) to cell i.
    void add_source(int i, std::span<const double> piece);

    [[nodiscard]] int n_vars() const noexcept { return n_vars_; }
    [[nodiscard]] int n_cells() const noexcept { return n_cells_; }
    [[nodiscard]] bool periodic() const noexcept { return periodic_; }

    /// Accumulated flux at interface k = 0..n_cells; periodic interface n_cells aliases 0.
    [[nodiscard]] double H(int v, int k) const noexcept { return h_[index(v, alias(k))]; }
    [[nodiscard]] double contribution_left(int v, int k) const noexcept { return left_[index(v, alias(k))]; }
    [[nodiscard]] double contribution_right(int v, int k) const noexcept { return right_[index(v, alias(k))]; }
    [[nodiscard]] double source(int v, int i) const noexcept {
        return src_[static_cast<std::size_t>(v) * n_cells_ + i];
    }

private:
    [[nodiscard]] int alias(int k) const noexcept { return periodic_ && k == n_cells_ ? 0 : k; }
    [[nodiscard]] std::size_t index(int v, int k) const noexcept {
        return static_cast<std::size_t>(v) * (n_cells_ + 1) + k;
    }

    int n_vars_ = 0;
    int n_cells_ = 0;
    bool periodic_ = false;
    std::vector<double> h_, left_, right_, src_;
};

struct AuditReport {
    /// max |left - right| over all interfaces and variables; zero by construction.
    double max_side_mismatch = 0.0;
    /// || u_after - (u_before - dH/dx + source) ||_inf
    double reconstruction_residual = 0.0;
    std::vector<double> mass_delta;          // per variable
    std::vector<double> boundary_flux_delta; // -(H_right - H_left) + integrated sources, per variable
    double mass_balance_residual = 0.0;      // max_v |mass_delta - boundary_flux_delta|
    bool side_mismatch_bitwise_zero = true;
};

AuditReport conservation_audit(const FluxLedger& ledger, const State& u_before, const State& u_after,
                               const Grid1D& grid);

}  // namespace cmr
