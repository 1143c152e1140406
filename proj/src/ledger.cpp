#include "cmr/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cmr {

FluxLedger::FluxLedger(int n_vars, int n_cells, bool periodic)
    : n_vars_(n_vars), n_cells_(n_cells), periodic_(periodic) {
    const auto nf = static_cast<std::size_t>(n_vars) * (n_cells + 1);
    h_.assign(nf, 0.0);
    left_.assign(nf, 0.0);
    right_.assign(nf, 0.0);
    src_.assign(static_cast<std::size_t>(n_vars) * n_cells, 0.0);
}

void FluxLedger::reset() {
    std::fill(h_.begin(), h_.end(), 0.0);
    std::fill(left_.begin(), left_.end(), 0.0);
    std::fill(right_.begin(), right_.end(), 0.0);
    std::fill(src_.begin(), src_.end(), 0.0);
}

void FluxLedger::add_flux(int k, std::span<const double> piece) {
    const int kk = alias(k);
    for (int v = 0; v < n_vars_; ++v) {
        const std::size_t j = index(v, kk);
        h_[j] += piece[v];
        left_[j] += piece[v];
        right_[j] += piece[v];
    }
}

void FluxLedger::add_source(int i, std::span<const double> piece) {
    for (int v = 0; v < n_vars_; ++v) src_[static_cast<std::size_t>(v) * n_cells_ + i] += piece[v];
}

AuditReport conservation_audit(const FluxLedger& ledger, const State& u_before, const State& u_after,
                               const Grid1D& grid) {
    const int d = ledger.n_vars();
    const int n = ledger.n_cells();
    if (u_before.n_vars() != d || u_after.n_vars() != d || u_before.n_cells() != n || u_after.n_cells() != n ||
        grid.n_cells != n) {
        throw std::invalid_argument("conservation_audit: shape mismatch");
    }
    AuditReport rep;
    rep.mass_delta.assign(d, 0.0);
    rep.boundary_flux_delta.assign(d, 0.0);
    for (int v = 0; v < d; ++v) {
        for (int k = 0; k <= n; ++k) {
            const double l = ledger.contribution_left(v, k);
            const double r = ledger.contribution_right(v, k);
            if (std::memcmp(&l, &r, sizeof(double)) != 0) rep.side_mismatch_bitwise_zero = false;
            rep.max_side_mismatch = std::max(rep.max_side_mismatch, std::abs(l - r));
        }
        double src_total = 0.0;
        for (int i = 0; i < n; ++i) {
            // The cell left of interface i+1 receives -H, the cell right of interface i receives +H.
            const double rebuilt = u_before(v, i) - (ledger.contribution_left(v, i + 1) -
                                                     ledger.contribution_right(v, i)) / grid.dx +
                                   ledger.source(v, i);
            rep.reconstruction_residual = std::max(rep.reconstruction_residual, std::abs(u_after(v, i) - rebuilt));
            rep.mass_delta[v] += grid.dx * (u_after(v, i) - u_before(v, i));
            src_total += grid.dx * ledger.source(v, i);
        }
        rep.boundary_flux_delta[v] = -(ledger.H(v, n) - ledger.H(v, 0)) + src_total;
        rep.mass_balance_residual =
            std::max(rep.mass_balance_residual, std::abs(rep.mass_delta[v] - rep.boundary_flux_delta[v]));
    }
    return rep;
}

}  // namespace cmr
