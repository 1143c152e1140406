#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmr/boundary.hpp"
#include "cmr/grid.hpp"

namespace cmr {

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Smallest and largest characteristic speed of a state.
struct WaveSpeeds {
    double min = 0.0;
    double max = 0.0;

    [[nodiscard]] double max_abs() const noexcept;
};

/// Physical flux f(u) with the local dissipation bound used by the Rusanov flux.
struct FluxFunction {
    int n_vars = 1;
    std::function<void(std::span<const double> u, std::span<double> f)> evaluate;
    /// alpha(uL, uR) >= max |f'(w)| between the two states.
    std::function<double(std::span<const double> ul, std::span<const double> ur)> wave_speed_bound;
    std::function<WaveSpeeds(std::span<const double> u)> wave_speeds;
};

/// Two-point conservation law: du_i/dt = -(F_{i+1/2} - F_{i-1/2})/dx + s(u_i).
class ConservationLaw {
public:
    virtual ~ConservationLaw() = default;

    [[nodiscard]] virtual int n_vars() const = 0;
    virtual void numerical_flux(std::span<const double> ul, std::span<const double> ur,
                                std::span<double> flux) const = 0;
    [[nodiscard]] virtual WaveSpeeds wave_speeds(std::span<const double> u) const = 0;

    [[nodiscard]] virtual bool has_source() const { return false; }
    virtual void source(std::span<const double> /*u*/, std::span<double> s) const {
        for (double& x : s) x = 0.0;
    }
};

/// Rusanov (local Lax-Friedrichs) discretisation of a physical flux.
class RusanovLaw final : public ConservationLaw {
public:
    explicit RusanovLaw(FluxFunction f) : f_(std::move(f)) {}

    [[nodiscard]] int n_vars() const override { return f_.n_vars; }
    void numerical_flux(std::span<const double> ul, std::span<const double> ur,
                        std::span<double> flux) const override;
    [[nodiscard]] WaveSpeeds wave_speeds(std::span<const double> u) const override { return f_.wave_speeds(u); }

    [[nodiscard]] const FluxFunction& physical() const noexcept { return f_; }

private:
    FluxFunction f_;
};

/// F = 1/2 [(f(uR) + f(uL)) - alpha (uR - uL)]. Throws NumericalFailure on a non-finite result.
std::vector<double> rusanov_flux(std::span<const double> ul, std::span<const double> ur, const FluxFunction& f);

/// Allocation-free variant; returns false instead of throwing.
bool rusanov_flux_into(std::span<const double> ul, std::span<const double> ur, const FluxFunction& f,
                       std::span<double> out, std::span<double> scratch);

/// Upwind flux for u_t + a u_x = 0.
[[nodiscard]] constexpr double upwind_flux(double ul, double ur, double a) noexcept {
    return a >= 0.0 ? a * ul : a * ur;
}

/// Interface fluxes, variable-major: values[v * (n_cells + 1) + k].
struct FluxField {
    int n_vars = 0;
    int n_cells = 0;
    std::vector<double> values;

    FluxField() = default;
    FluxField(int d, int n) : n_vars(d), n_cells(n), values(static_cast<std::size_t>(d) * (n + 1), 0.0) {}

    double& operator()(int v, int k) noexcept { return values[static_cast<std::size_t>(v) * (n_cells + 1) + k]; }
    double operator()(int v, int k) const noexcept {
        return values[static_cast<std::size_t>(v) * (n_cells + 1) + k];
    }
};

struct SemiDiscreteResult {
    State tendency;
    FluxField fluxes;
};

/// Semi-discrete right-hand side and the interface fluxes it used.
SemiDiscreteResult semidiscrete_rhs(const State& state, const ConservationLaw& law, const Grid1D& grid,
                                    const BoundaryCondition& bc);

/// Fills `flux` (d values) for interface k of `state`, resolving ghosts through `bc`.
void interface_flux(const State& state, const ConservationLaw& law, const Topology& topo,
                    const BoundaryCondition& bc, int k, std::span<double> flux);

}  // namespace cmr
