#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmr/boundary.hpp"
#include "cmr/flux.hpp"
#include "cmr/grid.hpp"

namespace cmr {

using ExactSolution = std::function<void(double x, double t, std::span<double> out)>;

/// A benchmark: conservation law, domain, boundary and initial data.
struct Problem {
    std::string name;
    int n_vars = 1;
    std::vector<std::string> var_names;
    std::shared_ptr<const ConservationLaw> law;
    std::optional<FluxFunction> flux;  // physical flux when the law is Rusanov-based
    BoundaryCondition bc;
    double x_left = 0.0;
    double x_right = 1.0;
    double t_end = 1.0;
    InitialProfile initial;
    CellAverager initial_average;  // exact cell averages of the initial data, optional
    ExactSolution exact;           // optional

    [[nodiscard]] bool is_system() const noexcept { return n_vars > 1; }
    /// Cell averages of the initial data on `grid` (exact when available).
    [[nodiscard]] State initial_state(const Grid1D& grid) const;
};

// Burgers: u_t + (u^2/2)_x = 0 on (-1, 3) with Dirichlet data.
struct BurgersParams {
    double u_left = 1.0;
    double u_right = 0.0;
    double x0 = 0.0;
    double t_end = 1.0;
};
FluxFunction burgers_flux();
Problem burgers(const BurgersParams& p = {});

// Buckley-Leverett: f(u) = u^2 / (u^2 + (1-u)^2/3), u0 = sin x on (0, 2 pi), periodic.
double buckley_leverett_f(double u) noexcept;
double buckley_leverett_df(double u) noexcept;
FluxFunction buckley_leverett_flux();
Problem buckley_leverett(double t_end = 0.5);

// Saint-Venant dam break, unknowns (h, q).
struct DamBreakParams {
    double h_left = 1.5;
    double h_right = 0.0;  // raised to the dry floor
    double x0 = 1500.0;
    double x_left = 0.0;
    double x_right = 3000.0;
    double g = 9.81;
    double dry_fraction = 1e-6;  // h_dry = dry_fraction * h_left
    double t_end = 100.0;
};
FluxFunction saint_venant_flux(double g, double h_dry);
Problem dam_break(const DamBreakParams& p = {});

// Semi-linear rotating shallow water, unknowns (eta, u, v), centered fluxes plus Coriolis source.
struct RotatingSWParams {
    double L = 8e6;
    double t_end = 3e6;
    double f = 1e-4;
    double eta0 = 1000.0;
    double g = 9.81;
};

class RotatingSWLaw final : public ConservationLaw {
public:
    explicit RotatingSWLaw(RotatingSWParams p) : p_(p) {}
    [[nodiscard]] int n_vars() const override { return 3; }
    void numerical_flux(std::span<const double> ul, std::span<const double> ur,
                        std::span<double> flux) const override;
    [[nodiscard]] WaveSpeeds wave_speeds(std::span<const double> u) const override;
    [[nodiscard]] bool has_source() const override { return true; }
    void source(std::span<const double> u, std::span<double> s) const override;
    [[nodiscard]] const RotatingSWParams& params() const noexcept { return p_; }

private:
    RotatingSWParams p_;
};
Problem rotating_shallow_water(const RotatingSWParams& p = {});

/// u_t + a u_x = 0 with the upwind flux.
class LinearAdvectionLaw final : public ConservationLaw {
public:
    explicit LinearAdvectionLaw(double a) : a_(a) {}
    [[nodiscard]] int n_vars() const override { return 1; }
    void numerical_flux(std::span<const double> ul, std::span<const double> ur,
                        std::span<double> flux) const override {
        flux[0] = upwind_flux(ul[0], ur[0], a_);
    }
    [[nodiscard]] WaveSpeeds wave_speeds(std::span<const double>) const override { return {a_, a_}; }
    [[nodiscard]] double speed() const noexcept { return a_; }

private:
    double a_;
};

/// Periodic linear advection of u0(x) = sin(2 pi x / (b - a)) on (a, b); exact averages and solution.
Problem linear_advection(double speed = 1.0, double x_left = 0.0, double x_right = 1.0, double t_end = 1.0);

/// Looks up a preset problem by name: burgers-shock, burgers-rarefaction, buckley-leverett,
/// dam-break, rotating-sw, linear-advection. Throws std::invalid_argument otherwise.
Problem make_problem(const std::string& name);

}  // namespace cmr
