#include "cmr/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cmr {

State Problem::initial_state(const Grid1D& grid) const {
    return cell_average_init(grid, n_vars, initial, initial_average);
}

// ---------------------------------------------------------------- Burgers

FluxFunction burgers_flux() {
    FluxFunction f;
    f.n_vars = 1;
    f.evaluate = [](std::span<const double> u, std::span<double> out) { out[0] = 0.5 * u[0] * u[0]; };
    f.wave_speed_bound = [](std::span<const double> ul, std::span<const double> ur) {
        return std::max(std::abs(ul[0]), std::abs(ur[0]));
    };
    f.wave_speeds = [](std::span<const double> u) { return WaveSpeeds{u[0], u[0]}; };
    return f;
}

Problem burgers(const BurgersParams& p) {
    Problem pr;
    pr.name = p.u_left > p.u_right ? "burgers-shock" : "burgers-rarefaction";
    pr.n_vars = 1;
    pr.var_names = {"u"};
    pr.flux = burgers_flux();
    pr.law = std::make_shared<RusanovLaw>(*pr.flux);
    pr.bc = BoundaryCondition::dirichlet({p.u_left}, {p.u_right});
    pr.x_left = -1.0;
    pr.x_right = 3.0;
    pr.t_end = p.t_end;
    pr.initial = [p](double x, std::span<double> out) { out[0] = x < p.x0 ? p.u_left : p.u_right; };
    pr.initial_average = [p](double a, double b, std::span<double> out) {
        const double w = std::clamp((p.x0 - a) / (b - a), 0.0, 1.0);
        out[0] = w * p.u_left + (1.0 - w) * p.u_right;
    };
    pr.exact = [p](double x, double t, std::span<double> out) {
        if (t <= 0.0) {
            out[0] = x < p.x0 ? p.u_left : p.u_right;
        } else if (p.u_left > p.u_right) {
            const double s = 0.5 * (p.u_left + p.u_right);
            out[0] = x < p.x0 + s * t ? p.u_left : p.u_right;
        } else {
            const double xi = (x - p.x0) / t;
            out[0] = std::clamp(xi, p.u_left, p.u_right);
        }
    };
    return pr;
}

// ------------------------------------------------------- Buckley-Leverett

double buckley_leverett_f(double u) noexcept {
    const double w = 1.0 - u;
    return u * u / (u * u + w * w / 3.0);
}

double buckley_leverett_df(double u) noexcept {
    const double w = 1.0 - u;
    const double den = u * u + w * w / 3.0;
    const double dden = 2.0 * u - 2.0 * w / 3.0;
    return (2.0 * u * den - u * u * dden) / (den * den);
}

FluxFunction buckley_leverett_flux() {
    FluxFunction f;
    f.n_vars = 1;
    f.evaluate = [](std::span<const double> u, std::span<double> out) { out[0] = buckley_leverett_f(u[0]); };
    // f' is not monotone, so the bound is sampled between the two states.
    f.wave_speed_bound = [](std::span<const double> ul, std::span<const double> ur) {
        constexpr int samples = 33;
        double a = 0.0;
        for (int j = 0; j < samples; ++j) {
            const double s = static_cast<double>(j) / (samples - 1);
            a = std::max(a, std::abs(buckley_leverett_df(ul[0] + s * (ur[0] - ul[0]))));
        }
        return a;
    };
    f.wave_speeds = [](std::span<const double> u) {
        const double c = buckley_leverett_df(u[0]);
        return WaveSpeeds{c, c};
    };
    return f;
}

Problem buckley_leverett(double t_end) {
    Problem pr;
    pr.name = "buckley-leverett";
    pr.n_vars = 1;
    pr.var_names = {"u"};
    pr.flux = buckley_leverett_flux();
    pr.law = std::make_shared<RusanovLaw>(*pr.flux);
    pr.bc = BoundaryCondition::periodic();
    pr.x_left = 0.0;
    pr.x_right = 2.0 * std::numbers::pi;
    pr.t_end = t_end;
    pr.initial = [](double x, std::span<double> out) { out[0] = std::sin(x); };
    pr.initial_average = [](double a, double b, std::span<double> out) {
        out[0] = (std::cos(a) - std::cos(b)) / (b - a);
    };
    return pr;
}

// ------------------------------------------------------------- dam break

FluxFunction saint_venant_flux(double g, double h_dry) {
    FluxFunction f;
    f.n_vars = 2;
    // Desingularised q / h: equal to it for h >> h_dry and smooth through h = 0, so the
    // Newton iteration does not cycle on a switch at the wet/dry front.
    const double eps4 = std::pow(h_dry, 4);
    auto velocity = [eps4](double h, double q) {
        const double h4 = h * h * h * h;
        return std::numbers::sqrt2 * h * q / std::sqrt(h4 + std::max(h4, eps4));
    };
    f.evaluate = [g, velocity](std::span<const double> u, std::span<double> out) {
        const double h = u[0];
        const double q = u[1];
        out[0] = q;
        out[1] = q * velocity(h, q) + 0.5 * g * h * h;
    };
    auto speeds = [g, velocity](std::span<const double> u) {
        const double c = std::sqrt(g * std::max(u[0], 0.0));
        const double vel = velocity(u[0], u[1]);
        return WaveSpeeds{vel - c, vel + c};
    };
    f.wave_speeds = speeds;
    f.wave_speed_bound = [speeds](std::span<const double> ul, std::span<const double> ur) {
        return std::max(speeds(ul).max_abs(), speeds(ur).max_abs());
    };
    return f;
}

Problem dam_break(const DamBreakParams& p) {
    if (!(p.h_left > 0.0) || p.h_right < 0.0) throw std::invalid_argument("dam_break: need h_left > 0, h_right >= 0");
    const double h_dry = p.dry_fraction * p.h_left;
    const double h_right = std::max(p.h_right, h_dry);
    Problem pr;
    pr.name = "dam-break";
    pr.n_vars = 2;
    pr.var_names = {"h", "q"};
    pr.flux = saint_venant_flux(p.g, h_dry);
    pr.law = std::make_shared<RusanovLaw>(*pr.flux);
    pr.bc = BoundaryCondition::outflow();
    pr.x_left = p.x_left;
    pr.x_right = p.x_right;
    pr.t_end = p.t_end;
    pr.initial = [p, h_right](double x, std::span<double> out) {
        out[0] = x < p.x0 ? p.h_left : h_right;
        out[1] = 0.0;
    };
    pr.initial_average = [p, h_right](double a, double b, std::span<double> out) {
        const double w = std::clamp((p.x0 - a) / (b - a), 0.0, 1.0);
        out[0] = w * p.h_left + (1.0 - w) * h_right;
        out[1] = 0.0;
    };
    return pr;
}

// ------------------------------------------------- rotating shallow water

void RotatingSWLaw::numerical_flux(std::span<const double> ul, std::span<const double> ur,
                                   std::span<double> flux) const {
    flux[0] = 0.5 * (ul[1] * (ul[0] + p_.eta0) + ur[1] * (ur[0] + p_.eta0));
    flux[1] = 0.5 * p_.g * (ul[0] + ur[0]);
    flux[2] = 0.0;
}

WaveSpeeds RotatingSWLaw::wave_speeds(std::span<const double> u) const {
    const double disc = std::sqrt(u[1] * u[1] + 4.0 * p_.g * std::max(u[0] + p_.eta0, 0.0));
    return {0.5 * (u[1] - disc), 0.5 * (u[1] + disc)};
}

void RotatingSWLaw::source(std::span<const double> u, std::span<double> s) const {
    s[0] = 0.0;
    s[1] = -p_.f * u[2];
    s[2] = p_.f * u[1];
}

Problem rotating_shallow_water(const RotatingSWParams& p) {
    Problem pr;
    pr.name = "rotating-sw";
    pr.n_vars = 3;
    pr.var_names = {"eta", "u", "v"};
    pr.law = std::make_shared<RotatingSWLaw>(p);
    pr.bc = BoundaryCondition::dirichlet({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    pr.x_left = -p.L;
    pr.x_right = p.L;
    pr.t_end = p.t_end;
    pr.initial = [p](double x, std::span<double> out) {
        const double z = 50.0 * x / (2.0 * p.L);
        out[0] = std::exp(-z * z);
        out[1] = 0.0;
        out[2] = 0.0;
    };
    // Average of exp(-(c x)^2) over [a, b] is sqrt(pi)/(2c) (erf(cb) - erf(ca)) / (b - a).
    pr.initial_average = [p](double a, double b, std::span<double> out) {
        const double c = 50.0 / (2.0 * p.L);
        out[0] = std::sqrt(std::numbers::pi) / (2.0 * c) * (std::erf(c * b) - std::erf(c * a)) / (b - a);
        out[1] = 0.0;
        out[2] = 0.0;
    };
    return pr;
}

// ------------------------------------------------------ linear advection

Problem linear_advection(double speed, double x_left, double x_right, double t_end) {
    Problem pr;
    pr.name = "linear-advection";
    pr.n_vars = 1;
    pr.var_names = {"u"};
    pr.law = std::make_shared<LinearAdvectionLaw>(speed);
    pr.bc = BoundaryCondition::periodic();
    pr.x_left = x_left;
    pr.x_right = x_right;
    pr.t_end = t_end;
    const double k = 2.0 * std::numbers::pi / (x_right - x_left);
    pr.initial = [k, x_left](double x, std::span<double> out) { out[0] = std::sin(k * (x - x_left)); };
    pr.initial_average = [k, x_left](double a, double b, std::span<double> out) {
        out[0] = (std::cos(k * (a - x_left)) - std::cos(k * (b - x_left))) / (k * (b - a));
    };
    pr.exact = [k, x_left, speed](double x, double t, std::span<double> out) {
        out[0] = std::sin(k * (x - speed * t - x_left));
    };
    return pr;
}

Problem make_problem(const std::string& name) {
    if (name == "burgers-shock" || name == "burgers") return burgers({1.0, 0.0, 0.0, 1.0});
    if (name == "burgers-rarefaction") return burgers({0.0, 1.0, 0.0, 1.0});
    if (name == "buckley-leverett") return buckley_leverett();
    if (name == "dam-break") return dam_break();
    if (name == "rotating-sw") return rotating_shallow_water();
    if (name == "linear-advection") return linear_advection();
    throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace cmr
