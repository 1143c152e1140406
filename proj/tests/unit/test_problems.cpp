#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmr/problems.hpp"
#include "cmr/reference.hpp"

using namespace cmr;
using doctest::Approx;

namespace {

// y' = -y in every cell, no transport.
class DecayLaw final : public ConservationLaw {
public:
    [[nodiscard]] int n_vars() const override { return 1; }
    void numerical_flux(std::span<const double>, std::span<const double>, std::span<double> f) const override {
        f[0] = 0.0;
    }
    [[nodiscard]] WaveSpeeds wave_speeds(std::span<const double>) const override { return {}; }
    [[nodiscard]] bool has_source() const override { return true; }
    void source(std::span<const double> u, std::span<double> s) const override { s[0] = -u[0]; }
};

}  // namespace

TEST_CASE("Buckley-Leverett flux") {
    CHECK(buckley_leverett_f(0.5) == Approx(0.75));
    CHECK(buckley_leverett_f(0.0) == 0.0);
    CHECK(buckley_leverett_f(1.0) == Approx(1.0));
    double prev = -1.0;
    for (double u = 0.0; u <= 1.0; u += 0.01) {
        CHECK(buckley_leverett_f(u) >= prev);
        prev = buckley_leverett_f(u);
        const double h = 1e-6;
        CHECK(buckley_leverett_df(u + 0.005) ==
              Approx((buckley_leverett_f(u + 0.005 + h) - buckley_leverett_f(u + 0.005 - h)) / (2 * h)).epsilon(1e-6));
    }
    const Problem p = buckley_leverett();
    CHECK(p.bc.kind == BoundaryKind::periodic);
    CHECK(p.x_right == Approx(2.0 * M_PI));
}

TEST_CASE("Saint-Venant flux and eigenvalues") {
    const FluxFunction f = saint_venant_flux(9.81, 1.5e-4);
    const std::vector<double> still{1.5, 0.0};
    const WaveSpeeds ws = f.wave_speeds(still);
    CHECK(ws.min == Approx(-3.8360).epsilon(1e-4));
    CHECK(ws.max == Approx(3.8360).epsilon(1e-4));

    const std::vector<double> moving{1.0, 2.0};
    std::vector<double> out(2);
    f.evaluate(moving, out);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == Approx(8.905).epsilon(1e-12));

    // Near-dry states stay finite.
    const std::vector<double> dry{0.0, 1e-9};
    f.evaluate(dry, out);
    CHECK(std::isfinite(out[1]));
    CHECK(std::isfinite(f.wave_speeds(dry).max));

    const Problem p = dam_break();
    CHECK(p.bc.kind == BoundaryKind::outflow);
    const Grid1D g = build_grid(p.x_left, p.x_right, 300);
    State lake(2, 300);
    for (int i = 0; i < 300; ++i) lake(0, i) = 2.0;
    const auto r = semidiscrete_rhs(lake, *p.law, g, p.bc);
    for (double v : r.tendency.values()) CHECK(v == 0.0);
}

TEST_CASE("rotating shallow water at rest") {
    const Problem p = rotating_shallow_water();
    CHECK(p.n_vars == 3);
    const Grid1D g = build_grid(p.x_left, p.x_right, 48);
    State rest(3, 48);
    auto r = semidiscrete_rhs(rest, *p.law, g, p.bc);
    for (double v : r.tendency.values()) CHECK(v == 0.0);

    for (int i = 0; i < 48; ++i) rest(0, i) = 5.0;
    r = semidiscrete_rhs(rest, *p.law, g, p.bc);
    for (int i = 1; i < 47; ++i) {
        CHECK(r.tendency(0, i) == 0.0);
        CHECK(r.tendency(1, i) == Approx(0.0).scale(1.0));
    }
}

TEST_CASE("preset problems resolve by name") {
    for (const char* name :
         {"burgers-shock", "burgers-rarefaction", "buckley-leverett", "dam-break", "rotating-sw", "linear-advection"}) {
        const Problem p = make_problem(name);
        CHECK(p.law != nullptr);
        CHECK(p.x_right > p.x_left);
    }
    CHECK_THROWS_AS(make_problem("heat"), std::invalid_argument);
}

TEST_CASE("reference integrator") {
    const DecayLaw law;
    const Grid1D g = build_grid(0.0, 1.0, 2);
    State u0(1, 2);
    u0(0, 0) = 1.0;
    u0(0, 1) = 2.0;
    const State y = reference_solve(u0, 1.0, law, g, BoundaryCondition::periodic(), {1e-10, 1e-12, 0.01});
    CHECK(std::abs(y(0, 0) - std::exp(-1.0)) < 1e-8);
    CHECK(std::abs(y(0, 1) - 2.0 * std::exp(-1.0)) < 1e-8);

    const Problem p = buckley_leverett();
    const Grid1D gb = build_grid(p.x_left, p.x_right, 20);
    State flat(1, 20);
    for (int i = 0; i < 20; ++i) flat(0, i) = 0.4;
    const State same = reference_solve(flat, 0.1, *p.law, gb, p.bc, {1e-8, 1e-10, 1e-3});
    for (int i = 0; i < 20; ++i) CHECK(same(0, i) == Approx(0.4).epsilon(1e-12));
}

TEST_CASE("l1 error") {
    const Grid1D g = build_grid(0.0, 2.0, 8);
    State a(1, 8), b(1, 8);
    CHECK(l1_error(a, b, g) == 0.0);
    for (int i = 0; i < 8; ++i) b(0, i) = -0.5;
    CHECK(l1_error(a, b, g) == Approx(0.5 * 8 * 0.25));
    CHECK_THROWS_AS(l1_error(a, State(1, 7), g), std::invalid_argument);
}
