#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmr/integrators.hpp"
#include "cmr/newton.hpp"

using namespace cmr;
using doctest::Approx;

namespace {

StagedRhs linear_rhs(double lambda) {
    return plain_rhs([lambda](std::span<const double> x, std::span<double> f) { f[0] = lambda * x[0]; });
}

// Two-stage TR-BDF2 amplification written out stage by stage.
double two_stage_factor(double z, double g) {
    const double yg = (1.0 + 0.5 * g * z) / (1.0 - 0.5 * g * z);
    const double a = 1.0 / (g * (2.0 - g));
    const double b = (1.0 - g) * (1.0 - g) / (g * (2.0 - g));
    const double c = (1.0 - g) / (2.0 - g);
    return (a * yg - b) / (1.0 - c * z);
}

double trbdf2_solve(double lambda, double y0, double t_end, int steps) {
    const auto s = JacobianStructure::dense(1);
    std::vector<double> y{y0};
    const double dt = t_end / steps;
    for (int k = 0; k < steps; ++k) {
        auto rec = trbdf2_step(linear_rhs(lambda), y, k * dt, dt, 2.0 - std::sqrt(2.0), s, {1e-14, 25});
        REQUIRE(rec);
        y = rec->u_next;
    }
    return y[0];
}

}  // namespace

TEST_CASE("Newton iteration") {
    const auto s = JacobianStructure::dense(1);
    std::vector<double> x{0.0};
    auto rep = newton_solve([](std::span<const double> v, std::span<double> r) { r[0] = v[0] - 1.0; }, x, s, {});
    CHECK(rep.converged);
    CHECK(x[0] == Approx(1.0).epsilon(1e-14));
    CHECK(rep.iterations <= 2);

    x = {3.0};
    rep = newton_solve([](std::span<const double> v, std::span<double> r) { r[0] = v[0] * v[0] - 4.0; }, x, s,
                       {1e-12, 25});
    CHECK(rep.converged);
    CHECK(std::abs(x[0] - 2.0) < 1e-12);

    x = {0.0};
    rep = newton_solve([](std::span<const double> v, std::span<double> r) { r[0] = v[0] * v[0] + 1.0; }, x, s, {});
    CHECK_FALSE(rep.converged);
}

TEST_CASE("colored Jacobian matches the dense one") {
    // Tridiagonal nonlinear system solved with both structures.
    const int n = 7;
    auto residual = [](std::span<const double> x, std::span<double> r) {
        const int m = static_cast<int>(x.size());
        for (int i = 0; i < m; ++i) {
            const double l = i > 0 ? x[i - 1] : 0.0, rr = i + 1 < m ? x[i + 1] : 0.0;
            r[i] = 3.0 * x[i] + x[i] * x[i] * x[i] - l - rr - 1.0;
        }
    };
    std::vector<std::vector<int>> nb(n);
    for (int i = 0; i < n; ++i) {
        if (i > 0) nb[i].push_back(i - 1);
        if (i + 1 < n) nb[i].push_back(i + 1);
    }
    const auto colored = JacobianStructure::from_cell_graph(nb, 1);
    CHECK(colored.n_colors == 3);
    std::vector<double> a(n, 0.0), b(n, 0.0);
    CHECK(newton_solve(residual, a, colored, {1e-14, 30}).converged);
    CHECK(newton_solve(residual, b, JacobianStructure::dense(n), {1e-14, 30}).converged);
    for (int i = 0; i < n; ++i) CHECK(a[i] == Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("theta method on y' = -y") {
    const auto s = JacobianStructure::dense(1);
    const std::vector<double> y0{1.0};
    auto be = theta_step(linear_rhs(-1.0), y0, 0.0, 1.0, 1.0, s, {1e-14, 25});
    REQUIRE(be);
    CHECK(be->u_next[0] == Approx(0.5).epsilon(1e-13));
    auto tr = theta_step(linear_rhs(-1.0), y0, 0.0, 1.0, 0.5, s, {1e-14, 25});
    REQUIRE(tr);
    CHECK(tr->u_next[0] == Approx(1.0 / 3.0).epsilon(1e-13));
    auto zero = theta_step(plain_rhs([](std::span<const double>, std::span<double> f) { f[0] = 0.0; }), y0, 0.0,
                           0.3, 1.0, s, {});
    REQUIRE(zero);
    CHECK(zero->u_next[0] == 1.0);
}

TEST_CASE("TR-BDF2 amplification and order") {
    const double g = 2.0 - std::sqrt(2.0);
    CHECK(trbdf2_amplification(-0.1, g) == Approx(two_stage_factor(-0.1, g)).epsilon(1e-14));
    CHECK(trbdf2_solve(-1.0, 1.0, 0.1, 1) == Approx(two_stage_factor(-0.1, g)).epsilon(1e-13));
    CHECK(std::abs(trbdf2_amplification(-1e6, g)) < 1e-3);

    const double e1 = std::abs(trbdf2_solve(-1.0, 1.0, 1.0, 10) - std::exp(-1.0));
    const double e2 = std::abs(trbdf2_solve(-1.0, 1.0, 1.0, 20) - std::exp(-1.0));
    const double e3 = std::abs(trbdf2_solve(-1.0, 1.0, 1.0, 40) - std::exp(-1.0));
    CHECK(std::log2(e1 / e2) == Approx(2.0).epsilon(0.05));
    CHECK(std::log2(e2 / e3) == Approx(2.0).epsilon(0.05));

    const auto s = JacobianStructure::dense(1);
    const std::vector<double> y0{2.0};
    auto c = trbdf2_step(plain_rhs([](std::span<const double>, std::span<double> f) { f[0] = 3.0; }), y0, 0.0,
                         0.5, g, s, {});
    REQUIRE(c);
    CHECK(c->u_next[0] == Approx(3.5).epsilon(1e-14));
}

TEST_CASE("extrapolation") {
    const double g = 2.0 - std::sqrt(2.0);
    StageRecord rec;
    rec.t_n = 1.0;
    rec.dt = 0.5;
    rec.gamma = g;
    const double tg = rec.t_n + g * rec.dt;
    rec.u_n = {1.0};
    rec.f_n = {3.0};
    rec.u_gamma = {tg * tg * tg};
    rec.f_gamma = {3.0 * tg * tg};
    const double t1 = rec.t_n + rec.dt;
    CHECK(hermite_extrapolate(rec, t1)[0] == Approx(t1 * t1 * t1).epsilon(1e-12));
    CHECK(hermite_extrapolate(rec, 1.1)[0] == Approx(1.1 * 1.1 * 1.1).epsilon(1e-12));

    rec.u_n = {1.0};
    rec.u_gamma = {tg};
    rec.f_n = {1.0};
    rec.f_gamma = {1.0};
    CHECK(hermite_extrapolate(rec, t1)[0] == Approx(t1).epsilon(1e-14));

    const std::vector<double> un{1.0}, ug{1.0 + g};
    CHECK(linear_extrapolate(un, ug, g, 1.0, 0.0, 0.0)[0] == 1.0);
    CHECK(linear_extrapolate(un, ug, g, 1.0, 0.0, g)[0] == Approx(1.0 + g));
    CHECK(linear_extrapolate(un, ug, g, 1.0, 0.0, 1.0)[0] == Approx(2.0).epsilon(1e-14));
}

TEST_CASE("stage weights reproduce the step") {
    const double g = 2.0 - std::sqrt(2.0);
    const StageWeights w = trbdf2_weights(g);
    CHECK(w.start == Approx(1.0 / (2.0 * (2.0 - g))));
    CHECK(w.gamma == Approx(1.0 / (2.0 * (2.0 - g))));
    CHECK(w.end == Approx((1.0 - g) / (2.0 - g)));
    CHECK(w.start + w.gamma + w.end == Approx(1.0).epsilon(1e-15));

    const auto s = JacobianStructure::dense(1);
    const std::vector<double> y0{1.0};
    auto rec = trbdf2_step(linear_rhs(-2.0), y0, 0.0, 0.3, g, s, {1e-14, 25});
    REQUIRE(rec);
    const double rebuilt = rec->u_n[0] + rec->dt * (w.start * rec->f_n[0] + w.gamma * rec->f_gamma[0] +
                                                   w.end * rec->f_next[0]);
    CHECK(rebuilt == Approx(rec->u_next[0]).epsilon(1e-14));
}
