#include "cmr/integrators.hpp"

#include <stdexcept>

namespace cmr {

Scheme parse_scheme(const std::string& name) {
    if (name == "trbdf2") return Scheme::trbdf2;
    if (name == "theta") return Scheme::theta;
    if (name == "forward_euler") return Scheme::forward_euler;
    throw std::invalid_argument("unknown integrator scheme '" + name + "'");
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::trbdf2: return "trbdf2";
        case Scheme::theta: return "theta";
        case Scheme::forward_euler: return "forward_euler";
    }
    return "?";
}

int IntegratorConfig::order() const noexcept {
    switch (scheme) {
        case Scheme::trbdf2: return 2;
        case Scheme::theta: return theta == 0.5 ? 2 : 1;
        case Scheme::forward_euler: return 1;
    }
    return 1;
}

void IntegratorConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("integrator: gamma must lie in (0,1)");
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("integrator: theta must lie in [0,1]");
    if (!(newton_tol > 0.0)) throw std::invalid_argument("integrator: newton_tol must be positive");
    if (newton_max_iter < 1) throw std::invalid_argument("integrator: newton_max_iter must be >= 1");
}

StagedRhs plain_rhs(std::function<void(std::span<const double>, std::span<double>)> f) {
    return [f = std::move(f)](StagePoint, std::span<const double> x, std::span<double> out) { f(x, out); };
}

StageWeights trbdf2_weights(double gamma) noexcept {
    const double w = 1.0 / (2.0 * (2.0 - gamma));
    return {w, w, (1.0 - gamma) / (2.0 - gamma)};
}

StageWeights theta_weights(double theta) noexcept { return {1.0 - theta, 0.0, theta}; }

std::optional<ThetaRecord> theta_step(const StagedRhs& rhs, std::span<const double> u_n, double t_n, double dt,
                                      double theta, const JacobianStructure& structure, const NewtonOptions& newton,
                                      StepCounters* counters) {
    const std::size_t n = u_n.size();
    ThetaRecord rec;
    rec.t_n = t_n;
    rec.dt = dt;
    rec.u_n.assign(u_n.begin(), u_n.end());
    rec.f_n.resize(n);
    rhs(StagePoint::start, u_n, rec.f_n);
    long evals = 1;
    long iters = 0;

    if (theta == 0.0) {
        rec.u_next.resize(n);
        for (std::size_t i = 0; i < n; ++i) rec.u_next[i] = u_n[i] + dt * rec.f_n[i];
        rec.eval_next = rec.u_next;
        rec.f_next = rec.f_n;
    } else {
        std::vector<double> f(n);
        auto residual = [&](std::span<const double> x, std::span<double> r) {
            rhs(StagePoint::end, x, f);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = x[i] - u_n[i] - dt * ((1.0 - theta) * rec.f_n[i] + theta * f[i]);
            }
        };
        std::vector<double> x(u_n.begin(), u_n.end());
        const NewtonReport nr = newton_solve(residual, x, structure, newton);
        evals += nr.residual_evals;
        iters += nr.iterations;
        if (counters) {
            counters->rhs_evals += evals;
            counters->newton_iterations += iters;
        }
        if (!nr.converged) return std::nullopt;
        rec.f_next.resize(n);
        rhs(StagePoint::end, x, rec.f_next);
        ++evals;
        rec.eval_next = x;
        rec.u_next.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rec.u_next[i] = u_n[i] + dt * ((1.0 - theta) * rec.f_n[i] + theta * rec.f_next[i]);
        }
        if (counters) counters->rhs_evals += 1;
        return rec;
    }
    if (counters) counters->rhs_evals += evals;
    return rec;
}

std::optional<StageRecord> trbdf2_step(const StagedRhs& rhs, std::span<const double> u_n, double t_n, double dt,
                                       double gamma, const JacobianStructure& structure,
                                       const NewtonOptions& newton, StepCounters* counters) {
    const std::size_t n = u_n.size();
    StageRecord rec;
    rec.t_n = t_n;
    rec.dt = dt;
    rec.gamma = gamma;
    rec.u_n.assign(u_n.begin(), u_n.end());
    rec.f_n.resize(n);
    rhs(StagePoint::start, u_n, rec.f_n);
    long evals = 1;
    long iters = 0;
    auto flush = [&] {
        if (counters) {
            counters->rhs_evals += evals;
            counters->newton_iterations += iters;
        }
    };

    std::vector<double> f(n);
    const double half = 0.5 * gamma * dt;

    // Trapezoidal stage.
    std::vector<double> x(u_n.begin(), u_n.end());
    {
        auto residual = [&](std::span<const double> xs, std::span<double> r) {
            rhs(StagePoint::gamma, xs, f);
            for (std::size_t i = 0; i < n; ++i) r[i] = xs[i] - u_n[i] - half * (rec.f_n[i] + f[i]);
        };
        const NewtonReport nr = newton_solve(residual, x, structure, newton);
        evals += nr.residual_evals;
        iters += nr.iterations;
        if (!nr.converged) {
            flush();
            return std::nullopt;
        }
    }
    rec.eval_gamma = x;
    rec.f_gamma.resize(n);
    rhs(StagePoint::gamma, x, rec.f_gamma);
    ++evals;
    rec.u_gamma.resize(n);
    for (std::size_t i = 0; i < n; ++i) rec.u_gamma[i] = u_n[i] + half * (rec.f_n[i] + rec.f_gamma[i]);

    // BDF2 stage.
    const double g2 = gamma * (2.0 - gamma);
    const double c_gamma = 1.0 / g2;
    const double c_n = (1.0 - gamma) * (1.0 - gamma) / g2;
    const double c_f = (1.0 - gamma) / (2.0 - gamma) * dt;
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = c_gamma * rec.u_gamma[i] - c_n * u_n[i];
        x[i] = u_n[i] + (rec.u_gamma[i] - u_n[i]) / gamma;
    }
    {
        auto residual = [&](std::span<const double> xs, std::span<double> r) {
            rhs(StagePoint::end, xs, f);
            for (std::size_t i = 0; i < n; ++i) r[i] = xs[i] - base[i] - c_f * f[i];
        };
        const NewtonReport nr = newton_solve(residual, x, structure, newton);
        evals += nr.residual_evals;
        iters += nr.iterations;
        if (!nr.converged) {
            flush();
            return std::nullopt;
        }
    }
    rec.eval_next = x;
    rec.f_next.resize(n);
    rhs(StagePoint::end, x, rec.f_next);
    ++evals;

    const StageWeights w = trbdf2_weights(gamma);
    rec.u_next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rec.u_next[i] = u_n[i] + dt * (w.start * rec.f_n[i] + w.gamma * rec.f_gamma[i] + w.end * rec.f_next[i]);
    }
    flush();
    return rec;
}

double trbdf2_amplification(double z, double gamma) noexcept {
    const double r_gamma = (1.0 + 0.5 * gamma * z) / (1.0 - 0.5 * gamma * z);
    const double g2 = gamma * (2.0 - gamma);
    const double c = (1.0 - gamma) / (2.0 - gamma);
    return (r_gamma / g2 - (1.0 - gamma) * (1.0 - gamma) / g2) / (1.0 - c * z);
}

std::vector<double> linear_extrapolate(std::span<const double> u_n, std::span<const double> u_gamma, double gamma,
                                       double dt, double t_n, double t_target) {
    const double s = (t_target - t_n) / (gamma * dt);
    std::vector<double> out(u_n.size());
    for (std::size_t i = 0; i < u_n.size(); ++i) out[i] = u_n[i] + s * (u_gamma[i] - u_n[i]);
    return out;
}

State linear_extrapolate(const State& u_n, const State& u_gamma, double gamma, double dt, double t_target) {
    State out = u_n;
    const auto v = linear_extrapolate(u_n.values(), u_gamma.values(), gamma, dt, u_n.time, t_target);
    out.values() = v;
    out.time = t_target;
    return out;
}

std::vector<double> hermite_extrapolate(const StageRecord& rec, double t_target) {
    const double gdt = rec.gamma * rec.dt;
    const double beta = (t_target - rec.t_n) / gdt;
    std::vector<double> out(rec.u_n.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = hermite_value(rec.u_n[i], rec.f_n[i], rec.u_gamma[i], rec.f_gamma[i], gdt, beta);
    }
    return out;
}

}  // namespace cmr
