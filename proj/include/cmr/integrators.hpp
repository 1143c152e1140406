#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmr/grid.hpp"
#include "cmr/newton.hpp"

namespace cmr {

enum class Scheme { theta, trbdf2, forward_euler };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

struct IntegratorConfig {
    Scheme scheme = Scheme::trbdf2;
    double theta = 1.0;
    double gamma = 2.0 - std::sqrt(2.0);
    double newton_tol = 1e-12;
    int newton_max_iter = 25;

    /// Convergence order used by the step-size controller.
    [[nodiscard]] int order() const noexcept;
    [[nodiscard]] NewtonOptions newton() const noexcept { return {newton_tol, newton_max_iter}; }
    /// Throws std::invalid_argument on out-of-range parameters.
    void validate() const;
};

/// Where inside a step a right-hand side is evaluated. Frozen fluxes substitute
/// the value recorded at the matching point of the step that accepted them.
enum class StagePoint { start = 0, gamma = 1, end = 2 };

using StagedRhs = std::function<void(StagePoint, std::span<const double> x, std::span<double> f)>;

/// Wraps a stage-independent right-hand side.
StagedRhs plain_rhs(std::function<void(std::span<const double>, std::span<double>)> f);

struct StepCounters {
    long rhs_evals = 0;
    long newton_iterations = 0;
};

/// Data of one TR-BDF2 step, sufficient for dense output and flux recomputation.
struct StageRecord {
    double t_n = 0.0;
    double dt = 0.0;
    double gamma = 0.0;
    std::vector<double> u_n, u_gamma, u_next;
    std::vector<double> f_n, f_gamma, f_next;
    /// Points where f_gamma and f_next were evaluated (the converged Newton iterates).
    std::vector<double> eval_gamma, eval_next;
};

struct ThetaRecord {
    double t_n = 0.0;
    double dt = 0.0;
    std::vector<double> u_n, u_next;
    std::vector<double> f_n, f_next;
    std::vector<double> eval_next;
};

/// Quadrature weights of the step over its stage points, so that
/// u_next = u_n + dt * sum_j weight[j] * f_j.
struct StageWeights {
    double start = 0.0;
    double gamma = 0.0;
    double end = 0.0;
};
StageWeights trbdf2_weights(double gamma) noexcept;
StageWeights theta_weights(double theta) noexcept;

/// u = u_n + dt [(1 - theta) f(u_n) + theta f(u)]; theta = 0 is explicit.
std::optional<ThetaRecord> theta_step(const StagedRhs& rhs, std::span<const double> u_n, double t_n, double dt,
                                      double theta, const JacobianStructure& structure, const NewtonOptions& newton,
                                      StepCounters* counters = nullptr);

/// One trapezoidal stage to t_n + gamma dt followed by one BDF2 stage to t_n + dt.
/// Returns nullopt when a Newton solve fails.
std::optional<StageRecord> trbdf2_step(const StagedRhs& rhs, std::span<const double> u_n, double t_n, double dt,
                                       double gamma, const JacobianStructure& structure,
                                       const NewtonOptions& newton, StepCounters* counters = nullptr);

/// Amplification factor of TR-BDF2 applied to y' = lambda y with z = lambda dt.
double trbdf2_amplification(double z, double gamma) noexcept;

/// u_n + ((t - t_n) / (gamma dt)) (u_gamma - u_n)
std::vector<double> linear_extrapolate(std::span<const double> u_n, std::span<const double> u_gamma, double gamma,
                                       double dt, double t_n, double t_target);
State linear_extrapolate(const State& u_n, const State& u_gamma, double gamma, double dt, double t_target);

/// Cubic Hermite interpolant through (t_n, u_n, f_n) and (t_n + gamma dt, u_gamma, f_gamma).
std::vector<double> hermite_extrapolate(const StageRecord& rec, double t_target);

/// Component-wise Hermite value; the building block of hermite_extrapolate.
[[nodiscard]] inline double hermite_value(double u_n, double f_n, double u_gamma, double f_gamma, double gamma_dt,
                                          double beta) noexcept {
    const double a0 = u_n;
    const double a1 = gamma_dt * f_n;
    const double a2 = u_gamma - u_n - a1;
    const double a3 = gamma_dt * (f_gamma - f_n);
    return ((a3 - 2.0 * a2) * beta + (3.0 * a2 - a3)) * beta * beta + a1 * beta + a0;
}

}  // namespace cmr
