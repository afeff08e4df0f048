#pragma once

#include <Eigen/Dense>
#include <memory>

#include "habitentry/model_params.hpp"

namespace habitentry {

/// Right-hand side of the conditional-variance Riccati ODE,
/// dSigma/dt = -Sigma^2/sigma_s^2 - (2 sigma_mu rho / sigma_s + 2 lambda) Sigma
///             + (1 - rho^2) sigma_mu^2.
double riccati_rhs(const MarketParams& market, double sigma);

/// Conditional variance Sigma(t) of the Kalman-Bucy filter started with
/// Sigma(start_time) = 0. The primary evaluator is a dense RK4-integrated
/// grid with natural cubic spline interpolation; the printed explicit
/// form (with time measured from start_time) is kept as a cross-check.
class RiccatiPath {
public:
    RiccatiPath(const ModelConfig& config, double start_time, int grid_points = 2000);

    double start_time() const { return start_; }
    double horizon() const { return T_; }

    /// Spline evaluation of the integrated path (clamped to [start, T]).
    double operator()(double t) const;

    /// Explicit closed form, normalized so that value(start_time) = 0.
    double explicit_value(double t) const;

    /// Positive root of the Riccati right-hand side quadratic.
    double stationary_value() const;

    double k() const { return k_; }
    double k1() const { return k1_; }
    double k2() const { return k2_; }

private:
    double start_ = 0.0;
    double T_ = 0.0;
    MarketParams market_;
    double k_ = 0.0, k1_ = 0.0, k2_ = 0.0;
    bool identically_zero_ = false;
    double h_ = 0.0;                // grid spacing
    Eigen::VectorXd values_;        // Sigma at grid nodes
    Eigen::VectorXd second_deriv_;  // natural cubic spline second derivatives
};

/// Convenience factory matching the explicit-solution contract; throws
/// if lambda and sigma_mu are both zero ("no information dynamics").
RiccatiPath riccati_explicit(const ModelConfig& config, double start_time);

/// Fixed-step classical RK4 integration of the Riccati ODE from
/// Sigma(start_time) = 0; serves as the independent oracle.
double riccati_ode_oracle(const ModelConfig& config, double start_time, double t, double step);

struct FilterState {
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    double t = 0.0;
};

/// One Euler-Maruyama update of the filter mean driven by an innovation
/// increment; the variance is advanced along the Riccati path.
FilterState filter_step(const FilterState& state, const ModelConfig& config,
                        const RiccatiPath& path, double dt, double innovation_increment);

}  // namespace habitentry
