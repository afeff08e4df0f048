#include "habitentry/filtering.hpp"

#include <cmath>
#include <stdexcept>

namespace habitentry {

double riccati_rhs(const MarketParams& market, double sigma) {
    const double ss = market.sigma_s;
    return -sigma * sigma / (ss * ss)
           + (-2.0 * market.sigma_mu * market.rho / ss - 2.0 * market.lambda) * sigma
           + (1.0 - market.rho * market.rho) * market.sigma_mu * market.sigma_mu;
}

namespace {

// Clamped cubic spline second derivatives on a uniform grid (Thomas
// solve). Prescribing the true end slopes avoids the O(h^2) boundary
// wiggle a natural spline would add near the endpoints.
Eigen::VectorXd spline_second_derivatives(const Eigen::VectorXd& y, double h, double slope_lo,
                                          double slope_hi) {
    const int n = static_cast<int>(y.size());
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    if (n < 2) return m;
    Eigen::VectorXd diag(n), rhs(n);
    diag[0] = 2.0;
    rhs[0] = 6.0 / h * ((y[1] - y[0]) / h - slope_lo);
    for (int i = 1; i + 1 < n; ++i) {
        diag[i] = 4.0;
        rhs[i] = 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]) / (h * h);
    }
    diag[n - 1] = 2.0;
    rhs[n - 1] = 6.0 / h * (slope_hi - (y[n - 1] - y[n - 2]) / h);
    // forward elimination, unit sub/super diagonals
    for (int i = 1; i < n; ++i) {
        const double w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for (int i = n - 2; i >= 0; --i) m[i] = (rhs[i] - m[i + 1]) / diag[i];
    return m;
}

}  // namespace

RiccatiPath::RiccatiPath(const ModelConfig& config, double start_time, int grid_points)
    : start_(start_time), T_(config.market.horizon_T), market_(config.market) {
    const auto& mk = market_;
    if (start_ < 0.0 || start_ > T_ + 1e-12)
        throw std::invalid_argument("riccati: start_time must lie in [0, T]");
    k_ = mk.lambda * mk.lambda * mk.sigma_s * mk.sigma_s
         + 2.0 * mk.sigma_s * mk.sigma_mu * mk.lambda * mk.rho + mk.sigma_mu * mk.sigma_mu;
    if (k_ <= 0.0 && mk.lambda == 0.0 && mk.sigma_mu == 0.0)
        throw std::invalid_argument("riccati: no information dynamics (lambda = sigma_mu = 0)");
    const double sqk = std::sqrt(std::max(k_, 0.0));
    k1_ = sqk * mk.sigma_s + (mk.lambda * mk.sigma_s * mk.sigma_s + mk.sigma_s * mk.sigma_mu * mk.rho);
    k2_ = -sqk * mk.sigma_s + (mk.lambda * mk.sigma_s * mk.sigma_s + mk.sigma_s * mk.sigma_mu * mk.rho);

    identically_zero_ = (1.0 - mk.rho * mk.rho) * mk.sigma_mu * mk.sigma_mu == 0.0;

    const int n = std::max(grid_points, 2);
    values_ = Eigen::VectorXd::Zero(n);
    const double span = T_ - start_;
    h_ = (span > 0.0) ? span / (n - 1) : 1.0;
    if (!identically_zero_ && span > 0.0) {
        // RK4 on the dense grid with 4 substeps per node interval.
        const int sub = 4;
        const double dt = h_ / sub;
        double sigma = 0.0;
        for (int i = 1; i < n; ++i) {
            for (int j = 0; j < sub; ++j) {
                const double f1 = riccati_rhs(mk, sigma);
                const double f2 = riccati_rhs(mk, sigma + 0.5 * dt * f1);
                const double f3 = riccati_rhs(mk, sigma + 0.5 * dt * f2);
                const double f4 = riccati_rhs(mk, sigma + dt * f3);
                sigma += dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
            }
            values_[i] = sigma;
        }
    }
    if (!identically_zero_ && span > 0.0)
        second_deriv_ = spline_second_derivatives(values_, h_, riccati_rhs(mk, values_[0]),
                                                  riccati_rhs(mk, values_[n - 1]));
    else
        second_deriv_ = Eigen::VectorXd::Zero(n);
}

double RiccatiPath::operator()(double t) const {
    if (identically_zero_) return 0.0;
    const double u = std::clamp(t - start_, 0.0, T_ - start_);
    const int n = static_cast<int>(values_.size());
    int i = std::min(static_cast<int>(u / h_), n - 2);
    if (i < 0) i = 0;
    const double a = (h_ * (i + 1) - u) / h_;
    const double b = 1.0 - a;
    return a * values_[i] + b * values_[i + 1]
           + ((a * a * a - a) * second_deriv_[i] + (b * b * b - b) * second_deriv_[i + 1]) * h_ * h_ / 6.0;
}

double RiccatiPath::explicit_value(double t) const {
    const auto& mk = market_;
    if (identically_zero_) return 0.0;
    const double u = std::max(t - start_, 0.0);
    const double sqk = std::sqrt(k_);
    const double e = std::exp(2.0 * (sqk / mk.sigma_s) * u);
    const double ratio = (k1_ * e + k2_) / (k1_ * e - k2_);
    return sqk * mk.sigma_s * ratio - (mk.lambda + mk.sigma_mu * mk.rho / mk.sigma_s) * mk.sigma_s * mk.sigma_s;
}

double RiccatiPath::stationary_value() const {
    const auto& mk = market_;
    return std::sqrt(k_) * mk.sigma_s
           - (mk.lambda + mk.sigma_mu * mk.rho / mk.sigma_s) * mk.sigma_s * mk.sigma_s;
}

RiccatiPath riccati_explicit(const ModelConfig& config, double start_time) {
    return RiccatiPath(config, start_time);
}

double riccati_ode_oracle(const ModelConfig& config, double start_time, double t, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("riccati oracle: step must be > 0");
    if (t < start_time) throw std::invalid_argument("riccati oracle: t must be >= start_time");
    const auto& mk = config.market;
    const double span = t - start_time;
    const long n = std::max<long>(1, static_cast<long>(std::ceil(span / step)));
    const double dt = span / n;
    double sigma = 0.0;
    if (span == 0.0) return 0.0;
    for (long i = 0; i < n; ++i) {
        const double f1 = riccati_rhs(mk, sigma);
        const double f2 = riccati_rhs(mk, sigma + 0.5 * dt * f1);
        const double f3 = riccati_rhs(mk, sigma + 0.5 * dt * f2);
        const double f4 = riccati_rhs(mk, sigma + dt * f3);
        sigma += dt / 6.0 * (f1 + 2.0 * f2 + 2.0 * f3 + f4);
    }
    return sigma;
}

FilterState filter_step(const FilterState& state, const ModelConfig& config,
                        const RiccatiPath& path, double dt, double innovation_increment) {
    if (!(dt > 0.0)) throw std::invalid_argument("filter_step: dt must be > 0");
    const auto& mk = config.market;
    FilterState next;
    next.mu_hat = state.mu_hat - mk.lambda * (state.mu_hat - mk.mu_bar) * dt
                  + (path(state.t) + mk.sigma_s * mk.sigma_mu * mk.rho) / mk.sigma_s * innovation_increment;
    next.t = state.t + dt;
    next.sigma_hat = path(next.t);
    return next;
}

}  // namespace habitentry
