#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "habitentry/model_params.hpp"

namespace testsupport {

inline habitentry::ModelConfig figure1_config() {
    habitentry::ModelConfig cfg;
    cfg.market.lambda = 0.1;
    cfg.market.mu_bar = 0.25;
    cfg.market.sigma_s = 0.5;
    cfg.market.sigma_mu = 0.4;
    cfg.market.rho = 0.2;
    cfg.market.horizon_T = 12.5;
    cfg.market.mu0 = 0.25;
    cfg.habit.alpha = habitentry::PiecewiseConstant(0.04);
    cfg.habit.delta = habitentry::PiecewiseConstant(0.25);
    cfg.habit.z0 = 0.5;
    cfg.pref.p = -1.0;
    cfg.cost.kappa = 5000.0;
    cfg.cost.x0 = 1.0e6;
    return cfg;
}

// (a, b, l, w, g) at time t, integrated backward from the zero terminal
// state at s by classical RK4 with n_steps fixed steps. Independent of
// the library's closed forms: only the printed right-hand sides appear.
struct AuxState {
    double a = 0.0, b = 0.0, l = 0.0, w = 0.0, g = 0.0;
};

inline AuxState aux_rk4_oracle(const habitentry::ModelConfig& cfg, double t, double s,
                               long n_steps) {
    const double p = cfg.pref.p;
    const double rho = cfg.market.rho;
    const double ss = cfg.market.sigma_s;
    const double smu = cfg.market.sigma_mu;
    const double lam = cfg.market.lambda;
    const double mub = cfg.market.mu_bar;
    const double g1 = (1.0 - p + p * rho * rho) / (1.0 - p) * smu * smu;
    const double g2 = -lam + p * rho * smu / ((1.0 - p) * ss);
    const double g3 = p / ((1.0 - p) * ss * ss);

    auto rhs = [&](const AuxState& y) {
        AuxState d;
        d.a = -2.0 * g1 * y.a * y.a - 2.0 * g2 * y.a - 0.5 * g3;
        d.b = -2.0 * g1 * y.a * y.b - 2.0 * lam * mub * y.a - g2 * y.b;
        d.l = -smu * smu * y.a - 0.5 * g1 * y.b * y.b - lam * mub * y.b;
        d.w = -2.0 * (1.0 - rho * rho) * smu * smu * y.w * y.w
              + 2.0 * (lam * ss + rho * smu) / ss * y.w + 0.5 / (ss * ss);
        d.g = smu * smu * (1.0 - rho * rho) * (y.w - y.a);
        return d;
    };
    auto axpy = [](const AuxState& y, double h, const AuxState& d) {
        AuxState r;
        r.a = y.a + h * d.a;
        r.b = y.b + h * d.b;
        r.l = y.l + h * d.l;
        r.w = y.w + h * d.w;
        r.g = y.g + h * d.g;
        return r;
    };

    AuxState y;  // terminal condition: all zero at time s
    const double h = (t - s) / n_steps;  // negative: integrate backward
    for (long i = 0; i < n_steps; ++i) {
        const AuxState k1 = rhs(y);
        const AuxState k2 = rhs(axpy(y, 0.5 * h, k1));
        const AuxState k3 = rhs(axpy(y, 0.5 * h, k2));
        const AuxState k4 = rhs(axpy(y, h, k3));
        AuxState d;
        d.a = (k1.a + 2 * k2.a + 2 * k3.a + k4.a) / 6.0;
        d.b = (k1.b + 2 * k2.b + 2 * k3.b + k4.b) / 6.0;
        d.l = (k1.l + 2 * k2.l + 2 * k3.l + k4.l) / 6.0;
        d.w = (k1.w + 2 * k2.w + 2 * k3.w + k4.w) / 6.0;
        d.g = (k1.g + 2 * k2.g + 2 * k3.g + k4.g) / 6.0;
        y = axpy(y, h, d);
    }
    return y;
}

// Snell envelope of an obstacle psi(t, eta) for the OU drift
// d mu = -lambda (mu - mu_bar) dt + sigma_mu dB, by backward induction
// on a trinomial lattice. Terminal value is zero (the problem's
// v(T, .) = 0 convention); returns the root value at (0, eta0).
//
// The lattice lives on eta0 + j * deta, |j| <= jmax; the drift is
// handled by shifting the parent index before the up/mid/down move, and
// the leftover fractional drift plus the diffusion fix the branch
// probabilities by moment matching.
inline double trinomial_snell_oracle(double lambda, double mu_bar, double sigma_mu,
                                     double horizon_T, double eta0, int n_steps, int jmax,
                                     const std::function<double(double, double)>& psi) {
    const double dt = horizon_T / n_steps;
    const double deta = sigma_mu * std::sqrt(3.0 * dt) > 0.0
                            ? sigma_mu * std::sqrt(3.0 * dt)
                            : 1.0;  // degenerate diffusion: spacing is arbitrary
    const int width = 2 * jmax + 1;
    std::vector<double> next(width, 0.0), cur(width, 0.0);

    for (int step = n_steps - 1; step >= 0; --step) {
        const double t = step * dt;
        for (int idx = 0; idx < width; ++idx) {
            const int j = idx - jmax;
            const double eta = eta0 + j * deta;
            const double drift = -lambda * (eta - mu_bar) * dt;
            const int shift = static_cast<int>(std::lround(drift / deta));
            const double r = drift / deta - shift;  // fractional drift in node units
            const double var = sigma_mu * sigma_mu * dt / (deta * deta);
            const double pu = 0.5 * (var + r * r + r);
            const double pd = 0.5 * (var + r * r - r);
            const double pm = 1.0 - pu - pd;
            auto at = [&](int k) {
                k = std::min(std::max(k, -jmax), jmax);  // clamp at the truncation edge
                return next[k + jmax];
            };
            const int base = j + shift;
            const double cont = pu * at(base + 1) + pm * at(base) + pd * at(base - 1);
            cur[idx] = std::max(psi(t, eta), cont);
        }
        next = cur;
    }
    return next[jmax];
}

}  // namespace testsupport
