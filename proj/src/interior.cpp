#include "habitentry/interior.hpp"

#include <cmath>
#include <stdexcept>

#include "habitentry/quadrature.hpp"

namespace habitentry {

AuxOdeSolutions::AuxOdeSolutions(const ModelConfig& config)
    : p_(config.pref.p),
      lambda_(config.market.lambda),
      mu_bar_(config.market.mu_bar),
      sigma_s_(config.market.sigma_s),
      sigma_mu_(config.market.sigma_mu),
      rho_(config.market.rho) {
    const double p = p_;
    gamma1_ = (1.0 - p + p * rho_ * rho_) * sigma_mu_ * sigma_mu_ / (1.0 - p);
    gamma2_ = -lambda_ + p * rho_ * sigma_mu_ / ((1.0 - p) * sigma_s_);
    gamma3_ = p / ((1.0 - p) * sigma_s_ * sigma_s_);
    delta_ = gamma2_ * gamma2_ - gamma1_ * gamma3_;
    if (!(delta_ > 0.0)) throw std::invalid_argument("aux odes: discriminant must be positive");
    xi_ = std::sqrt(delta_);
    const double q = lambda_ * sigma_s_ + rho_ * sigma_mu_;
    xi1_ = std::sqrt((1.0 - rho_ * rho_) * sigma_mu_ * sigma_mu_ + q * q) / sigma_s_;
    if (xi_ < 1e-14 || xi1_ < 1e-14)
        throw std::invalid_argument("aux odes: degenerate constants (xi or xi1 vanishes)");
}

AuxOdeSolutions aux_ode_solutions(const ModelConfig& config) { return AuxOdeSolutions(config); }

double AuxOdeSolutions::a(double t, double s) const {
    const double e2 = std::exp(2.0 * xi_ * (t - s));
    const double den = 2.0 * xi_ - (xi_ + gamma2_) * (1.0 - e2);
    return p_ * (1.0 - e2) / (2.0 * (1.0 - p_) * sigma_s_ * sigma_s_ * den);
}

double AuxOdeSolutions::b(double t, double s) const {
    const double e1 = std::exp(xi_ * (t - s));
    const double e2 = e1 * e1;
    const double den = 2.0 * xi_ - (xi_ + gamma2_) * (1.0 - e2);
    return p_ * lambda_ * mu_bar_ * (1.0 - e1) * (1.0 - e1)
           / ((1.0 - p_) * sigma_s_ * sigma_s_ * xi_ * den);
}

double AuxOdeSolutions::l(double t, double s) const {
    const double e1 = std::exp(xi_ * (t - s));
    const double e2 = e1 * e1;
    const double den = 2.0 * xi_ - (xi_ + gamma2_) * (1.0 - e2);
    const double lm = lambda_ * mu_bar_;
    // sigma_mu^2 / gamma1 has the finite limit (1-p)/(1-p+p rho^2) as
    // sigma_mu -> 0; use that form so the sigma_mu = 0 case stays exact.
    const double smu2_over_g1 = (1.0 - p_) / (1.0 - p_ + p_ * rho_ * rho_);
    const double linear =
        p_ / (2.0 * (1.0 - p_) * sigma_s_ * sigma_s_)
        * (lm * lm / (xi_ * xi_) - gamma2_ * smu2_over_g1 / gamma3_) * (s - t);
    const double rational =
        p_ * lm * lm * ((xi_ + 2.0 * gamma2_) * e2 - 4.0 * gamma2_ * e1 + 2.0 * gamma2_ - xi_)
        / (2.0 * (1.0 - p_) * sigma_s_ * sigma_s_ * xi_ * xi_ * xi_ * den);
    const double logarithmic =
        -0.5 * smu2_over_g1 * std::log(std::abs(den / (2.0 * xi_ * e1)));
    return linear + rational + logarithmic;
}

double AuxOdeSolutions::w(double t, double s) const {
    const double f2 = std::exp(2.0 * xi1_ * (t - s));
    const double qp = sigma_s_ * xi1_ + lambda_ * sigma_s_ + rho_ * sigma_mu_;
    const double qm = sigma_s_ * xi1_ - lambda_ * sigma_s_ - rho_ * sigma_mu_;
    return -(1.0 - f2) / (2.0 * sigma_s_ * (qp + qm * f2));
}

double AuxOdeSolutions::g(double t, double s) const {
    const double f1 = std::exp(xi1_ * (t - s));
    const double f2 = f1 * f1;
    const double e1 = std::exp(xi_ * (t - s));
    const double e2 = e1 * e1;
    const double qp = sigma_s_ * xi1_ + lambda_ * sigma_s_ + rho_ * sigma_mu_;
    const double qm = sigma_s_ * xi1_ - lambda_ * sigma_s_ - rho_ * sigma_mu_;
    const double rp = sigma_s_ * xi_ + lambda_ * sigma_s_ - rho_ * sigma_mu_ * p_ / (1.0 - p_);
    const double rm = sigma_s_ * xi_ - lambda_ * sigma_s_ + rho_ * sigma_mu_ * p_ / (1.0 - p_);
    const double denom_p = 1.0 - p_ + p_ * rho_ * rho_;
    return 0.5 * std::log((qp + qm * f2) / (2.0 * sigma_s_ * xi1_ * f1))
           - (1.0 - p_) * (1.0 - rho_ * rho_) / (2.0 * denom_p)
                 * std::log((rp + rm * e2) / (2.0 * sigma_s_ * xi_ * e1))
           - rho_ * rho_ * lambda_ * (s - t) / (2.0 * denom_p)
           - rho_ * sigma_mu_ * (s - t) / (2.0 * denom_p * sigma_s_);
}

double AuxOdeSolutions::a_rhs(double a_val) const {
    return -2.0 * gamma1_ * a_val * a_val - 2.0 * gamma2_ * a_val - 0.5 * gamma3_;
}

double AuxOdeSolutions::b_rhs(double a_val, double b_val) const {
    return -2.0 * gamma1_ * a_val * b_val - 2.0 * lambda_ * mu_bar_ * a_val - gamma2_ * b_val;
}

double AuxOdeSolutions::l_rhs(double a_val, double b_val) const {
    return -sigma_mu_ * sigma_mu_ * a_val - 0.5 * gamma1_ * b_val * b_val
           - lambda_ * mu_bar_ * b_val;
}

double AuxOdeSolutions::w_rhs(double w_val) const {
    return -2.0 * (1.0 - rho_ * rho_) * sigma_mu_ * sigma_mu_ * w_val * w_val
           + 2.0 * (lambda_ * sigma_s_ + rho_ * sigma_mu_) / sigma_s_ * w_val
           + 1.0 / (2.0 * sigma_s_ * sigma_s_);
}

double AuxOdeSolutions::g_rhs(double a_val, double w_val) const {
    return sigma_mu_ * sigma_mu_ * (1.0 - rho_ * rho_) * (w_val - a_val);
}

AbcCoefficients::AbcCoefficients(AuxOdeSolutions aux, std::shared_ptr<const RiccatiPath> riccati,
                                 double p)
    : aux_(std::move(aux)),
      riccati_(std::move(riccati)),
      p_(p),
      sigma_s_(aux_.sigma_s()),
      sigma_mu_(aux_.sigma_mu()),
      rho_(aux_.rho()),
      lambda_(aux_.lambda()),
      mu_bar_(aux_.mu_bar()) {
    if (!(p_ < 0.0)) throw std::invalid_argument("abc: p must be < 0");
    if (!riccati_) throw std::invalid_argument("abc: riccati path required");
}

void AbcCoefficients::evaluate(double t, double s, double& A_out, double& B_out,
                               double& C_out) const {
    const double sig = (*riccati_)(t);
    const double av = aux_.a(t, s);
    const double bv = aux_.b(t, s);
    const double lv = aux_.l(t, s);
    const double wv = aux_.w(t, s);
    const double gv = aux_.g(t, s);
    double den = 1.0 - 2.0 * av * sig;
    if (std::abs(av) < 1e-14 && std::abs(sig) < 1e-14) den = 1.0;  // the 0/0 = 0 convention
    const double den_w = 1.0 - 2.0 * wv * sig;
    if (!(den > 0.0) || !(den_w > 0.0))
        throw std::runtime_error("abc: nonpositive log argument (internal consistency failure)");
    const double omp = 1.0 - p_;
    A_out = av / (omp * den);
    B_out = bv / (omp * den);
    C_out = (lv + 0.5 * sig * bv * bv / den - 0.5 * omp * std::log(den)
             - 0.5 * p_ * std::log(den_w) - p_ * gv)
            / omp;
}

double AbcCoefficients::A(double t, double s) const {
    double a, b, c;
    evaluate(t, s, a, b, c);
    return a;
}

double AbcCoefficients::B(double t, double s) const {
    double a, b, c;
    evaluate(t, s, a, b, c);
    return b;
}

double AbcCoefficients::C(double t, double s) const {
    double a, b, c;
    evaluate(t, s, a, b, c);
    return c;
}

double AbcCoefficients::A_t(double t, double A_val) const {
    const double q = (*riccati_)(t) + sigma_s_ * sigma_mu_ * rho_;
    const double ss2 = sigma_s_ * sigma_s_;
    const double omp = 1.0 - p_;
    return -(p_ / (2.0 * omp * omp * ss2)
             + 2.0 * (-lambda_ + p_ * q / (ss2 * omp)) * A_val
             + 2.0 * q * q / ss2 * A_val * A_val);
}

double AbcCoefficients::B_t(double t, double A_val, double B_val) const {
    const double q = (*riccati_)(t) + sigma_s_ * sigma_mu_ * rho_;
    const double ss2 = sigma_s_ * sigma_s_;
    return -((-lambda_ + p_ * q / (ss2 * (1.0 - p_))) * B_val + 2.0 * lambda_ * mu_bar_ * A_val
             + 2.0 * q * q / ss2 * A_val * B_val);
}

double AbcCoefficients::C_t(double t, double A_val, double B_val) const {
    const double q = (*riccati_)(t) + sigma_s_ * sigma_mu_ * rho_;
    const double ss2 = sigma_s_ * sigma_s_;
    return -(lambda_ * mu_bar_ * B_val
             + q * q / (2.0 * ss2) * (B_val * B_val + 2.0 * A_val));
}

AbcCoefficients abc_from_aux(const AuxOdeSolutions& aux, std::shared_ptr<const RiccatiPath> riccati,
                             double p) {
    return AbcCoefficients(aux, std::move(riccati), p);
}

double NSlice::n(double eta) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k)
        acc += wf[k] * std::exp((A[k] * eta + B[k]) * eta + C[k]);
    return acc;
}

void NSlice::n_and_eta(double eta, double& n_out, double& n_eta_out) const {
    n_out = 0.0;
    n_eta_out = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const double f = wf[k] * std::exp((A[k] * eta + B[k]) * eta + C[k]);
        n_out += f;
        n_eta_out += (2.0 * A[k] * eta + B[k]) * f;
    }
}

void NSlice::n_all(double eta, double& n_out, double& n_eta_out, double& n_etaeta_out) const {
    n_out = 0.0;
    n_eta_out = 0.0;
    n_etaeta_out = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const double f = wf[k] * std::exp((A[k] * eta + B[k]) * eta + C[k]);
        const double d1 = 2.0 * A[k] * eta + B[k];
        n_out += f;
        n_eta_out += d1 * f;
        n_etaeta_out += (2.0 * A[k] + d1 * d1) * f;
    }
}

InteriorValue::InteriorValue(const ModelConfig& config, double entry_time)
    : config_(config),
      entry_(entry_time),
      T_(config.market.horizon_T),
      m_(subsistence_cost(config)),
      abc_(AuxOdeSolutions(config), std::make_shared<RiccatiPath>(config, entry_time),
           config.pref.p) {
    require_valid(config);
    if (entry_ < 0.0 || entry_ > T_ + 1e-12)
        throw std::invalid_argument("interior: entry_time must lie in [0, T]");
}

int InteriorValue::panels(double t) const {
    return std::max(8, static_cast<int>(std::ceil(4.0 * (T_ - t))));
}

double InteriorValue::forcing(double s) const {
    const double p = config_.pref.p;
    return std::pow(1.0 + config_.habit.delta(s) * m_(s), p / (p - 1.0));
}

NSlice InteriorValue::n_slice(double t) const {
    NSlice slice;
    slice.t = t;
    if (t >= T_) {
        slice.s.resize(0);
        slice.wf.resize(0);
        slice.A.resize(0);
        slice.B.resize(0);
        slice.C.resize(0);
        return slice;
    }
    const int P = panels(t);
    const int n = 16 * P;
    slice.s.resize(n);
    slice.wf.resize(n);
    slice.A.resize(n);
    slice.B.resize(n);
    slice.C.resize(n);
    double x[16], w[16];
    int idx = 0;
    for (int pnl = 0; pnl < P; ++pnl) {
        const double lo = t + (T_ - t) * pnl / P;
        const double hi = t + (T_ - t) * (pnl + 1) / P;
        GaussLegendre16::map_to(lo, hi, x, w);
        for (int i = 0; i < 16; ++i, ++idx) {
            slice.s[idx] = x[i];
            slice.wf[idx] = w[i] * forcing(x[i]);
            abc_.evaluate(t, x[i], slice.A[idx], slice.B[idx], slice.C[idx]);
        }
    }
    return slice;
}

double InteriorValue::n_value(double t, double eta) const { return n_slice(t).n(eta); }

double InteriorValue::n_eta(double t, double eta) const {
    double n, neta;
    n_slice(t).n_and_eta(eta, n, neta);
    return neta;
}

double InteriorValue::n_etaeta(double t, double eta) const {
    double n, neta, netaeta;
    n_slice(t).n_all(eta, n, neta, netaeta);
    return netaeta;
}

double InteriorValue::n_t(double t, double eta) const {
    if (t >= T_) return 0.0;
    const NSlice slice = n_slice(t);
    double acc = -forcing(t);
    for (Eigen::Index k = 0; k < slice.s.size(); ++k) {
        const double f = slice.wf[k] * std::exp((slice.A[k] * eta + slice.B[k]) * eta + slice.C[k]);
        const double at = abc_.A_t(t, slice.A[k]);
        const double bt = abc_.B_t(t, slice.A[k], slice.B[k]);
        const double ct = abc_.C_t(t, slice.A[k], slice.B[k]);
        acc += ((at * eta + bt) * eta + ct) * f;
    }
    return acc;
}

void InteriorValue::check_domain(double t, double x, double z) const {
    if (!(x > m_(t) * z)) throw std::domain_error("interior: wealth below subsistence cost");
}

double InteriorValue::value(double t, double x, double z, double eta) const {
    check_domain(t, x, z);
    const double p = config_.pref.p;
    const double n = n_value(t, eta);
    return std::pow(n, 1.0 - p) * std::pow(x - m_(t) * z, p) / p;
}

PolicyPair InteriorValue::feedback_policies(double t, double x, double z, double eta) const {
    check_domain(t, x, z);
    const auto& mk = config_.market;
    const double p = config_.pref.p;
    double n, neta;
    n_slice(t).n_and_eta(eta, n, neta);
    const double surplus = x - m_(t) * z;
    const double q = riccati()(t) + mk.sigma_s * mk.sigma_mu * mk.rho;
    const double ss2 = mk.sigma_s * mk.sigma_s;
    PolicyPair out;
    out.pi_star = (eta / ((1.0 - p) * ss2) + q / ss2 * neta / n) * surplus;
    out.c_star = z + surplus / (std::pow(1.0 + config_.habit.delta(t) * m_(t), 1.0 / (1.0 - p)) * n);
    return out;
}

EntryValue::EntryValue(const ModelConfig& config)
    : config_(config), T_(config.market.horizon_T), m_(subsistence_cost(config)), aux_(config) {
    require_valid(config);
}

NSlice EntryValue::n_slice(double t) const {
    NSlice slice;
    slice.t = t;
    if (t >= T_) {
        slice.s.resize(0);
        slice.wf.resize(0);
        slice.A.resize(0);
        slice.B.resize(0);
        slice.C.resize(0);
        return slice;
    }
    const double p = config_.pref.p;
    const double omp = 1.0 - p;
    const int P = std::max(8, static_cast<int>(std::ceil(4.0 * (T_ - t))));
    const int n = 16 * P;
    slice.s.resize(n);
    slice.wf.resize(n);
    slice.A.resize(n);
    slice.B.resize(n);
    slice.C.resize(n);
    double x[16], w[16];
    int idx = 0;
    for (int pnl = 0; pnl < P; ++pnl) {
        const double lo = t + (T_ - t) * pnl / P;
        const double hi = t + (T_ - t) * (pnl + 1) / P;
        GaussLegendre16::map_to(lo, hi, x, w);
        for (int i = 0; i < 16; ++i, ++idx) {
            const double s = x[i];
            slice.s[idx] = s;
            slice.wf[idx] = w[i] * std::pow(1.0 + config_.habit.delta(s) * m_(s), p / (p - 1.0));
            // Sigma(t) = 0 at the entry time, so the mapping collapses.
            slice.A[idx] = aux_.a(t, s) / omp;
            slice.B[idx] = aux_.b(t, s) / omp;
            slice.C[idx] = (aux_.l(t, s) - p * aux_.g(t, s)) / omp;
        }
    }
    return slice;
}

double EntryValue::n_value(double t, double eta) const { return n_slice(t).n(eta); }

double EntryValue::value(double t, double x, double z, double eta) const {
    if (!(x > m_(t) * z)) throw std::domain_error("interior: wealth below subsistence cost");
    const double p = config_.pref.p;
    return std::pow(n_value(t, eta), 1.0 - p) * std::pow(x - m_(t) * z, p) / p;
}

double EntryValue::reward(double t, double eta) const {
    return value(t, config_.cost.x0 - config_.cost.kappa * t, config_.habit.z0, eta);
}

}  // namespace habitentry
