#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "habitentry/filtering.hpp"
#include "habitentry/model_params.hpp"

namespace habitentry {

/// Explicit solutions of the five auxiliary backward ODEs with terminal
/// conditions a(s,s) = b(s,s) = l(s,s) = w(s,s) = g(s,s) = 0, plus the
/// constants they are written in terms of.
class AuxOdeSolutions {
public:
    explicit AuxOdeSolutions(const ModelConfig& config);

    double a(double t, double s) const;
    double b(double t, double s) const;
    double l(double t, double s) const;
    double w(double t, double s) const;
    double g(double t, double s) const;

    // ODE right-hand sides (time derivatives at given function values);
    // used by the residual oracles.
    double a_rhs(double a_val) const;
    double b_rhs(double a_val, double b_val) const;
    double l_rhs(double a_val, double b_val) const;
    double w_rhs(double w_val) const;
    double g_rhs(double a_val, double w_val) const;

    double discriminant() const { return delta_; }
    double xi() const { return xi_; }
    double xi1() const { return xi1_; }
    double gamma1() const { return gamma1_; }
    double gamma2() const { return gamma2_; }
    double gamma3() const { return gamma3_; }

    double p() const { return p_; }
    double lambda() const { return lambda_; }
    double mu_bar() const { return mu_bar_; }
    double sigma_s() const { return sigma_s_; }
    double sigma_mu() const { return sigma_mu_; }
    double rho() const { return rho_; }

private:
    double p_, lambda_, mu_bar_, sigma_s_, sigma_mu_, rho_;
    double delta_, xi_, xi1_, gamma1_, gamma2_, gamma3_;
};

AuxOdeSolutions aux_ode_solutions(const ModelConfig& config);

/// The quadratic-exponent coefficients A(t,s), B(t,s), C(t,s) obtained
/// from the auxiliary solutions and a conditional-variance path, with
/// the 0/0 = 0 convention at t = s.
class AbcCoefficients {
public:
    AbcCoefficients(AuxOdeSolutions aux, std::shared_ptr<const RiccatiPath> riccati, double p);

    double A(double t, double s) const;
    double B(double t, double s) const;
    double C(double t, double s) const;

    /// All three at once (shares the aux evaluations).
    void evaluate(double t, double s, double& A_out, double& B_out, double& C_out) const;

    /// Time derivatives from the printed ODEs, given the coefficient
    /// values and sigma_hat(t); used for N_t and the residual suite.
    double A_t(double t, double A_val) const;
    double B_t(double t, double A_val, double B_val) const;
    double C_t(double t, double A_val, double B_val) const;

    const AuxOdeSolutions& aux() const { return aux_; }
    const RiccatiPath& riccati() const { return *riccati_; }

private:
    AuxOdeSolutions aux_;
    std::shared_ptr<const RiccatiPath> riccati_;
    double p_;
    double sigma_s_, sigma_mu_, rho_, lambda_, mu_bar_;
};

AbcCoefficients abc_from_aux(const AuxOdeSolutions& aux, std::shared_ptr<const RiccatiPath> riccati,
                             double p);

struct PolicyPair {
    double pi_star = 0.0;
    double c_star = 0.0;
};

/// Precomputed quadrature nodes of the N(t, .) integral for one fixed t:
/// N(t,eta) = sum_k wf_k exp(A_k eta^2 + B_k eta + C_k).
struct NSlice {
    double t = 0.0;
    Eigen::VectorXd s, wf, A, B, C;

    double n(double eta) const;
    void n_and_eta(double eta, double& n_out, double& n_eta_out) const;
    void n_all(double eta, double& n_out, double& n_eta_out, double& n_etaeta_out) const;
};

/// Closed-form interior value function and feedback policies, built on
/// a conditional-variance path started at `entry_time` with value 0.
class InteriorValue {
public:
    InteriorValue(const ModelConfig& config, double entry_time);

    const ModelConfig& config() const { return config_; }
    double entry_time() const { return entry_; }
    double horizon() const { return T_; }
    const SubsistenceCost& m() const { return m_; }
    const AbcCoefficients& abc() const { return abc_; }
    const RiccatiPath& riccati() const { return abc_.riccati(); }

    /// Quadrature panel count for the [t, T] integral.
    int panels(double t) const;

    /// Builds the reusable node table for a fixed t.
    NSlice n_slice(double t) const;

    double n_value(double t, double eta) const;
    double n_eta(double t, double eta) const;
    double n_etaeta(double t, double eta) const;

    /// dN/dt from the coefficient ODEs: -f(t,t) + int (A_t eta^2 + B_t eta + C_t) f ds.
    double n_t(double t, double eta) const;

    /// V(t,x,z,eta) = N^{1-p} (x - m z)^p / p; requires x > m(t) z.
    double value(double t, double x, double z, double eta) const;

    PolicyPair feedback_policies(double t, double x, double z, double eta) const;

    /// Integrand prefactor (1 + delta(s) m(s))^{p/(p-1)}.
    double forcing(double s) const;

private:
    void check_domain(double t, double x, double z) const;

    ModelConfig config_;
    double entry_ = 0.0;
    double T_ = 0.0;
    SubsistenceCost m_;
    AbcCoefficients abc_;
};

/// Interior value along the entry locus: V(t, x, z, eta) evaluated with
/// the variance path restarted at t (Sigma(t) = 0), so only the
/// auxiliary solutions are needed. This is the obstacle of the exterior
/// stopping problem.
class EntryValue {
public:
    explicit EntryValue(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const SubsistenceCost& m() const { return m_; }

    NSlice n_slice(double t) const;
    double n_value(double t, double eta) const;
    double value(double t, double x, double z, double eta) const;

    /// V(t, x0 - kappa t, z0, eta), the stopping reward.
    double reward(double t, double eta) const;

private:
    ModelConfig config_;
    double T_ = 0.0;
    SubsistenceCost m_;
    AuxOdeSolutions aux_;
};

}  // namespace habitentry
