#pragma once

#include <string>
#include <vector>

#include "habitentry/piecewise.hpp"

namespace habitentry {

struct MarketParams {
    double lambda = 0.0;     ///< mean-reversion speed of the drift
    double mu_bar = 0.0;     ///< long-run drift level
    double sigma_s = 0.0;    ///< stock volatility
    double sigma_mu = 0.0;   ///< drift volatility
    double rho = 0.0;        ///< correlation between stock and drift noise
    double horizon_T = 0.0;  ///< terminal time in years
    double mu0 = 0.0;        ///< initial drift value
};

struct HabitParams {
    PiecewiseConstant alpha;  ///< persistence discount
    PiecewiseConstant delta;  ///< intensity discount
    double z0 = 0.0;          ///< initial habit level
};

struct PreferenceParams {
    double p = -1.0;  ///< risk-aversion exponent, strictly negative
};

struct CostParams {
    double kappa = 0.0;  ///< information cost rate per unit time
    double x0 = 1.0;     ///< initial wealth
};

struct ModelConfig {
    MarketParams market;
    HabitParams habit;
    PreferenceParams pref;
    CostParams cost;
};

/// Outcome of config validation. Violations make the config unusable;
/// warnings flag accepted-but-degenerate settings.
struct ValidationReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool valid() const { return violations.empty(); }
};

ValidationReport validate(const ModelConfig& config);

/// Throws std::invalid_argument with the first violation if invalid.
void require_valid(const ModelConfig& config);

struct BoundedSolutionCondition {
    double delta_value = 0.0;
    bool satisfied = false;
};

/// Discriminant of the quadratic Riccati-type auxiliary ODE; must be
/// positive for a bounded solution (always true when p < 0).
BoundedSolutionCondition bounded_solution_condition(const ModelConfig& config);

/// Cost of subsistence consumption per unit of standard of living,
/// m(t) = int_t^T exp(int_t^s (delta - alpha)) ds; m(T) = 0.
class SubsistenceCost {
public:
    SubsistenceCost() = default;
    SubsistenceCost(PiecewiseConstant alpha, PiecewiseConstant delta, double horizon_T);

    double operator()(double t) const;

    /// dm/dt = -1 - (delta(t) - alpha(t)) m(t).
    double derivative(double t) const;

    double horizon() const { return T_; }

private:
    PiecewiseConstant alpha_;
    PiecewiseConstant delta_;
    double T_ = 0.0;
};

SubsistenceCost subsistence_cost(const ModelConfig& config);

/// Parses a ModelConfig from a JSON document. Unknown keys at any level
/// are an error. alpha/delta accept a number or
/// {"breakpoints": [...], "values": [...]}.
ModelConfig config_from_json_text(const std::string& text);
ModelConfig config_from_json_file(const std::string& path);
std::string config_to_json_text(const ModelConfig& config);

}  // namespace habitentry
