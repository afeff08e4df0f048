#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "habitentry/interior.hpp"
#include "habitentry/model_params.hpp"
#include "habitentry/vi_solver.hpp"

namespace habitentry {

struct PathConfig {
    int n_paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    bool antithetic = false;
};

struct EstimatorStats {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
};

/// Exact one-step OU transition parameters over an interval dt.
struct OuStep {
    double decay = 1.0;       ///< e^{-lambda dt}
    double mean_pull = 0.0;   ///< mu_bar (1 - decay)
    double shock_sd = 0.0;    ///< sd of the exact transition noise
    double cross_cov = 0.0;   ///< Cov(dW, shock) for stock-drift correlation
};

OuStep make_ou_step(const MarketParams& market, double dt);

/// Drift path ensemble at uniform times 0, dt, ..., n_steps*dt using the
/// exact Gaussian transition (rows = paths).
Eigen::MatrixXd simulate_drift(const ModelConfig& config, const PathConfig& pathcfg,
                               int n_steps);

struct Stage2Start {
    double t = 0.0;
    double x = 0.0;
    double z = 0.0;
    double mu = 0.0;
};

struct Stage2Result {
    EstimatorStats utility;
    double closed_form = 0.0;   ///< V(start) for comparison
    long flagged_paths = 0;     ///< wealth crossed the subsistence floor
    double min_surplus = 0.0;   ///< pathwise min of X - m Z across the ensemble
};

/// Simulates truth, filter, wealth and habit under the feedback policies
/// and accumulates realized utility; errors if more than 0.1% of paths
/// breach the wealth floor.
Stage2Result run_stage2(const ModelConfig& config, const Stage2Start& start,
                        const PathConfig& pathcfg);

struct CompositeResult {
    EstimatorStats value;
    double mean_entry_time = 0.0;
    long stopped_at_horizon = 0;
};

/// Stage-1 under full information: stop per rule, collect the entry
/// reward V(tau, x0 - kappa tau, z0, mu_tau).
CompositeResult run_composite(const ModelConfig& config, const StoppingRule& rule,
                              const PathConfig& pathcfg);

struct MartingaleCheckpoint {
    double t = 0.0;
    EstimatorStats stopped_value;  ///< mean of v(t ^ tau*, mu_{t ^ tau*})
};

/// Monte Carlo means of the stopped value process at the checkpoints;
/// a martingale surrogate (all means should equal v(0, mu0)).
std::vector<MartingaleCheckpoint> martingale_check(const ModelConfig& config,
                                                   const VISolution& sol,
                                                   const PathConfig& pathcfg,
                                                   const std::vector<double>& checkpoints);

}  // namespace habitentry
