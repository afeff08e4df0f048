#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "habitentry/interior.hpp"
#include "habitentry/model_params.hpp"

namespace habitentry {

/// Uniform tensor grid over [0, T] x [eta_min, eta_max].
struct Grid2D {
    Eigen::VectorXd t_nodes;
    Eigen::VectorXd eta_nodes;

    double dt() const { return t_nodes[1] - t_nodes[0]; }
    double deta() const { return eta_nodes[1] - eta_nodes[0]; }
    Eigen::Index nt() const { return t_nodes.size(); }
    Eigen::Index neta() const { return eta_nodes.size(); }
};

Grid2D make_grid(double horizon_T, int nt, double eta_min, double eta_max, int neta);

/// Truncation range for the drift domain: an OU-spread-based initial
/// width, widened until the obstacle at the edges is negligible
/// relative to its peak.
struct EtaRange {
    double eta_min = 0.0;
    double eta_max = 0.0;
    int widenings = 0;  ///< how many times the initial width was enlarged
};

EtaRange choose_eta_range(const ModelConfig& config);

Grid2D make_default_grid(const ModelConfig& config, int nt, int neta);

/// Stopping reward Psi[i][j] = V(t_i, x0 - kappa t_i, z0, eta_j) with
/// the variance restarted at t_i.
struct Obstacle {
    Eigen::MatrixXd psi;  ///< nt x neta
};

Obstacle build_obstacle(const ModelConfig& config, const Grid2D& grid);

struct SchemeParams {
    double theta = 1.0;        ///< 1 = implicit Euler, 0.5 = Crank-Nicolson
    double psor_tol = 1e-12;   ///< max-update stopping tolerance
    int psor_max_iter = 20000;
    double omega = 1.5;        ///< relaxation factor, falls back to 1 on divergence
};

struct VISolution {
    Grid2D grid;
    Eigen::MatrixXd psi;                 ///< obstacle, nt x neta
    Eigen::MatrixXd v;                   ///< value surface, nt x neta
    Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> continuation;  ///< v > psi + tol_gap
    double tol_gap = 0.0;
    long psor_iterations = 0;
    double max_complementarity_residual = 0.0;

    double value_at(double t, double eta) const;     ///< bilinear in (t, eta)
    double obstacle_at(double t, double eta) const;  ///< bilinear in (t, eta)
};

/// Backward theta-scheme with projected SOR per time slice; Dirichlet
/// v = Psi at the eta edges.
VISolution solve_vi(const ModelConfig& config, const Grid2D& grid, const Obstacle& obstacle,
                    const SchemeParams& scheme = SchemeParams{});

struct BoundaryRecord {
    double t = 0.0;
    std::optional<double> lower_eta;  ///< bottom of the continuation interval
    std::optional<double> upper_eta;  ///< top of the continuation interval
    bool full_stop = false;           ///< entire slice is in the stopping set
};

std::vector<BoundaryRecord> extract_boundary(const VISolution& sol);

/// Entry rule tau* realized as a mask lookup: stop where the bilinear
/// gap v - Psi falls to the contact tolerance. Ties resolve to "stop".
class StoppingRule {
public:
    StoppingRule() = default;
    explicit StoppingRule(const VISolution& sol);

    bool stop(double t, double eta) const;

private:
    Grid2D grid_;
    Eigen::MatrixXd gap_;  ///< v - psi
    double tol_gap_ = 0.0;
};

StoppingRule entry_rule(const VISolution& sol);

}  // namespace habitentry
