#include "habitentry/vi_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace habitentry {

Grid2D make_grid(double horizon_T, int nt, double eta_min, double eta_max, int neta) {
    if (nt < 2 || neta < 3) throw std::invalid_argument("grid: need nt >= 2 and neta >= 3");
    if (!(eta_min < eta_max)) throw std::invalid_argument("grid: eta_min must be < eta_max");
    Grid2D g;
    g.t_nodes = Eigen::VectorXd::LinSpaced(nt, 0.0, horizon_T);
    g.eta_nodes = Eigen::VectorXd::LinSpaced(neta, eta_min, eta_max);
    return g;
}

EtaRange choose_eta_range(const ModelConfig& config) {
    const auto& mk = config.market;
    const double sd_T = mk.sigma_mu * std::sqrt(mk.horizon_T);
    double width = 4.0 * sd_T + std::abs(mk.mu0 - mk.mu_bar);
    if (mk.lambda > 0.0)
        width = std::max(width, 6.0 * mk.sigma_mu / std::sqrt(2.0 * mk.lambda));
    width = std::max(width, 4.0 * sd_T);
    width = std::max(width, 1.0);  // floor for near-deterministic drift

    const EntryValue entry(config);
    const double peak = std::abs(entry.reward(0.0, mk.mu_bar));
    EtaRange range;
    for (int attempt = 0;; ++attempt) {
        range.eta_min = mk.mu_bar - width;
        range.eta_max = mk.mu_bar + width;
        range.widenings = attempt;
        const double edge = std::max(std::abs(entry.reward(0.0, range.eta_min)),
                                     std::abs(entry.reward(0.0, range.eta_max)));
        if (edge < 1e-6 * peak || attempt >= 6) break;
        width *= 1.5;
    }
    return range;
}

Grid2D make_default_grid(const ModelConfig& config, int nt, int neta) {
    const EtaRange range = choose_eta_range(config);
    return make_grid(config.market.horizon_T, nt, range.eta_min, range.eta_max, neta);
}

Obstacle build_obstacle(const ModelConfig& config, const Grid2D& grid) {
    require_valid(config);
    const EntryValue entry(config);
    const Eigen::Index nt = grid.nt();
    const Eigen::Index ne = grid.neta();
    Obstacle obs;
    obs.psi.resize(nt, ne);
    for (Eigen::Index i = 0; i < nt; ++i) {
        const double t = grid.t_nodes[i];
        const double x = config.cost.x0 - config.cost.kappa * t;
        const double z = config.habit.z0;
        const double m = entry.m()(t);
        if (!(x > m * z)) {
            std::ostringstream os;
            os << "obstacle: budget violated at t=" << t;
            throw std::invalid_argument(os.str());
        }
        if (t >= grid.t_nodes[nt - 1]) {
            obs.psi.row(i).setZero();
            continue;
        }
        const NSlice slice = entry.n_slice(t);
        const double p = config.pref.p;
        const double surplus_pow = std::pow(x - m * z, p) / p;
        for (Eigen::Index j = 0; j < ne; ++j)
            obs.psi(i, j) = std::pow(slice.n(grid.eta_nodes[j]), 1.0 - p) * surplus_pow;
    }
    return obs;
}

namespace {

struct Tridiag {
    Eigen::VectorXd lower, diag, upper;  // M rows; lower[0] and upper[n-1] unused
};

// Assembles M = I - c*dt*L for the interior rows with per-row upwind
// fallback so that off-diagonals stay nonpositive (M-matrix).
Tridiag assemble(const ModelConfig& config, const Grid2D& grid, double c_dt) {
    const auto& mk = config.market;
    const Eigen::Index ne = grid.neta();
    const double de = grid.deta();
    const double diff = 0.5 * mk.sigma_mu * mk.sigma_mu;
    Tridiag m;
    m.lower = Eigen::VectorXd::Zero(ne);
    m.diag = Eigen::VectorXd::Ones(ne);
    m.upper = Eigen::VectorXd::Zero(ne);
    for (Eigen::Index j = 1; j + 1 < ne; ++j) {
        const double drift = -mk.lambda * (grid.eta_nodes[j] - mk.mu_bar);
        double lo, di, up;  // coefficients of L at j-1, j, j+1
        if (diff >= 0.5 * std::abs(drift) * de) {
            lo = diff / (de * de) - drift / (2.0 * de);
            up = diff / (de * de) + drift / (2.0 * de);
            di = -2.0 * diff / (de * de);
        } else if (drift >= 0.0) {  // upwind
            lo = diff / (de * de);
            up = diff / (de * de) + drift / de;
            di = -2.0 * diff / (de * de) - drift / de;
        } else {
            lo = diff / (de * de) - drift / de;
            up = diff / (de * de);
            di = -2.0 * diff / (de * de) + drift / de;
        }
        m.lower[j] = -c_dt * lo;
        m.diag[j] = 1.0 - c_dt * di;
        m.upper[j] = -c_dt * up;
    }
    return m;
}

// L v for one row set (same stencil choice as assemble).
Eigen::VectorXd apply_operator(const ModelConfig& config, const Grid2D& grid,
                               const Eigen::VectorXd& v) {
    const Tridiag m = assemble(config, grid, -1.0);  // I + L; subtract identity below
    const Eigen::Index ne = grid.neta();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(ne);
    for (Eigen::Index j = 1; j + 1 < ne; ++j)
        out[j] = m.lower[j] * v[j - 1] + (m.diag[j] - 1.0) * v[j] + m.upper[j] * v[j + 1];
    return out;
}

// Projected SOR for M v = rhs with v >= psi; returns iterations used,
// or -1 on non-convergence.
int psor(const Tridiag& m, const Eigen::VectorXd& rhs, const Eigen::VectorXd& psi,
         double omega, double tol, int max_iter, Eigen::VectorXd& v) {
    const Eigen::Index ne = v.size();
    for (int it = 1; it <= max_iter; ++it) {
        double max_change = 0.0;
        for (Eigen::Index j = 1; j + 1 < ne; ++j) {
            const double gs =
                (rhs[j] - m.lower[j] * v[j - 1] - m.upper[j] * v[j + 1]) / m.diag[j];
            double next = v[j] + omega * (gs - v[j]);
            next = std::max(next, psi[j]);
            max_change = std::max(max_change, std::abs(next - v[j]));
            v[j] = next;
        }
        if (max_change < tol) return it;
    }
    return -1;
}

}  // namespace

double VISolution::value_at(double t, double eta) const {
    const double dt = grid.dt();
    const double de = grid.deta();
    const Eigen::Index nt = grid.nt(), ne = grid.neta();
    double ft = std::clamp((t - grid.t_nodes[0]) / dt, 0.0, static_cast<double>(nt - 1));
    double fe = std::clamp((eta - grid.eta_nodes[0]) / de, 0.0, static_cast<double>(ne - 1));
    const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(ft), nt - 2);
    const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(fe), ne - 2);
    const double a = ft - i, b = fe - j;
    return (1 - a) * (1 - b) * v(i, j) + (1 - a) * b * v(i, j + 1) + a * (1 - b) * v(i + 1, j)
           + a * b * v(i + 1, j + 1);
}

double VISolution::obstacle_at(double t, double eta) const {
    const double dt = grid.dt();
    const double de = grid.deta();
    const Eigen::Index nt = grid.nt(), ne = grid.neta();
    double ft = std::clamp((t - grid.t_nodes[0]) / dt, 0.0, static_cast<double>(nt - 1));
    double fe = std::clamp((eta - grid.eta_nodes[0]) / de, 0.0, static_cast<double>(ne - 1));
    const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(ft), nt - 2);
    const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(fe), ne - 2);
    const double a = ft - i, b = fe - j;
    return (1 - a) * (1 - b) * psi(i, j) + (1 - a) * b * psi(i, j + 1) + a * (1 - b) * psi(i + 1, j)
           + a * b * psi(i + 1, j + 1);
}

VISolution solve_vi(const ModelConfig& config, const Grid2D& grid, const Obstacle& obstacle,
                    const SchemeParams& scheme) {
    require_valid(config);
    if (obstacle.psi.rows() != grid.nt() || obstacle.psi.cols() != grid.neta())
        throw std::invalid_argument("solve_vi: obstacle inconsistent with grid");
    if (scheme.theta < 0.0 || scheme.theta > 1.0)
        throw std::invalid_argument("solve_vi: theta must lie in [0, 1]");

    const Eigen::Index nt = grid.nt();
    const Eigen::Index ne = grid.neta();
    const double dt = grid.dt();

    VISolution sol;
    sol.grid = grid;
    sol.psi = obstacle.psi;
    sol.v.resize(nt, ne);
    sol.v.row(nt - 1).setZero();
    sol.tol_gap = 1e-9 * (1.0 + obstacle.psi.cwiseAbs().maxCoeff());

    const Tridiag m_impl = assemble(config, grid, scheme.theta * dt);

    for (Eigen::Index i = nt - 2; i >= 0; --i) {
        const Eigen::VectorXd v_next = sol.v.row(i + 1).transpose();
        Eigen::VectorXd rhs = v_next;
        if (scheme.theta < 1.0)
            rhs += (1.0 - scheme.theta) * dt * apply_operator(config, grid, v_next);
        const Eigen::VectorXd psi_row = obstacle.psi.row(i).transpose();
        // Dirichlet edges: stop at the truncation boundary.
        Eigen::VectorXd v = v_next.cwiseMax(psi_row);  // warm start
        v[0] = psi_row[0];
        v[ne - 1] = psi_row[ne - 1];
        rhs[0] = psi_row[0];
        rhs[ne - 1] = psi_row[ne - 1];

        int iters = psor(m_impl, rhs, psi_row, scheme.omega, scheme.psor_tol,
                         scheme.psor_max_iter, v);
        if (iters < 0 && scheme.omega != 1.0)
            iters = psor(m_impl, rhs, psi_row, 1.0, scheme.psor_tol, scheme.psor_max_iter, v);
        if (iters < 0) {
            std::ostringstream os;
            os << "solve_vi: PSOR failed to converge at t=" << grid.t_nodes[i]
               << " within " << scheme.psor_max_iter << " iterations (tol=" << scheme.psor_tol
               << ")";
            throw std::runtime_error(os.str());
        }
        sol.psor_iterations += iters;

        // complementarity residual min(v - psi, (Mv - rhs)/dt)
        for (Eigen::Index j = 1; j + 1 < ne; ++j) {
            const double mv = m_impl.lower[j] * v[j - 1] + m_impl.diag[j] * v[j]
                              + m_impl.upper[j] * v[j + 1];
            const double pde = (mv - rhs[j]) / dt;
            const double res = std::min(v[j] - psi_row[j], pde);
            sol.max_complementarity_residual =
                std::max(sol.max_complementarity_residual, std::abs(res));
        }
        sol.v.row(i) = v.transpose();
    }

    sol.continuation.resize(nt, ne);
    for (Eigen::Index i = 0; i < nt; ++i)
        for (Eigen::Index j = 0; j < ne; ++j)
            sol.continuation(i, j) = sol.v(i, j) > sol.psi(i, j) + sol.tol_gap ? 1 : 0;
    return sol;
}

std::vector<BoundaryRecord> extract_boundary(const VISolution& sol) {
    std::vector<BoundaryRecord> records;
    const Eigen::Index nt = sol.grid.nt();
    const Eigen::Index ne = sol.grid.neta();
    records.reserve(nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
        BoundaryRecord rec;
        rec.t = sol.grid.t_nodes[i];
        Eigen::Index first = -1, last = -1;
        for (Eigen::Index j = 0; j < ne; ++j) {
            if (sol.continuation(i, j)) {
                if (first < 0) first = j;
                last = j;
            }
        }
        if (first < 0) {
            rec.full_stop = true;
            records.push_back(rec);
            continue;
        }
        // Interpolate the gap v - psi to locate the contact level between
        // the outermost continuation node and its stopped neighbor.
        auto interp = [&](Eigen::Index cont, Eigen::Index stopped) {
            const double gc = sol.v(i, cont) - sol.psi(i, cont);
            const double gs = sol.v(i, stopped) - sol.psi(i, stopped);
            const double frac = (gc - sol.tol_gap) / std::max(gc - gs, 1e-300);
            return sol.grid.eta_nodes[cont]
                   + frac * (sol.grid.eta_nodes[stopped] - sol.grid.eta_nodes[cont]);
        };
        if (first > 0) rec.lower_eta = interp(first, first - 1);
        if (last + 1 < ne) rec.upper_eta = interp(last, last + 1);
        records.push_back(rec);
    }
    return records;
}

StoppingRule::StoppingRule(const VISolution& sol)
    : grid_(sol.grid), gap_(sol.v - sol.psi), tol_gap_(sol.tol_gap) {}

bool StoppingRule::stop(double t, double eta) const {
    if (t >= grid_.t_nodes[grid_.nt() - 1]) return true;
    const double dt = grid_.dt();
    const double de = grid_.deta();
    const Eigen::Index nt = grid_.nt(), ne = grid_.neta();
    double ft = std::clamp((t - grid_.t_nodes[0]) / dt, 0.0, static_cast<double>(nt - 1));
    double fe = std::clamp((eta - grid_.eta_nodes[0]) / de, 0.0, static_cast<double>(ne - 1));
    const Eigen::Index i = std::min<Eigen::Index>(static_cast<Eigen::Index>(ft), nt - 2);
    const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(fe), ne - 2);
    const double a = ft - i, b = fe - j;
    const double gap = (1 - a) * (1 - b) * gap_(i, j) + (1 - a) * b * gap_(i, j + 1)
                       + a * (1 - b) * gap_(i + 1, j) + a * b * gap_(i + 1, j + 1);
    return gap <= tol_gap_;
}

StoppingRule entry_rule(const VISolution& sol) { return StoppingRule(sol); }

}  // namespace habitentry
