#include "habitentry/simulation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace habitentry {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path_index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(path_index + 1)));
}

/// Compensated accumulator for order-independent aggregation.
class KahanAccumulator {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
        const double y2 = x * x - comp2_;
        const double t2 = sumsq_ + y2;
        comp2_ = (t2 - sumsq_) - y2;
        sumsq_ = t2;
        ++n_;
    }

    EstimatorStats stats() const {
        EstimatorStats s;
        s.n = n_;
        if (n_ == 0) return s;
        s.mean = sum_ / n_;
        if (n_ > 1) {
            const double var = std::max(0.0, (sumsq_ - sum_ * sum_ / n_) / (n_ - 1));
            s.stderr_ = std::sqrt(var / n_);
        }
        return s;
    }

private:
    double sum_ = 0.0, comp_ = 0.0, sumsq_ = 0.0, comp2_ = 0.0;
    long n_ = 0;
};

}  // namespace

OuStep make_ou_step(const MarketParams& market, double dt) {
    OuStep s;
    const double lam = market.lambda;
    s.decay = std::exp(-lam * dt);
    s.mean_pull = market.mu_bar * (1.0 - s.decay);
    double var, cov;
    if (lam * dt < 1e-10) {
        var = market.sigma_mu * market.sigma_mu * dt;
        cov = market.rho * market.sigma_mu * dt;
    } else {
        var = market.sigma_mu * market.sigma_mu * (1.0 - s.decay * s.decay) / (2.0 * lam);
        cov = market.rho * market.sigma_mu * (1.0 - s.decay) / lam;
    }
    s.shock_sd = std::sqrt(var);
    s.cross_cov = cov;
    return s;
}

Eigen::MatrixXd simulate_drift(const ModelConfig& config, const PathConfig& pathcfg,
                               int n_steps) {
    if (pathcfg.n_paths < 1 || !(pathcfg.dt > 0.0))
        throw std::invalid_argument("simulate_drift: need n_paths >= 1 and dt > 0");
    const OuStep step = make_ou_step(config.market, pathcfg.dt);
    Eigen::MatrixXd paths(pathcfg.n_paths, n_steps + 1);
    std::normal_distribution<double> normal;
    for (int p = 0; p < pathcfg.n_paths; ++p) {
        const int pair = pathcfg.antithetic ? p / 2 : p;
        const double sign = (pathcfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
        auto eng = path_engine(pathcfg.seed, static_cast<std::uint64_t>(pair));
        double mu = config.market.mu0;
        paths(p, 0) = mu;
        for (int i = 1; i <= n_steps; ++i) {
            const double z = sign * normal(eng);
            mu = step.mean_pull + step.decay * mu + step.shock_sd * z;
            paths(p, i) = mu;
        }
    }
    return paths;
}

namespace {

/// Precomputed N and N_eta on a uniform (t, eta) grid with bilinear
/// lookup; keeps the per-step policy evaluation cheap.
class PolicyTable {
public:
    PolicyTable(const InteriorValue& iv, double t0, double eta_lo, double eta_hi, int nt, int ne)
        : t0_(t0),
          T_(iv.horizon()),
          eta_lo_(eta_lo),
          dt_((T_ - t0) / (nt - 1)),
          deta_((eta_hi - eta_lo) / (ne - 1)),
          nt_(nt),
          ne_(ne),
          n_(nt, ne),
          neta_(nt, ne) {
        for (int i = 0; i < nt_; ++i) {
            const double t = t0_ + i * dt_;
            const NSlice slice = iv.n_slice(std::min(t, T_));
            for (int j = 0; j < ne_; ++j) {
                double n, neta;
                slice.n_and_eta(eta_lo_ + j * deta_, n, neta);
                n_(i, j) = n;
                neta_(i, j) = neta;
            }
        }
    }

    void lookup(double t, double eta, double& n_out, double& neta_out) const {
        double ft = std::clamp((t - t0_) / dt_, 0.0, static_cast<double>(nt_ - 1));
        double fe = std::clamp((eta - eta_lo_) / deta_, 0.0, static_cast<double>(ne_ - 1));
        const int i = std::min(static_cast<int>(ft), nt_ - 2);
        const int j = std::min(static_cast<int>(fe), ne_ - 2);
        const double a = ft - i, b = fe - j;
        n_out = (1 - a) * ((1 - b) * n_(i, j) + b * n_(i, j + 1))
                + a * ((1 - b) * n_(i + 1, j) + b * n_(i + 1, j + 1));
        neta_out = (1 - a) * ((1 - b) * neta_(i, j) + b * neta_(i, j + 1))
                   + a * ((1 - b) * neta_(i + 1, j) + b * neta_(i + 1, j + 1));
    }

private:
    double t0_, T_, eta_lo_, dt_, deta_;
    int nt_, ne_;
    Eigen::MatrixXd n_, neta_;
};

double filter_band(const MarketParams& mk, double horizon) {
    double w = 6.0 * mk.sigma_mu * std::sqrt(std::max(horizon, 1e-6));
    if (mk.lambda > 0.0) w = std::max(w, 6.0 * mk.sigma_mu / std::sqrt(2.0 * mk.lambda));
    return std::max(w, 1.0);
}

}  // namespace

Stage2Result run_stage2(const ModelConfig& config, const Stage2Start& start,
                        const PathConfig& pathcfg) {
    require_valid(config);
    const auto& mk = config.market;
    const double T = mk.horizon_T;
    const InteriorValue iv(config, start.t);
    const SubsistenceCost& m = iv.m();
    if (!(start.x > m(start.t) * start.z))
        throw std::domain_error("run_stage2: start wealth below subsistence cost");

    Stage2Result out;
    out.closed_form = iv.value(start.t, start.x, start.z, start.mu);
    out.min_surplus = start.x - m(start.t) * start.z;

    const double span = T - start.t;
    if (span <= 0.0) {
        KahanAccumulator acc;
        for (int p = 0; p < pathcfg.n_paths; ++p) acc.add(0.0);
        out.utility = acc.stats();
        return out;
    }

    const long n_steps = std::max<long>(1, static_cast<long>(std::llround(span / pathcfg.dt)));
    const double dt = span / n_steps;
    const double sqdt = std::sqrt(dt);
    const double p_exp = config.pref.p;
    const double omp = 1.0 - p_exp;
    const double ss = mk.sigma_s;
    const double ss2 = ss * ss;

    // Per-step deterministic coefficients.
    const RiccatiPath& ric = iv.riccati();
    std::vector<double> q_arr(n_steps), m_arr(n_steps + 1), cden_arr(n_steps), delta_arr(n_steps),
        alpha_arr(n_steps);
    for (long i = 0; i < n_steps; ++i) {
        const double t = start.t + i * dt;
        q_arr[i] = ric(t) + ss * mk.sigma_mu * mk.rho;
        m_arr[i] = m(t);
        delta_arr[i] = config.habit.delta(t);
        alpha_arr[i] = config.habit.alpha(t);
        cden_arr[i] = std::pow(1.0 + delta_arr[i] * m_arr[i], 1.0 / omp);
    }
    m_arr[n_steps] = 0.0;

    const double band = filter_band(mk, span);
    const double eta_lo = mk.mu_bar - band - std::abs(start.mu - mk.mu_bar);
    const double eta_hi = mk.mu_bar + band + std::abs(start.mu - mk.mu_bar);
    const PolicyTable table(iv, start.t, eta_lo, eta_hi, 600, 320);

    const OuStep ou = make_ou_step(mk, dt);
    const double cond_sd =
        std::sqrt(std::max(0.0, ou.shock_sd * ou.shock_sd - ou.cross_cov * ou.cross_cov / dt));
    const double surplus_floor = 1e-12 * start.x;

    std::normal_distribution<double> normal;
    KahanAccumulator acc;
    const int n_units = pathcfg.antithetic ? (pathcfg.n_paths + 1) / 2 : pathcfg.n_paths;

    for (int unit = 0; unit < n_units; ++unit) {
        auto eng = path_engine(pathcfg.seed, static_cast<std::uint64_t>(unit));
        const int reps = pathcfg.antithetic ? 2 : 1;
        double unit_sum = 0.0;
        // Antithetic pairs replay the same normals with flipped sign; the
        // pair average is one sample.
        std::vector<double> z1s, z2s;
        if (pathcfg.antithetic) {
            z1s.resize(n_steps);
            z2s.resize(n_steps);
            for (long i = 0; i < n_steps; ++i) {
                z1s[i] = normal(eng);
                z2s[i] = normal(eng);
            }
        }
        for (int rep = 0; rep < reps; ++rep) {
            const double sign = (rep == 1) ? -1.0 : 1.0;
            double mu = start.mu, mu_hat = start.mu, x = start.x, z = start.z;
            double utility = 0.0, comp = 0.0;
            bool flagged = false;
            for (long i = 0; i < n_steps; ++i) {
                const double z1 = pathcfg.antithetic ? sign * z1s[i] : normal(eng);
                const double z2 = pathcfg.antithetic ? sign * z2s[i] : normal(eng);
                const double t = start.t + i * dt;
                double surplus = x - m_arr[i] * z;
                if (surplus < surplus_floor) {
                    flagged = true;
                    surplus = surplus_floor;
                }
                out.min_surplus = std::min(out.min_surplus, x - m_arr[i] * z);

                double n, neta;
                table.lookup(t, mu_hat, n, neta);
                const double pi = (mu_hat / (omp * ss2) + q_arr[i] / ss2 * neta / n) * surplus;
                const double excess = surplus / (cden_arr[i] * n);  // c* - Z
                const double c = z + excess;

                // compensated utility accumulation
                const double term = std::pow(excess, p_exp) / p_exp * dt;
                const double y = term - comp;
                const double tt = utility + y;
                comp = (tt - utility) - y;
                utility = tt;

                const double dw = sqdt * z1;
                const double dw_hat = (mu - mu_hat) / ss * dt + dw;
                const double shock = ou.cross_cov / dt * dw + cond_sd * z2;

                x += (pi * mu_hat - c) * dt + ss * pi * dw_hat;
                z += (delta_arr[i] * c - alpha_arr[i] * z) * dt;
                mu_hat += -mk.lambda * (mu_hat - mk.mu_bar) * dt + q_arr[i] / ss * dw_hat;
                mu = ou.mean_pull + ou.decay * mu + shock;
            }
            if (flagged) ++out.flagged_paths;
            unit_sum += utility;
        }
        acc.add(unit_sum / reps);
    }
    out.utility = acc.stats();

    const long total = static_cast<long>(n_units) * (pathcfg.antithetic ? 2 : 1);
    if (out.flagged_paths > 0 && out.flagged_paths * 1000 > total)
        throw std::runtime_error("run_stage2: >0.1% of paths breached the wealth floor; "
                                 "reduce dt");
    return out;
}

CompositeResult run_composite(const ModelConfig& config, const StoppingRule& rule,
                              const PathConfig& pathcfg) {
    require_valid(config);
    const auto& mk = config.market;
    const double T = mk.horizon_T;
    const long n_steps = std::max<long>(1, static_cast<long>(std::llround(T / pathcfg.dt)));
    const double dt = T / n_steps;
    const OuStep ou = make_ou_step(mk, dt);
    const EntryValue entry(config);

    std::normal_distribution<double> normal;
    KahanAccumulator acc;
    KahanAccumulator tau_acc;
    CompositeResult out;
    const int n_units = pathcfg.antithetic ? (pathcfg.n_paths + 1) / 2 : pathcfg.n_paths;

    for (int unit = 0; unit < n_units; ++unit) {
        auto eng = path_engine(pathcfg.seed, static_cast<std::uint64_t>(unit));
        const int reps = pathcfg.antithetic ? 2 : 1;
        std::vector<double> zs;
        if (pathcfg.antithetic) {
            zs.resize(n_steps);
            for (long i = 0; i < n_steps; ++i) zs[i] = normal(eng);
        }
        double unit_sum = 0.0, unit_tau = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            const double sign = (rep == 1) ? -1.0 : 1.0;
            double mu = mk.mu0;
            double tau = T;
            double mu_tau = mu;
            bool stopped = false;
            for (long i = 0; i <= n_steps; ++i) {
                const double t = i * dt;
                if (rule.stop(t, mu)) {
                    tau = t;
                    mu_tau = mu;
                    stopped = true;
                    break;
                }
                if (i == n_steps) break;
                const double z = pathcfg.antithetic ? sign * zs[i] : normal(eng);
                mu = ou.mean_pull + ou.decay * mu + ou.shock_sd * z;
            }
            if (!stopped) {
                tau = T;
                mu_tau = mu;
                ++out.stopped_at_horizon;
            }
            unit_sum += entry.reward(tau, mu_tau);
            unit_tau += tau;
        }
        acc.add(unit_sum / reps);
        tau_acc.add(unit_tau / reps);
    }
    out.value = acc.stats();
    out.mean_entry_time = tau_acc.stats().mean;
    return out;
}

std::vector<MartingaleCheckpoint> martingale_check(const ModelConfig& config,
                                                   const VISolution& sol,
                                                   const PathConfig& pathcfg,
                                                   const std::vector<double>& checkpoints) {
    require_valid(config);
    const auto& mk = config.market;
    const double T = mk.horizon_T;
    const long n_steps = std::max<long>(1, static_cast<long>(std::llround(T / pathcfg.dt)));
    const double dt = T / n_steps;
    const OuStep ou = make_ou_step(mk, dt);
    const StoppingRule rule(sol);

    std::vector<KahanAccumulator> accs(checkpoints.size());
    std::normal_distribution<double> normal;

    for (int p = 0; p < pathcfg.n_paths; ++p) {
        auto eng = path_engine(pathcfg.seed, static_cast<std::uint64_t>(p));
        double mu = mk.mu0;
        bool stopped = false;
        double tau = T, mu_tau = mk.mu0;
        std::size_t next_cp = 0;
        std::vector<double> cp_values(checkpoints.size(), 0.0);
        for (long i = 0; i <= n_steps; ++i) {
            const double t = i * dt;
            if (!stopped && rule.stop(t, mu)) {
                stopped = true;
                tau = t;
                mu_tau = mu;
            }
            while (next_cp < checkpoints.size() && checkpoints[next_cp] <= t + 0.5 * dt) {
                if (stopped)
                    cp_values[next_cp] = sol.value_at(tau, mu_tau);
                else
                    cp_values[next_cp] = sol.value_at(t, mu);
                ++next_cp;
            }
            if (i == n_steps) break;
            mu = ou.mean_pull + ou.decay * mu + ou.shock_sd * normal(eng);
        }
        while (next_cp < checkpoints.size()) {
            cp_values[next_cp] = stopped ? sol.value_at(tau, mu_tau) : sol.value_at(T, mu);
            ++next_cp;
        }
        for (std::size_t c = 0; c < checkpoints.size(); ++c) accs[c].add(cp_values[c]);
    }

    std::vector<MartingaleCheckpoint> out(checkpoints.size());
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        out[c].t = checkpoints[c];
        out[c].stopped_value = accs[c].stats();
    }
    return out;
}

}  // namespace habitentry
