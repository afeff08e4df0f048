#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "habitentry/interior.hpp"
#include "habitentry/vi_solver.hpp"
#include "test_support.hpp"

using namespace habitentry;
using testsupport::figure1_config;

TEST_CASE("grid construction guards") {
    CHECK_THROWS_AS(make_grid(1.0, 1, -1.0, 1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 10, 1.0, -1.0, 10), std::invalid_argument);
    const Grid2D g = make_grid(2.0, 5, -1.0, 1.0, 9);
    CHECK(g.dt() == doctest::Approx(0.5));
    CHECK(g.deta() == doctest::Approx(0.25));
}

TEST_CASE("obstacle shape and sign") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 40, 60);
    const Obstacle obs = build_obstacle(cfg, grid);

    SUBCASE("terminal slice is identically zero") {
        CHECK(obs.psi.row(grid.nt() - 1).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("nonpositive everywhere for p < 0") { CHECK(obs.psi.maxCoeff() <= 0.0); }

    SUBCASE("edges are negligible against the center column") {
        Eigen::Index center;
        (grid.eta_nodes.array() - cfg.market.mu0).abs().minCoeff(&center);
        for (Eigen::Index i = 0; i + 1 < grid.nt(); ++i) {
            const double mid = std::abs(obs.psi(i, center));
            CHECK(std::abs(obs.psi(i, 0)) < mid);
            CHECK(std::abs(obs.psi(i, grid.neta() - 1)) < mid);
        }
    }
}

TEST_CASE("zero obstacle solves to the zero surface") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 30, 40);
    Obstacle zero;
    zero.psi = Eigen::MatrixXd::Zero(grid.nt(), grid.neta());
    const VISolution sol = solve_vi(cfg, grid, zero);
    CHECK(sol.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.max_complementarity_residual <= 1e-12);
}

TEST_CASE("solution dominates the obstacle with zero terminal data") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 60, 80);
    const VISolution sol = solve_vi(cfg, grid, build_obstacle(cfg, grid));
    CHECK(((sol.v - sol.psi).minCoeff()) >= -1e-14);
    CHECK(sol.v.row(grid.nt() - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.max_complementarity_residual <= 1e-6);

    SUBCASE("Dirichlet edges sit on the obstacle") {
        for (Eigen::Index i = 0; i + 1 < grid.nt(); ++i) {
            CHECK(sol.v(i, 0) == sol.psi(i, 0));
            CHECK(sol.v(i, grid.neta() - 1) == sol.psi(i, grid.neta() - 1));
        }
    }

    SUBCASE("grid refinement stability at the origin") {
        const Grid2D fine = make_default_grid(cfg, 120, 160);
        const VISolution fsol = solve_vi(cfg, fine, build_obstacle(cfg, fine));
        const double c = sol.value_at(0.0, cfg.market.mu0);
        const double f = fsol.value_at(0.0, cfg.market.mu0);
        CHECK(std::abs(c - f) <= 1e-3 * (1.0 + std::abs(f)));
    }

    SUBCASE("Crank-Nicolson agrees with implicit Euler") {
        SchemeParams cn;
        cn.theta = 0.5;
        const VISolution csol = solve_vi(cfg, grid, build_obstacle(cfg, grid), cn);
        CHECK(std::abs(csol.value_at(0.0, cfg.market.mu0) - sol.value_at(0.0, cfg.market.mu0))
              <= 1e-3 * (1.0 + std::abs(sol.value_at(0.0, cfg.market.mu0))));
    }
}

TEST_CASE("solver reports non-convergence") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 10, 12);
    SchemeParams starved;
    starved.psor_max_iter = 0;
    CHECK_THROWS_AS(solve_vi(cfg, grid, build_obstacle(cfg, grid), starved),
                    std::runtime_error);
}

TEST_CASE("synthetic nontrivial obstacle matches the trinomial Snell oracle") {
    // Positive tent obstacle vanishing at T: genuine exercise region in
    // the middle of the band, so the projection actually binds.
    const auto cfg = figure1_config();
    const auto& mk = cfg.market;
    const double T = mk.horizon_T;
    auto psi_fn = [&](double t, double eta) {
        const double hump = 1.0 - (eta - mk.mu_bar) * (eta - mk.mu_bar);
        return (T - t) * std::max(hump, 0.0);
    };

    const Grid2D grid = make_grid(T, 400, mk.mu_bar - 6.0, mk.mu_bar + 6.0, 401);
    Obstacle obs;
    obs.psi.resize(grid.nt(), grid.neta());
    for (Eigen::Index i = 0; i < grid.nt(); ++i)
        for (Eigen::Index j = 0; j < grid.neta(); ++j)
            obs.psi(i, j) =
                (i + 1 == grid.nt()) ? 0.0 : psi_fn(grid.t_nodes[i], grid.eta_nodes[j]);
    const VISolution sol = solve_vi(cfg, grid, obs);

    // At the hump peak immediate stopping is optimal (the obstacle decays
    // in t and is concave in eta), so v = psi there; outside the hump the
    // obstacle is 0 and waiting for the drift to revert has real value.
    const double peak = sol.value_at(0.0, mk.mu_bar);
    CHECK(peak == doctest::Approx(psi_fn(0.0, mk.mu_bar)).epsilon(1e-10));

    const double eta_out = mk.mu_bar + 1.5;
    const double pde = sol.value_at(0.0, eta_out);
    CHECK(pde > 1.0);  // far above the zero obstacle value at that point
    const double tree = testsupport::trinomial_snell_oracle(
        mk.lambda, mk.mu_bar, mk.sigma_mu, T, eta_out, 2000, 260, psi_fn);
    CHECK(std::abs(pde - tree) <= 1e-2 * (1.0 + std::abs(tree)));

    const double tree_peak = testsupport::trinomial_snell_oracle(
        mk.lambda, mk.mu_bar, mk.sigma_mu, T, mk.mu_bar, 2000, 260, psi_fn);
    CHECK(std::abs(peak - tree_peak) <= 1e-2 * (1.0 + std::abs(tree_peak)));
}

TEST_CASE("boundary extraction") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 50, 70);
    const VISolution sol = solve_vi(cfg, grid, build_obstacle(cfg, grid));
    const auto records = extract_boundary(sol);
    REQUIRE(records.size() == static_cast<std::size_t>(grid.nt()));

    SUBCASE("terminal slice is a full stop") { CHECK(records.back().full_stop); }

    SUBCASE("interior slices report a two-sided barrier inside the domain") {
        const auto& r = records.front();
        REQUIRE(r.lower_eta.has_value());
        REQUIRE(r.upper_eta.has_value());
        CHECK(*r.lower_eta > grid.eta_nodes[0]);
        CHECK(*r.upper_eta < grid.eta_nodes[grid.neta() - 1]);
        CHECK(*r.lower_eta < *r.upper_eta);
    }
}

TEST_CASE("stopping rule semantics") {
    const auto cfg = figure1_config();
    const Grid2D grid = make_default_grid(cfg, 50, 70);
    const VISolution sol = solve_vi(cfg, grid, build_obstacle(cfg, grid));
    const StoppingRule rule = entry_rule(sol);

    SUBCASE("always stop at the horizon") {
        for (double eta : {-3.0, 0.25, 2.0}) CHECK(rule.stop(cfg.market.horizon_T, eta));
        CHECK(rule.stop(cfg.market.horizon_T + 1.0, 0.0));
    }

    SUBCASE("continuation nodes continue, far-field stops") {
        CHECK_FALSE(rule.stop(0.0, cfg.market.mu0));
        CHECK(rule.stop(0.0, grid.eta_nodes[0]));
        CHECK(rule.stop(0.0, grid.eta_nodes[grid.neta() - 1]));
    }
}
