#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "habitentry/model_params.hpp"
#include "habitentry/quadrature.hpp"
#include "test_support.hpp"

using namespace habitentry;
using testsupport::figure1_config;

TEST_CASE("piecewise constant basics") {
    PiecewiseConstant c(0.25);
    CHECK(c.is_constant());
    CHECK(c(0.0) == 0.25);
    CHECK(c(17.3) == 0.25);
    CHECK(c.integral(1.0, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.min_value() == 0.25);

    PiecewiseConstant f({1.0, 2.5}, {0.1, 0.3, 0.2});
    CHECK(f(0.5) == 0.1);
    CHECK(f(1.0) == 0.3);
    CHECK(f(2.4999) == 0.3);
    CHECK(f(10.0) == 0.2);
    CHECK(f.min_value() == 0.1);
    CHECK(f.integral(0.5, 3.0) == doctest::Approx(0.5 * 0.1 + 1.5 * 0.3 + 0.5 * 0.2));
}

TEST_CASE("subsistence cost closed forms") {
    auto cfg = figure1_config();
    const SubsistenceCost m = subsistence_cost(cfg);
    const double T = cfg.market.horizon_T;

    SUBCASE("m(T) = 0") { CHECK(m(T) == doctest::Approx(0.0).epsilon(1e-15)); }

    SUBCASE("constant delta != alpha") {
        const double d = 0.25, a = 0.04;
        for (double t : {0.0, 1.0, 6.25, 12.0}) {
            const double expect = (std::exp((d - a) * (T - t)) - 1.0) / (d - a);
            CHECK(m(t) == doctest::Approx(expect).epsilon(1e-13));
        }
    }

    SUBCASE("delta = alpha gives m(t) = T - t") {
        cfg.habit.delta = PiecewiseConstant(0.04);
        const SubsistenceCost meq = subsistence_cost(cfg);
        for (double t : {0.0, 3.0, 12.49}) CHECK(meq(t) == doctest::Approx(T - t).epsilon(1e-13));
    }

    SUBCASE("piecewise coefficients vs quadrature oracle") {
        cfg.habit.delta = PiecewiseConstant({4.0, 9.0}, {0.05, 0.45, 0.2});
        cfg.habit.alpha = PiecewiseConstant({6.0}, {0.04, 0.1});
        const SubsistenceCost mp = subsistence_cost(cfg);
        const double kinks[] = {4.0, 6.0, 9.0};
        for (double t : {0.0, 2.0, 5.0, 8.0, 11.0}) {
            auto integrand = [&](double s) {
                return std::exp(cfg.habit.delta.integral(t, s) - cfg.habit.alpha.integral(t, s));
            };
            // integrate segment by segment so the rule only sees smooth pieces
            double oracle = 0.0;
            double lo = t;
            for (double k : kinks)
                if (k > lo && k < T) {
                    oracle += composite_gauss_legendre(integrand, lo, k, 8);
                    lo = k;
                }
            oracle += composite_gauss_legendre(integrand, lo, T, 8);
            CHECK(mp(t) == doctest::Approx(oracle).epsilon(1e-12));
        }
    }

    SUBCASE("derivative identity m' = -1 - (delta - alpha) m") {
        const double fd = 1e-6;
        for (double t : {0.5, 4.0, 10.0}) {
            const double num = (m(t + fd) - m(t - fd)) / (2.0 * fd);
            CHECK(m.derivative(t) == doctest::Approx(num).epsilon(1e-7));
            CHECK(m.derivative(t)
                  == doctest::Approx(-1.0 - (0.25 - 0.04) * m(t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("validate accepts the Figure-1 parameter set") {
    const auto report = validate(figure1_config());
    CHECK(report.valid());
    CHECK(report.warnings.empty());
}

TEST_CASE("validate rejects nonnegative risk aversion") {
    auto cfg = figure1_config();
    cfg.pref.p = 0.5;
    const auto report = validate(cfg);
    CHECK_FALSE(report.valid());
    bool found = false;
    for (const auto& v : report.violations)
        if (v.find("p") != std::string::npos) found = true;
    CHECK(found);
    CHECK_THROWS_AS(require_valid(cfg), std::invalid_argument);
}

TEST_CASE("validate rejects an infeasible information-cost budget") {
    auto cfg = figure1_config();
    cfg.cost.kappa = 2.0 * cfg.cost.x0 / cfg.market.horizon_T;  // wealth hits 0 before T
    const auto report = validate(cfg);
    CHECK_FALSE(report.valid());
}

TEST_CASE("validate flags degenerate sigma_mu = 0 with a warning only") {
    auto cfg = figure1_config();
    cfg.market.sigma_mu = 0.0;
    const auto report = validate(cfg);
    CHECK(report.valid());
    CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("validate rejects malformed market parameters") {
    auto bad = figure1_config();
    bad.market.sigma_s = 0.0;
    CHECK_FALSE(validate(bad).valid());
    bad = figure1_config();
    bad.market.rho = 1.5;
    CHECK_FALSE(validate(bad).valid());
    bad = figure1_config();
    bad.market.horizon_T = -1.0;
    CHECK_FALSE(validate(bad).valid());
    bad = figure1_config();
    bad.habit.z0 = -0.5;
    CHECK_FALSE(validate(bad).valid());
    bad = figure1_config();
    bad.cost.kappa = -1.0;
    CHECK_FALSE(validate(bad).valid());
}

TEST_CASE("bounded-solution discriminant") {
    const auto cfg = figure1_config();

    SUBCASE("p < 0 always satisfies the condition") {
        CHECK(bounded_solution_condition(cfg).satisfied);
        auto cfg2 = cfg;
        cfg2.pref.p = -7.0;
        CHECK(bounded_solution_condition(cfg2).satisfied);
    }

    SUBCASE("Figure-1 value against direct arithmetic") {
        // lambda^2 - 2 lambda p rho sigma_mu / ((1-p) sigma_s)
        //          - p sigma_mu^2 / ((1-p) sigma_s^2), evaluated digit by digit
        const double direct = 0.1 * 0.1
                              - 2.0 * 0.1 * (-1.0) * 0.2 * 0.4 / (2.0 * 0.5)
                              - (-1.0) * 0.4 * 0.4 / (2.0 * 0.5 * 0.5);
        CHECK(direct == doctest::Approx(0.346).epsilon(1e-12));
        CHECK(bounded_solution_condition(cfg).delta_value
              == doctest::Approx(direct).epsilon(1e-14));
    }

    SUBCASE("p -> 0- limit tends to lambda^2") {
        auto cfg2 = cfg;
        cfg2.pref.p = -1e-12;
        CHECK(bounded_solution_condition(cfg2).delta_value
              == doctest::Approx(cfg.market.lambda * cfg.market.lambda).epsilon(1e-9));
    }
}

TEST_CASE("json config round trip") {
    const auto cfg = figure1_config();
    const std::string text = config_to_json_text(cfg);
    const auto back = config_from_json_text(text);
    CHECK(back.market.lambda == cfg.market.lambda);
    CHECK(back.market.mu0 == cfg.market.mu0);
    CHECK(back.habit.z0 == cfg.habit.z0);
    CHECK(back.habit.delta(3.0) == cfg.habit.delta(3.0));
    CHECK(back.pref.p == cfg.pref.p);
    CHECK(back.cost.kappa == cfg.cost.kappa);
}

TEST_CASE("json config rejects unknown and malformed keys") {
    const std::string base = config_to_json_text(figure1_config());
    CHECK_THROWS_AS(config_from_json_text("{\"market\": {}}"), std::invalid_argument);

    std::string with_extra = base;
    with_extra.insert(with_extra.rfind('}'), ", \"extra_key\": 1\n");
    CHECK_THROWS_AS(config_from_json_text(with_extra), std::invalid_argument);

    CHECK_THROWS_AS(
        config_from_json_text(
            "{\"market\": {\"lambda\": \"x\", \"mu_bar\": 0, \"sigma_s\": 1, \"sigma_mu\": 0.1, "
            "\"rho\": 0, \"horizon_T\": 1, \"mu0\": 0}, \"habit\": {\"alpha\": 0, \"delta\": 0, "
            "\"z0\": 0}, \"pref\": {\"p\": -1}, \"cost\": {\"kappa\": 0, \"x0\": 1}}"),
        std::invalid_argument);
}

TEST_CASE("json config accepts piecewise alpha/delta objects") {
    const std::string text =
        "{\"market\": {\"lambda\": 0.1, \"mu_bar\": 0.25, \"sigma_s\": 0.5, \"sigma_mu\": 0.4, "
        "\"rho\": 0.2, \"horizon_T\": 12.5, \"mu0\": 0.25}, "
        "\"habit\": {\"alpha\": 0.04, "
        "\"delta\": {\"breakpoints\": [5.0], \"values\": [0.1, 0.3]}, \"z0\": 0.5}, "
        "\"pref\": {\"p\": -1}, \"cost\": {\"kappa\": 5000, \"x0\": 1000000}}";
    const auto cfg = config_from_json_text(text);
    CHECK(cfg.habit.delta(1.0) == 0.1);
    CHECK(cfg.habit.delta(6.0) == 0.3);
    CHECK(validate(cfg).valid());
}
