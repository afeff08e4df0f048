#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "habitentry/filtering.hpp"
#include "habitentry/interior.hpp"
#include "habitentry/model_params.hpp"
#include "habitentry/simulation.hpp"
#include "habitentry/sweep.hpp"
#include "habitentry/vi_solver.hpp"

namespace he = habitentry;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

he::ModelConfig load_config(const std::string& path) { return he::config_from_json_file(path); }

int cmd_validate(const std::string& config_path) {
    const he::ModelConfig cfg = load_config(config_path);
    const he::ValidationReport report = he::validate(cfg);
    nlohmann::json out;
    out["valid"] = report.valid();
    out["violations"] = report.violations;
    out["warnings"] = report.warnings;
    const auto cond = he::bounded_solution_condition(cfg);
    out["bounded_solution"] = {{"delta", cond.delta_value}, {"satisfied", cond.satisfied}};
    std::cout << out.dump(2) << "\n";
    return report.valid() ? 0 : kExitValidation;
}

int cmd_value(const std::string& config_path, double t, double x, double z, double eta) {
    const he::ModelConfig cfg = load_config(config_path);
    he::require_valid(cfg);
    const he::InteriorValue iv(cfg, t);
    const double v = iv.value(t, x, z, eta);
    const auto pol = iv.feedback_policies(t, x, z, eta);
    nlohmann::json out;
    out["V"] = v;
    out["pi_star"] = pol.pi_star;
    out["c_star"] = pol.c_star;
    out["N"] = iv.n_value(t, eta);
    out["N_eta"] = iv.n_eta(t, eta);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_solve(const std::string& config_path, int nt, int neta, double theta,
              const std::string& out_dir, bool boundary_only) {
    const he::ModelConfig cfg = load_config(config_path);
    he::require_valid(cfg);
    he::SchemeParams scheme;
    scheme.theta = theta;
    const he::Grid2D grid = he::make_default_grid(cfg, nt, neta);
    const he::Obstacle obs = he::build_obstacle(cfg, grid);
    const he::VISolution sol = he::solve_vi(cfg, grid, obs, scheme);
    std::filesystem::create_directories(out_dir);
    if (!boundary_only) he::write_surface_csv(out_dir + "/surface.csv", cfg, sol, theta);
    he::write_boundary_csv(out_dir + "/boundary.csv", cfg, he::extract_boundary(sol), nt, neta,
                           theta);
    std::fprintf(stdout, "v(0,mu0)=%s psor_iterations=%ld max_complementarity=%s\n",
                 he::format_number(sol.value_at(0.0, cfg.market.mu0)).c_str(),
                 sol.psor_iterations,
                 he::format_number(sol.max_complementarity_residual).c_str());
    return 0;
}

int cmd_simulate(const std::string& config_path, int n_paths, double dt, std::uint64_t seed,
                 bool antithetic, const std::string& mode, int nt, int neta,
                 const std::string& out_path) {
    const he::ModelConfig cfg = load_config(config_path);
    he::require_valid(cfg);
    he::PathConfig pc;
    pc.n_paths = n_paths;
    pc.dt = dt;
    pc.seed = seed;
    pc.antithetic = antithetic;

    nlohmann::json out;
    out["n"] = n_paths;
    out["dt"] = dt;
    out["seed"] = seed;
    out["mode"] = mode;
    if (mode == "stage2") {
        he::Stage2Start start{0.0, cfg.cost.x0, cfg.habit.z0, cfg.market.mu0};
        const he::Stage2Result res = he::run_stage2(cfg, start, pc);
        out["mean"] = res.utility.mean;
        out["stderr"] = res.utility.stderr_;
        out["closed_form"] = res.closed_form;
        out["flags"] = res.flagged_paths;
    } else if (mode == "composite") {
        const he::Grid2D grid = he::make_default_grid(cfg, nt, neta);
        const he::Obstacle obs = he::build_obstacle(cfg, grid);
        const he::VISolution sol = he::solve_vi(cfg, grid, obs, he::SchemeParams{});
        const he::CompositeResult res = he::run_composite(cfg, he::entry_rule(sol), pc);
        out["mean"] = res.value.mean;
        out["stderr"] = res.value.stderr_;
        out["vi_value"] = sol.value_at(0.0, cfg.market.mu0);
        out["mean_entry_time"] = res.mean_entry_time;
        out["flags"] = 0;
    } else {
        std::cerr << "unknown simulate mode: " << mode << "\n";
        return 1;
    }
    const std::string text = out.dump(2);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << text << "\n";
    }
    std::cout << text << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::vector<double>& values, int nt, int neta, const std::string& out_dir) {
    he::SweepSpec spec;
    spec.base = load_config(config_path);
    spec.parameter = param;
    spec.values = values;
    const he::SweepReport report = he::run_sweep(spec, nt, neta);
    he::write_sweep_outputs(report, spec, nt, neta, he::SchemeParams{}, out_dir);
    std::printf("parameter=%s monotone_ok=%d\n", report.parameter.c_str(),
                report.monotone_ok ? 1 : 0);
    return 0;
}

int cmd_check_odes(const std::string& config_path, double tol) {
    const he::ModelConfig cfg = load_config(config_path);
    he::require_valid(cfg);
    const double T = cfg.market.horizon_T;
    const he::AuxOdeSolutions aux(cfg);
    auto ric = std::make_shared<he::RiccatiPath>(cfg, 0.0);
    const he::AbcCoefficients abc(aux, ric, cfg.pref.p);

    const double fd = 1e-5;
    double res_aux = 0.0, res_abc = 0.0, res_ric = 0.0;
    const int n = 30;
    for (int i = 0; i < n; ++i) {
        const double s = T * (i + 1) / n;
        for (int j = 0; j <= i; ++j) {
            const double t = std::min(s - 1e-4, T * j / n);
            if (t < 0.0) continue;
            const double at = (aux.a(t + fd, s) - aux.a(t - fd, s)) / (2 * fd);
            const double bt = (aux.b(t + fd, s) - aux.b(t - fd, s)) / (2 * fd);
            const double lt = (aux.l(t + fd, s) - aux.l(t - fd, s)) / (2 * fd);
            const double wt = (aux.w(t + fd, s) - aux.w(t - fd, s)) / (2 * fd);
            const double gt = (aux.g(t + fd, s) - aux.g(t - fd, s)) / (2 * fd);
            res_aux = std::max(res_aux, std::abs(at - aux.a_rhs(aux.a(t, s))));
            res_aux = std::max(res_aux, std::abs(bt - aux.b_rhs(aux.a(t, s), aux.b(t, s))));
            res_aux = std::max(res_aux, std::abs(lt - aux.l_rhs(aux.a(t, s), aux.b(t, s))));
            res_aux = std::max(res_aux, std::abs(wt - aux.w_rhs(aux.w(t, s))));
            res_aux = std::max(res_aux, std::abs(gt - aux.g_rhs(aux.a(t, s), aux.w(t, s))));
            if (t > fd) {
                double ap, bp, cp, am, bm, cm, a0, b0, c0;
                abc.evaluate(t + fd, s, ap, bp, cp);
                abc.evaluate(t - fd, s, am, bm, cm);
                abc.evaluate(t, s, a0, b0, c0);
                res_abc = std::max(res_abc,
                                   std::abs((ap - am) / (2 * fd) - abc.A_t(t, a0)));
                res_abc = std::max(res_abc,
                                   std::abs((bp - bm) / (2 * fd) - abc.B_t(t, a0, b0)));
                res_abc = std::max(res_abc,
                                   std::abs((cp - cm) / (2 * fd) - abc.C_t(t, a0, b0)));
            }
        }
        const double oracle = he::riccati_ode_oracle(cfg, 0.0, s, 1e-4);
        res_ric = std::max(res_ric, std::abs((*ric)(s) - oracle) / (1.0 + oracle));
    }
    std::printf("check,max_residual\n");
    std::printf("aux_odes,%s\n", he::format_number(res_aux).c_str());
    std::printf("abc_odes,%s\n", he::format_number(res_abc).c_str());
    std::printf("riccati,%s\n", he::format_number(res_ric).c_str());
    return (res_aux <= tol && res_abc <= tol && res_ric <= tol) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal-entry and habit-formation consumption solver"};
    app.require_subcommand(1);

    std::string config_path;
    int nt = 200, neta = 200;
    double theta = 1.0;
    std::string out_dir = "out";

    auto* validate = app.add_subcommand("validate", "validate a config file");
    validate->add_option("--config", config_path)->required();

    auto* value = app.add_subcommand("value", "interior value and policies at a point");
    double vt = 0.0, vx = 0.0, vz = 0.0, veta = 0.0;
    value->add_option("--config", config_path)->required();
    value->add_option("--t", vt)->required();
    value->add_option("--x", vx)->required();
    value->add_option("--z", vz)->required();
    value->add_option("--eta", veta)->required();

    auto* solve = app.add_subcommand("solve", "solve the entry variational inequality");
    solve->add_option("--config", config_path)->required();
    solve->add_option("--nt", nt);
    solve->add_option("--neta", neta);
    solve->add_option("--theta", theta);
    solve->add_option("--out", out_dir);

    auto* boundary = app.add_subcommand("boundary", "solve and emit the free boundary only");
    boundary->add_option("--config", config_path)->required();
    boundary->add_option("--nt", nt);
    boundary->add_option("--neta", neta);
    boundary->add_option("--theta", theta);
    boundary->add_option("--out", out_dir);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo verification runs");
    int n_paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    bool antithetic = false;
    std::string mode = "stage2", sim_out;
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--paths", n_paths);
    simulate->add_option("--dt", dt);
    simulate->add_option("--seed", seed);
    simulate->add_flag("--antithetic", antithetic);
    simulate->add_option("--mode", mode)->check(CLI::IsMember({"stage2", "composite"}));
    simulate->add_option("--nt", nt);
    simulate->add_option("--neta", neta);
    simulate->add_option("--out", sim_out);

    auto* sweep = app.add_subcommand("sweep", "parameter ladder with monotonicity verdicts");
    std::string param;
    std::vector<double> values;
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--param", param)->required();
    sweep->add_option("--values", values)->required()->delimiter(',');
    sweep->add_option("--nt", nt);
    sweep->add_option("--neta", neta);
    sweep->add_option("--out", out_dir);

    auto* check = app.add_subcommand("check-odes", "max residuals of the closed forms");
    double tol = 1e-4;
    check->add_option("--config", config_path)->required();
    check->add_option("--tol", tol);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) return cmd_validate(config_path);
        if (*value) return cmd_value(config_path, vt, vx, vz, veta);
        if (*solve) return cmd_solve(config_path, nt, neta, theta, out_dir, false);
        if (*boundary) return cmd_solve(config_path, nt, neta, theta, out_dir, true);
        if (*simulate)
            return cmd_simulate(config_path, n_paths, dt, seed, antithetic, mode, nt, neta,
                                sim_out);
        if (*sweep) return cmd_sweep(config_path, param, values, nt, neta, out_dir);
        if (*check) return cmd_check_odes(config_path, tol);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
