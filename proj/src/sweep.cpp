#include "habitentry/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "json.hpp"

namespace habitentry {

ModelConfig apply_parameter(const ModelConfig& base, const std::string& parameter, double value) {
    ModelConfig cfg = base;
    if (parameter == "delta")
        cfg.habit.delta = PiecewiseConstant(value);
    else if (parameter == "alpha")
        cfg.habit.alpha = PiecewiseConstant(value);
    else if (parameter == "z0")
        cfg.habit.z0 = value;
    else if (parameter == "kappa")
        cfg.cost.kappa = value;
    else if (parameter == "rho")
        cfg.market.rho = value;
    else if (parameter == "sigma_mu")
        cfg.market.sigma_mu = value;
    else
        throw std::invalid_argument("unknown sweep parameter: " + parameter);
    return cfg;
}

namespace {

std::string expected_direction_for(const std::string& parameter) {
    if (parameter == "delta" || parameter == "z0" || parameter == "kappa") return "nonincreasing";
    if (parameter == "alpha") return "nondecreasing";
    return "";
}

}  // namespace

SweepReport run_sweep(const SweepSpec& spec, int nt, int neta, const SchemeParams& scheme) {
    if (spec.values.size() < 2) throw std::invalid_argument("sweep: ladder needs >= 2 values");
    for (std::size_t i = 1; i < spec.values.size(); ++i)
        if (!(spec.values[i - 1] < spec.values[i]))
            throw std::invalid_argument("sweep: ladder must be strictly increasing");

    // Validate the whole ladder before solving anything.
    std::vector<ModelConfig> configs;
    for (double v : spec.values) {
        ModelConfig cfg = apply_parameter(spec.base, spec.parameter, v);
        require_valid(cfg);
        configs.push_back(cfg);
    }

    SweepReport report;
    report.parameter = spec.parameter;
    report.expected_direction = expected_direction_for(spec.parameter);

    // One shared grid so ladder values are comparable at (0, mu0).
    const Grid2D grid = make_default_grid(configs.back(), nt, neta);

    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Obstacle obs = build_obstacle(configs[i], grid);
        const VISolution sol = solve_vi(configs[i], grid, obs, scheme);
        SweepEntry entry;
        entry.parameter_value = spec.values[i];
        entry.value_at_origin = sol.value_at(0.0, configs[i].market.mu0);
        entry.tol_gap = sol.tol_gap;
        entry.boundary = extract_boundary(sol);
        report.entries.push_back(std::move(entry));
    }

    if (!report.expected_direction.empty()) {
        for (std::size_t i = 1; i < report.entries.size(); ++i) {
            const double prev = report.entries[i - 1].value_at_origin;
            const double cur = report.entries[i].value_at_origin;
            // Slack at the contact-tolerance scale: values closer than the
            // solver can resolve do not count as violations.
            const double slack = std::max(report.entries[i - 1].tol_gap, report.entries[i].tol_gap);
            if (report.expected_direction == "nonincreasing" && cur > prev + slack)
                report.monotone_ok = false;
            if (report.expected_direction == "nondecreasing" && cur < prev - slack)
                report.monotone_ok = false;
        }
    }
    return report;
}

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string provenance_header(const ModelConfig& config, int nt, int neta, double theta) {
#ifndef HABITENTRY_GIT_DESCRIBE
#define HABITENTRY_GIT_DESCRIBE "unknown"
#endif
    char buf[200];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx grid=%dx%d theta=%g scheme=psor git=%s",
                  static_cast<unsigned long long>(fnv1a(config_to_json_text(config))), nt, neta,
                  theta, HABITENTRY_GIT_DESCRIBE);
    return buf;
}

void write_surface_csv(const std::string& path, const ModelConfig& config, const VISolution& sol,
                       double theta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << provenance_header(config, static_cast<int>(sol.grid.nt()),
                             static_cast<int>(sol.grid.neta()), theta)
        << "\n";
    out << "t,eta,v,obstacle,in_continuation\n";
    for (Eigen::Index i = 0; i < sol.grid.nt(); ++i)
        for (Eigen::Index j = 0; j < sol.grid.neta(); ++j)
            out << format_number(sol.grid.t_nodes[i]) << ',' << format_number(sol.grid.eta_nodes[j])
                << ',' << format_number(sol.v(i, j)) << ',' << format_number(sol.psi(i, j)) << ','
                << int(sol.continuation(i, j)) << '\n';
}

void write_boundary_csv(const std::string& path, const ModelConfig& config,
                        const std::vector<BoundaryRecord>& records, int nt, int neta,
                        double theta) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << provenance_header(config, nt, neta, theta) << "\n";
    out << "t,lower_eta,upper_eta\n";
    for (const auto& rec : records) {
        out << format_number(rec.t) << ',';
        out << (rec.lower_eta ? format_number(*rec.lower_eta) : "nan") << ',';
        out << (rec.upper_eta ? format_number(*rec.upper_eta) : "nan") << '\n';
    }
}

std::vector<std::string> emit_figure1_data(const ModelConfig& config, int nt, int neta,
                                           const SchemeParams& scheme,
                                           const std::vector<double>& delta_ladder,
                                           const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    for (double d : delta_ladder) {
        const ModelConfig cfg = apply_parameter(config, "delta", d);
        require_valid(cfg);
        const Grid2D grid = make_default_grid(cfg, nt, neta);
        const Obstacle obs = build_obstacle(cfg, grid);
        const VISolution sol = solve_vi(cfg, grid, obs, scheme);
        char name[64];
        std::snprintf(name, sizeof(name), "boundary_delta_%g.csv", d);
        const std::string path = out_dir + "/" + name;
        write_boundary_csv(path, cfg, extract_boundary(sol), nt, neta, scheme.theta);
        files.push_back(path);
    }
    return files;
}

void write_sweep_outputs(const SweepReport& report, const SweepSpec& spec, int nt, int neta,
                         const SchemeParams& scheme, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json summary;
    summary["parameter"] = report.parameter;
    summary["expected_direction"] = report.expected_direction;
    summary["monotone_ok"] = report.monotone_ok;
    auto& entries = summary["entries"];
    for (const auto& e : report.entries) {
        char name[64];
        std::snprintf(name, sizeof(name), "boundary_%s_%g.csv", report.parameter.c_str(),
                      e.parameter_value);
        const ModelConfig cfg = apply_parameter(spec.base, spec.parameter, e.parameter_value);
        write_boundary_csv(out_dir + "/" + name, cfg, e.boundary, nt, neta, scheme.theta);
        entries.push_back({{"value", e.parameter_value},
                           {"v_at_origin", e.value_at_origin},
                           {"boundary_csv", name}});
    }
    std::ofstream out(out_dir + "/sweep_summary.json");
    if (!out) throw std::runtime_error("cannot open sweep summary for writing");
    out << summary.dump(2) << "\n";
}

}  // namespace habitentry
