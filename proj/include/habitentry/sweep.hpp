#pragma once

#include <string>
#include <vector>

#include "habitentry/model_params.hpp"
#include "habitentry/vi_solver.hpp"

namespace habitentry {

/// One-parameter experiment ladder over a base config.
struct SweepSpec {
    std::string parameter;       ///< delta, alpha, z0, kappa, rho or sigma_mu
    std::vector<double> values;  ///< strictly increasing, length >= 2
    ModelConfig base;
};

/// Applies one ladder value to a copy of the base config.
ModelConfig apply_parameter(const ModelConfig& base, const std::string& parameter, double value);

struct SweepEntry {
    double parameter_value = 0.0;
    double value_at_origin = 0.0;  ///< v(0, mu0)
    double tol_gap = 0.0;          ///< contact tolerance of the underlying solve
    std::vector<BoundaryRecord> boundary;
};

struct SweepReport {
    std::string parameter;
    std::vector<SweepEntry> entries;
    /// Expected monotonicity verdict of v(0, mu0) along the ladder;
    /// empty when no direction is asserted for the parameter.
    std::string expected_direction;  // "nonincreasing", "nondecreasing" or ""
    bool monotone_ok = true;
};

SweepReport run_sweep(const SweepSpec& spec, int nt, int neta,
                      const SchemeParams& scheme = SchemeParams{});

/// Numeric formatting used by every CSV/JSON emitter: locale-independent,
/// 17 significant digits.
std::string format_number(double x);

/// Provenance line written as the first CSV row, prefixed by '#'.
std::string provenance_header(const ModelConfig& config, int nt, int neta, double theta);

void write_surface_csv(const std::string& path, const ModelConfig& config, const VISolution& sol,
                       double theta);
void write_boundary_csv(const std::string& path, const ModelConfig& config,
                        const std::vector<BoundaryRecord>& records, int nt, int neta,
                        double theta);

/// Per-delta continuation-region boundary files (Figure-1 style data);
/// returns the written file names.
std::vector<std::string> emit_figure1_data(const ModelConfig& config, int nt, int neta,
                                           const SchemeParams& scheme,
                                           const std::vector<double>& delta_ladder,
                                           const std::string& out_dir);

void write_sweep_outputs(const SweepReport& report, const SweepSpec& spec, int nt, int neta,
                         const SchemeParams& scheme, const std::string& out_dir);

}  // namespace habitentry
