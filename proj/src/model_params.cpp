#include "habitentry/model_params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace habitentry {

namespace {

bool nearly_zero(double x) { return std::abs(x) < 1e-14; }

}  // namespace

SubsistenceCost::SubsistenceCost(PiecewiseConstant alpha, PiecewiseConstant delta, double horizon_T)
    : alpha_(std::move(alpha)), delta_(std::move(delta)), T_(horizon_T) {}

double SubsistenceCost::operator()(double t) const {
    if (t >= T_) return 0.0;
    if (alpha_.is_constant() && delta_.is_constant()) {
        const double r = delta_(0.0) - alpha_(0.0);
        const double tau = T_ - t;
        if (nearly_zero(r)) return tau;
        return std::expm1(r * tau) / r;
    }
    // Walk forward through the panels of delta - alpha; each panel has a
    // constant rate, so the integral is exact.
    std::vector<double> cuts;
    for (double b : delta_.breakpoints())
        if (b > t && b < T_) cuts.push_back(b);
    for (double b : alpha_.breakpoints())
        if (b > t && b < T_) cuts.push_back(b);
    cuts.push_back(T_);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    double growth = 1.0;  // exp(int_t^{panel start} r)
    double lo = t;
    for (double hi : cuts) {
        if (hi <= lo) continue;
        const double r = delta_(0.5 * (lo + hi)) - alpha_(0.5 * (lo + hi));
        const double h = hi - lo;
        acc += growth * (nearly_zero(r) ? h : std::expm1(r * h) / r);
        growth *= std::exp(r * h);
        lo = hi;
    }
    return acc;
}

double SubsistenceCost::derivative(double t) const {
    return -1.0 - (delta_(t) - alpha_(t)) * (*this)(t);
}

SubsistenceCost subsistence_cost(const ModelConfig& config) {
    return SubsistenceCost(config.habit.alpha, config.habit.delta, config.market.horizon_T);
}

ValidationReport validate(const ModelConfig& config) {
    ValidationReport report;
    const auto& mk = config.market;
    if (!(mk.sigma_s > 0.0)) report.violations.push_back("sigma_s must be > 0");
    if (!(std::abs(mk.rho) <= 1.0)) report.violations.push_back("rho must lie in [-1, 1]");
    if (!(mk.lambda >= 0.0)) report.violations.push_back("lambda must be >= 0");
    if (!(mk.horizon_T > 0.0)) report.violations.push_back("horizon_T must be > 0");
    if (mk.sigma_mu < 0.0) report.violations.push_back("sigma_mu must be >= 0");
    if (mk.sigma_mu == 0.0) report.warnings.push_back("degenerate: deterministic drift (sigma_mu = 0)");

    if (config.habit.alpha.min_value() < 0.0) report.violations.push_back("alpha(t) must be >= 0");
    if (config.habit.delta.min_value() < 0.0) report.violations.push_back("delta(t) must be >= 0");
    if (config.habit.z0 < 0.0) report.violations.push_back("z0 must be >= 0");

    if (!(config.pref.p < 0.0)) report.violations.push_back("p must be < 0");

    if (!(config.cost.x0 > 0.0)) report.violations.push_back("x0 must be > 0");
    if (config.cost.kappa < 0.0) report.violations.push_back("kappa must be >= 0");

    if (!report.violations.empty()) return report;

    // Budget feasibility x0 - kappa t > z0 m(t), sampled densely plus the
    // endpoints.
    const SubsistenceCost m = subsistence_cost(config);
    const double T = mk.horizon_T;
    const int n = 10 * static_cast<int>(std::ceil(T)) + 1;
    for (int i = 0; i <= n; ++i) {
        const double t = (i == n) ? T : T * static_cast<double>(i) / n;
        const double lhs = config.cost.x0 - config.cost.kappa * t;
        const double rhs = config.habit.z0 * m(t);
        if (!(lhs > rhs)) {
            std::ostringstream os;
            os << "budget feasibility violated at t=" << t << ": x0-kappa*t=" << lhs
               << " <= z0*m(t)=" << rhs;
            report.violations.push_back(os.str());
            break;
        }
    }
    return report;
}

void require_valid(const ModelConfig& config) {
    const ValidationReport report = validate(config);
    if (!report.valid()) throw std::invalid_argument("invalid config: " + report.violations.front());
}

BoundedSolutionCondition bounded_solution_condition(const ModelConfig& config) {
    const auto& mk = config.market;
    const double p = config.pref.p;
    const double d = mk.lambda * mk.lambda
                     - 2.0 * mk.lambda * p * mk.rho * mk.sigma_mu / ((1.0 - p) * mk.sigma_s)
                     - p * mk.sigma_mu * mk.sigma_mu / ((1.0 - p) * mk.sigma_s * mk.sigma_s);
    return {d, d > 0.0};
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
    }
}

double need_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw std::invalid_argument("missing key '" + std::string(key) + "' in " + where);
    if (!obj[key].is_number()) throw std::invalid_argument("key '" + std::string(key) + "' in " + where + " must be a number");
    return obj[key].get<double>();
}

PiecewiseConstant parse_time_function(const json& node, const std::string& where) {
    if (node.is_number()) return PiecewiseConstant(node.get<double>());
    if (node.is_object()) {
        reject_unknown_keys(node, {"breakpoints", "values"}, where);
        return PiecewiseConstant(node.at("breakpoints").get<std::vector<double>>(),
                                 node.at("values").get<std::vector<double>>());
    }
    throw std::invalid_argument(where + " must be a number or {breakpoints, values}");
}

json time_function_to_json(const PiecewiseConstant& f) {
    if (f.is_constant()) return f.values()[0];
    return json{{"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

}  // namespace

ModelConfig config_from_json_text(const std::string& text) {
    const json doc = json::parse(text);
    reject_unknown_keys(doc, {"market", "habit", "pref", "cost"}, "config");
    ModelConfig cfg;

    const json& mk = doc.at("market");
    reject_unknown_keys(mk, {"lambda", "mu_bar", "sigma_s", "sigma_mu", "rho", "horizon_T", "mu0"},
                        "market");
    cfg.market.lambda = need_number(mk, "lambda", "market");
    cfg.market.mu_bar = need_number(mk, "mu_bar", "market");
    cfg.market.sigma_s = need_number(mk, "sigma_s", "market");
    cfg.market.sigma_mu = need_number(mk, "sigma_mu", "market");
    cfg.market.rho = need_number(mk, "rho", "market");
    cfg.market.horizon_T = need_number(mk, "horizon_T", "market");
    cfg.market.mu0 = need_number(mk, "mu0", "market");

    const json& hb = doc.at("habit");
    reject_unknown_keys(hb, {"alpha", "delta", "z0"}, "habit");
    cfg.habit.alpha = parse_time_function(hb.at("alpha"), "habit.alpha");
    cfg.habit.delta = parse_time_function(hb.at("delta"), "habit.delta");
    cfg.habit.z0 = need_number(hb, "z0", "habit");

    const json& pf = doc.at("pref");
    reject_unknown_keys(pf, {"p"}, "pref");
    cfg.pref.p = need_number(pf, "p", "pref");

    const json& ct = doc.at("cost");
    reject_unknown_keys(ct, {"kappa", "x0"}, "cost");
    cfg.cost.kappa = need_number(ct, "kappa", "cost");
    cfg.cost.x0 = need_number(ct, "x0", "cost");

    return cfg;
}

ModelConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const ModelConfig& cfg) {
    json doc;
    doc["market"] = {{"lambda", cfg.market.lambda},   {"mu_bar", cfg.market.mu_bar},
                     {"sigma_s", cfg.market.sigma_s}, {"sigma_mu", cfg.market.sigma_mu},
                     {"rho", cfg.market.rho},         {"horizon_T", cfg.market.horizon_T},
                     {"mu0", cfg.market.mu0}};
    doc["habit"] = {{"alpha", time_function_to_json(cfg.habit.alpha)},
                    {"delta", time_function_to_json(cfg.habit.delta)},
                    {"z0", cfg.habit.z0}};
    doc["pref"] = {{"p", cfg.pref.p}};
    doc["cost"] = {{"kappa", cfg.cost.kappa}, {"x0", cfg.cost.x0}};
    return doc.dump(2);
}

}  // namespace habitentry
