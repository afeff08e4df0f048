#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace habitentry {

/// Piecewise-constant deterministic function of time with a constant
/// fast path. Breakpoints are strictly increasing; values has exactly
/// one more entry than breakpoints.
class PiecewiseConstant {
public:
    PiecewiseConstant() : values_{0.0} {}

    explicit PiecewiseConstant(double constant) : values_{constant} {}

    PiecewiseConstant(std::vector<double> breakpoints, std::vector<double> values)
        : breaks_(std::move(breakpoints)), values_(std::move(values)) {
        if (values_.size() != breaks_.size() + 1)
            throw std::invalid_argument("piecewise: values must have breakpoints+1 entries");
        for (std::size_t i = 1; i < breaks_.size(); ++i)
            if (!(breaks_[i - 1] < breaks_[i]))
                throw std::invalid_argument("piecewise: breakpoints must be strictly increasing");
    }

    bool is_constant() const { return breaks_.empty(); }

    double operator()(double t) const {
        if (breaks_.empty()) return values_[0];
        std::size_t i = 0;
        while (i < breaks_.size() && t >= breaks_[i]) ++i;
        return values_[i];
    }

    double min_value() const {
        double m = values_[0];
        for (double v : values_) m = std::min(m, v);
        return m;
    }

    /// Integral over [t0, t1], exact for the piecewise-constant form.
    double integral(double t0, double t1) const {
        if (t1 < t0) return -integral(t1, t0);
        if (breaks_.empty()) return values_[0] * (t1 - t0);
        double acc = 0.0;
        double lo = t0;
        for (std::size_t i = 0; i <= breaks_.size(); ++i) {
            const double hi = (i < breaks_.size()) ? breaks_[i] : t1;
            const double seg_hi = std::min(hi, t1);
            if (seg_hi > lo) acc += values_[i] * (seg_hi - lo);
            lo = std::max(lo, seg_hi);
            if (lo >= t1) break;
        }
        return acc;
    }

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

}  // namespace habitentry
