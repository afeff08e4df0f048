#pragma once

#include <array>
#include <cmath>

namespace habitentry {

/// 16-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre16 {
    static constexpr std::array<double, 8> abscissae = {
        0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
        0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
    static constexpr std::array<double, 8> weights = {
        0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
        0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

    /// Fills node positions and weights for the interval [a, b]
    /// (out_x/out_w must hold 16 entries).
    static void map_to(double a, double b, double* out_x, double* out_w) {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        for (int i = 0; i < 8; ++i) {
            out_x[2 * i] = mid - half * abscissae[i];
            out_x[2 * i + 1] = mid + half * abscissae[i];
            out_w[2 * i] = half * weights[i];
            out_w[2 * i + 1] = half * weights[i];
        }
    }
};

/// Composite 16-node Gauss-Legendre quadrature of f over [a, b].
template <typename F>
double composite_gauss_legendre(F&& f, double a, double b, int panels) {
    double acc = 0.0;
    double x[16], w[16];
    for (int p = 0; p < panels; ++p) {
        const double lo = a + (b - a) * p / panels;
        const double hi = a + (b - a) * (p + 1) / panels;
        GaussLegendre16::map_to(lo, hi, x, w);
        for (int i = 0; i < 16; ++i) acc += w[i] * f(x[i]);
    }
    return acc;
}

}  // namespace habitentry
