#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "vec2.hpp"

namespace shrinker_lab {

// Composite Simpson on uniform samples.  An even number of intervals is the
// normal case; an odd count closes with the 3/8 rule on the last three.
inline double simpson(const std::vector<double> &f, double h) {
    const std::size_t n = f.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (f[0] + f[1]);
    if (n == 4) return 3.0 * h / 8.0 * (f[0] + 3 * f[1] + 3 * f[2] + f[3]);
    const std::size_t m = (n - 1) % 2 == 0 ? n : n - 3; // points covered by plain Simpson
    double s = f[0] + f[m - 1];
    for (std::size_t i = 1; i + 1 < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
    s *= h / 3.0;
    if (m != n) s += 3.0 * h / 8.0 * (f[n - 4] + 3 * f[n - 3] + 3 * f[n - 2] + f[n - 1]);
    return s;
}

struct GaussRule {
    std::vector<double> nodes, weights; // on [-1, 1]
};

// Newton iteration on P_n from the Chebyshev guesses.
inline GaussRule gauss_legendre(std::size_t n) {
    GaussRule g;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::cos(pi * (double(i) + 0.75) / (double(n) + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * double(k) - 1) * x * p1 - (double(k) - 1) * p0) / double(k);
                p0 = p1;
                p1 = p2;
            }
            dp = double(n) * (x * p1 - p0) / (x * x - 1);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * double(k) - 1) * x * p1 - (double(k) - 1) * p0) / double(k);
            p0 = p1;
            p1 = p2;
        }
        dp = double(n) * (x * p1 - p0) / (x * x - 1);
        g.nodes[i] = x;
        g.weights[i] = 2.0 / ((1 - x * x) * dp * dp);
    }
    return g;
}

template <class F>
double gauss_panels(F &&f, double a, double b, std::size_t panels, const GaussRule &g) {
    const double w = (b - a) / double(panels);
    double total = 0;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + w * double(p), mid = lo + 0.5 * w;
        double part = 0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) part += g.weights[i] * f(mid + 0.5 * w * g.nodes[i]);
        total += 0.5 * w * part;
    }
    return total;
}

} // namespace shrinker_lab
