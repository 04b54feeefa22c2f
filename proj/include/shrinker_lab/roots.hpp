#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "errors.hpp"

namespace shrinker_lab {

struct RootResult {
    double x;
    double fx;
    int evaluations;
};

// Brent's method on a sign-changing bracket [a, b].  Inverse quadratic /
// secant steps are accepted only while they stay inside the bracket and
// shrink it fast enough; otherwise bisect.
template <class F>
RootResult brent(F &&f, double a, double b, double xtol = 1e-15, double ftol = 0.0,
                 int max_iter = 200) {
    double fa = f(a), fb = f(b);
    int evals = 2;
    if (fa == 0.0) return {a, fa, evals};
    if (fb == 0.0) return {b, fb, evals};
    if ((fa > 0) == (fb > 0)) throw BracketingError("brent: no sign change on bracket");

    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) { c = a; fc = fa; d = e = b - a; }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0 || std::abs(fb) <= ftol) return {b, fb, evals};

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r, s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m; e = m;
            }
        } else {
            d = m; e = m;
        }
        a = b; fa = fb;
        b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
        fb = f(b);
        ++evals;
    }
    throw NonConvergenceError("brent: iteration limit reached");
}

template <class F>
RootResult bisect(F &&f, double a, double b, double xtol = 1e-12, int max_iter = 200) {
    double fa = f(a);
    double fb = f(b);
    int evals = 2;
    if ((fa > 0) == (fb > 0)) throw BracketingError("bisect: no sign change on bracket");
    for (int it = 0; it < max_iter && std::abs(b - a) > xtol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        ++evals;
        if ((fm > 0) == (fa > 0)) { a = m; fa = fm; } else { b = m; fb = fm; }
    }
    return std::abs(fa) < std::abs(fb) ? RootResult{a, fa, evals} : RootResult{b, fb, evals};
}

} // namespace shrinker_lab
