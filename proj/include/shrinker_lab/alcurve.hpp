#pragma once

// Abresch-Langer arcs in polar-tangential coordinates (r, theta, phi, psi).
// Along a shrinker curve c*sin(psi) = K(r) with K(r) = exp(r^2/4)/r.

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rk45.hpp"
#include "roots.hpp"
#include "vec2.hpp"

namespace shrinker_lab {

struct PolarState {
    double r = 0, theta = 0, phi = 0, psi = 0, s = 0;

    Vec2 point() const { return {r * std::cos(theta), r * std::sin(theta)}; }
    Vec2 tangent() const { return unit(phi); }
};

inline double profile_K(double r) {
    if (!(r > 0)) throw DomainError("profile_K: radius must be positive");
    return std::exp(0.25 * r * r) / r;
}

inline const double profile_K_min = std::exp(0.5) / std::sqrt(2.0);

struct RadiiPair {
    double small = 0, large = 0;
};

// Both roots of K(r) = c * sin_psi_target, on either side of sqrt(2).
inline RadiiPair solve_radii(double c, double sin_psi_target) {
    if (!(c > 0)) throw DomainError("solve_radii: energy must be positive");
    if (!(sin_psi_target > 0 && sin_psi_target <= 1))
        throw DomainError("solve_radii: sin(psi) target must lie in (0, 1]");
    const double level = c * sin_psi_target;
    const double gap = level - profile_K_min;
    const double r2 = std::sqrt(2.0);
    if (std::abs(gap) < 1e-12) return {r2, r2};
    if (gap < 0) throw NoSolutionError("solve_radii: level " + std::to_string(level) + " below min K");

    // log K is much better conditioned than K for the large root
    const double log_level = std::log(level);
    auto g = [&](double r) { return 0.25 * r * r - std::log(r) - log_level; };
    auto polish = [&](double r) {
        for (int i = 0; i < 3; ++i) {
            const double d = 0.5 * r - 1.0 / r;
            if (d == 0) break;
            r -= g(r) / d;
        }
        return r;
    };
    double lo = std::min(1.0 / level, 0.5 * r2);
    while (g(lo) <= 0) lo *= 0.5;
    double hi = 2.0 * r2;
    while (g(hi) <= 0) hi *= 2.0;
    const double rs = polish(brent(g, lo, r2, 1e-15).x);
    const double rl = polish(brent(g, r2, hi, 1e-15).x);
    return {std::min(rs, r2), std::max(rl, r2)};
}

enum class Orientation { forward, backward };

struct ALCurve {
    double energy = 0;
    std::vector<PolarState> samples;
    std::vector<double> curvature;
    Orientation orientation = Orientation::forward;
    double psi_start = 0, psi_end = 0;

    const PolarState &front() const { return samples.front(); }
    const PolarState &back() const { return samples.back(); }
    double length() const { return samples.back().s; }
    double sweep() const { return back().theta - front().theta; }
    double turn() const { return back().phi - front().phi; }

    double max_first_integral_drift() const {
        double m = 0;
        for (const auto &p : samples) m = std::max(m, std::abs(energy * std::sin(p.psi) - profile_K(p.r)));
        return m;
    }
    double max_weighted_curvature_defect() const {
        double m = 0;
        for (std::size_t i = 0; i < samples.size(); ++i)
            m = std::max(m, std::abs(curvature[i] * std::exp(-0.25 * samples[i].r * samples[i].r) -
                                     0.5 / energy));
        return m;
    }
};

struct PsiCrossing {
    double target;
    int direction = 0; // +1 increasing, -1 decreasing, 0 either
    int occurrence = 1;
};
struct ThetaSweep {
    double target; // signed change of theta from the start
};
struct ArcLength {
    double length;
};
using StopCondition = std::variant<PsiCrossing, ThetaSweep, ArcLength>;

struct ArcOptions {
    ode::Tolerances tol{};
    std::size_t samples = 2048; // uniform intervals in arclength
    double max_length = 100.0;
    int direction = +1;         // -1 integrates against the parametrization
    double drift_tol = 1e-9;
    int max_refinements = 3;
};

namespace detail {

using ALState = ode::State<4>; // r, theta, phi, psi

inline ALState al_rhs(double, const ALState &y) {
    const double r = y[0], sp = std::sin(y[3]);
    return {std::cos(y[3]), sp / r, 0.5 * r * sp, sp * (0.5 * r - 1.0 / r)};
}

inline void check_start(double c, const PolarState &start) {
    if (!(c > 0)) throw DomainError("integrate_arc: energy must be positive");
    if (!(start.r > 0)) throw DomainError("integrate_arc: start radius must be positive");
    if (std::abs(std::sin(start.psi)) < 1e-8)
        throw DegenerateInputError("integrate_arc: start tangent is radial (|sin psi| < 1e-8)");
    const double k = profile_K(start.r);
    if (std::abs(c * std::sin(start.psi) - k) > 1e-8 * std::max(1.0, k))
        throw DomainError("integrate_arc: start state is not on the energy level");
}

struct ArcEnd {
    double length;
    ALState y;
};

inline ArcEnd locate_stop(double c, const PolarState &start, const StopCondition &stop,
                          const ArcOptions &opt, const ode::Tolerances &tol) {
    (void)c;
    const ALState y0{start.r, start.theta, start.phi, start.psi};
    const double dir = opt.direction >= 0 ? 1.0 : -1.0;
    if (const auto *al = std::get_if<ArcLength>(&stop)) {
        if (!(al->length > 0)) throw DomainError("integrate_arc: arclength bound must be positive");
        auto res = ode::trace<4>(al_rhs, 0.0, y0, dir * al->length, nullptr, tol);
        return {al->length, res.y};
    }
    ode::Event<4> ev;
    if (const auto *pc = std::get_if<PsiCrossing>(&stop)) {
        const double target = pc->target;
        ev.g = [target](double, const ALState &y) { return y[3] - target; };
        // reversing the parametrization flips the sense of every crossing
        ev.direction = int(dir) * pc->direction;
        ev.occurrence = pc->occurrence;
    } else {
        const auto &ts = std::get<ThetaSweep>(stop);
        const double th0 = start.theta, target = ts.target;
        ev.g = [th0, target](double, const ALState &y) { return target >= 0 ? (y[1] - th0) - target
                                                                         : target - (y[1] - th0); };
        ev.direction = +1;
    }
    auto res = ode::trace<4>(al_rhs, 0.0, y0, dir * opt.max_length, &ev, tol);
    if (!res.event_hit)
        throw NonConvergenceError("integrate_arc: stop condition not reached within arclength bound");
    return {std::abs(res.s), res.y};
}

} // namespace detail

// End state only, without resampling.  For shooting.
inline PolarState trace_arc_end(double c, const PolarState &start, const StopCondition &stop,
                                const ArcOptions &opt = {}) {
    detail::check_start(c, start);
    auto end = detail::locate_stop(c, start, stop, opt, opt.tol);
    return {end.y[0], end.y[1], end.y[2], end.y[3], end.length};
}

inline ALCurve integrate_arc(double c, const PolarState &start, const StopCondition &stop,
                             const ArcOptions &opt = {}) {
    detail::check_start(c, start);
    ode::Tolerances tol = opt.tol;
    for (int attempt = 0;; ++attempt) {
        const auto end = detail::locate_stop(c, start, stop, opt, tol);
        const double dir = opt.direction >= 0 ? 1.0 : -1.0;
        const detail::ALState y0{start.r, start.theta, start.phi, start.psi};
        const auto grid = ode::sample_uniform<4>(detail::al_rhs, 0.0, y0, dir * end.length, opt.samples, tol);

        ALCurve arc;
        arc.energy = c;
        arc.orientation = dir > 0 ? Orientation::forward : Orientation::backward;
        arc.samples.reserve(grid.size());
        arc.curvature.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto &y = grid[i];
            if (!(y[0] > 0)) throw IntegrationError("integrate_arc: trajectory reached the origin");
            const double s = end.length * double(i) / double(opt.samples);
            arc.samples.push_back({y[0], y[1], y[2], y[3], s});
            arc.curvature.push_back(0.5 * std::exp(0.25 * y[0] * y[0]) / c);
        }
        arc.psi_start = arc.front().psi;
        arc.psi_end = arc.back().psi;
        if (arc.max_first_integral_drift() <= opt.drift_tol) return arc;
        if (attempt >= opt.max_refinements)
            throw IntegrationError("integrate_arc: first-integral drift above tolerance after refinement");
        tol.rtol *= 0.1;
        tol.atol *= 0.1;
        tol.h_max *= 0.5;
    }
}

} // namespace shrinker_lab
