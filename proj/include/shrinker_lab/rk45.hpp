#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension of Hairer,
// Norsett & Wanner.  Used for adaptive tracing with event location and for
// resampling onto a uniform grid in the independent variable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "roots.hpp"

namespace shrinker_lab::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Tolerances {
    double rtol = 1e-12;
    double atol = 1e-13;
    double h_initial = 1e-3;
    double h_max = 0.05;
    std::size_t max_steps = 2'000'000;
};

namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
} // namespace dp

template <std::size_t N>
struct Step {
    double s0 = 0, h = 0;
    State<N> y0{}, y1{}, k1{}, k7{}; // k7 = f(s0 + h, y1), reused as next k1
    double err = 0;                  // scaled error norm
    std::array<State<N>, 5> rcont{};

    State<N> dense(double theta) const {
        const double t1 = 1.0 - theta;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = rcont[0][i] +
                   theta * (rcont[1][i] + t1 * (rcont[2][i] + theta * (rcont[3][i] + t1 * rcont[4][i])));
        return y;
    }
};

template <std::size_t N, class Rhs>
Step<N> dp_step(const Rhs &f, double s, const State<N> &y, const State<N> &k1, double h,
                const Tolerances &tol) {
    using namespace dp;
    State<N> k2, k3, k4, k5, k6, t;
    auto combo = [&](auto &&fill) {
        for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * fill(i);
        return t;
    };
    k2 = f(s + c2 * h, combo([&](std::size_t i) { return a21 * k1[i]; }));
    k3 = f(s + c3 * h, combo([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }));
    k4 = f(s + c4 * h, combo([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }));
    k5 = f(s + c5 * h, combo([&](std::size_t i) {
               return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
           }));
    k6 = f(s + h, combo([&](std::size_t i) {
               return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
           }));

    Step<N> st;
    st.s0 = s;
    st.h = h;
    st.y0 = y;
    st.k1 = k1;
    for (std::size_t i = 0; i < N; ++i)
        st.y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    st.k7 = f(s + h, st.y1);

    double acc = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * st.k7[i]);
        const double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(st.y1[i]));
        acc += (e / sc) * (e / sc);
    }
    st.err = std::sqrt(acc / double(N));

    for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = st.y1[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        st.rcont[0][i] = y[i];
        st.rcont[1][i] = ydiff;
        st.rcont[2][i] = bspl;
        st.rcont[3][i] = ydiff - h * st.k7[i] - bspl;
        st.rcont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * st.k7[i]);
    }
    return st;
}

// Scalar event g(s, y) = 0.  direction +1 / -1 restricts to increasing /
// decreasing crossings, 0 accepts both.  occurrence counts from 1.
template <std::size_t N>
struct Event {
    std::function<double(double, const State<N> &)> g;
    int direction = 0;
    int occurrence = 1;
    double g_tol = 1e-12;
};

template <std::size_t N>
struct TraceResult {
    double s = 0;
    State<N> y{};
    bool event_hit = false;
    std::size_t steps = 0;
};

namespace detail {
inline double grow_factor(double err) {
    if (err == 0.0) return 5.0;
    return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
}
} // namespace detail

// Adaptive trace from (s0, y0) in direction sign(length) until |s - s0| = |length|
// or until the requested event occurrence.  The event point is located on the
// dense output and then re-stepped exactly from the last accepted state.
template <std::size_t N, class Rhs>
TraceResult<N> trace(const Rhs &f, double s0, const State<N> &y0, double length,
                     const Event<N> *event, const Tolerances &tol) {
    const double dir = length >= 0 ? 1.0 : -1.0;
    const double s_end = s0 + length;
    double s = s0;
    State<N> y = y0, k1 = f(s0, y0);
    double h = dir * std::min(tol.h_initial, std::abs(length));
    int seen = 0;
    double g_prev = event ? event->g(s, y) : 0.0;
    TraceResult<N> out;

    while (dir * (s_end - s) > 0) {
        if (out.steps++ > tol.max_steps) throw IntegrationError("trace: step budget exhausted");
        if (dir * (s + h - s_end) > 0) h = s_end - s;
        if (std::abs(h) < 1e-14 * (1.0 + std::abs(s))) throw IntegrationError("trace: step size underflow");

        Step<N> st = dp_step<N>(f, s, y, k1, h, tol);
        for (double v : st.y1)
            if (!std::isfinite(v)) { st.err = 1e300; break; }
        if (st.err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(st.err, -0.2));
            continue;
        }

        if (event) {
            const double g_new = event->g(s + h, st.y1);
            const bool up = g_prev < 0 && g_new >= 0;
            const bool down = g_prev > 0 && g_new <= 0;
            const bool hit = event->direction > 0 ? up : event->direction < 0 ? down : (up || down);
            if (hit && ++seen == event->occurrence) {
                auto gd = [&](double th) { return event->g(s + th * h, st.dense(th)); };
                auto root = brent(gd, 0.0, 1.0, 1e-15, 0.1 * event->g_tol);
                const double hs = root.x * h;
                Step<N> fin = dp_step<N>(f, s, y, k1, hs, tol);
                out.s = s + hs;
                out.y = fin.y1;
                out.event_hit = true;
                return out;
            }
            g_prev = g_new;
        }
        s += h;
        y = st.y1;
        k1 = st.k7;
        const double hn = h * detail::grow_factor(st.err);
        h = dir * std::min(std::abs(hn), tol.h_max);
    }
    out.s = s;
    out.y = y;
    return out;
}

// Integrate over [s0, s0 + length] and report the state at n_intervals + 1
// uniformly spaced points.  Steps are clipped to land exactly on grid points.
template <std::size_t N, class Rhs>
std::vector<State<N>> sample_uniform(const Rhs &f, double s0, const State<N> &y0, double length,
                                     std::size_t n_intervals, const Tolerances &tol) {
    if (n_intervals < 1) throw DomainError("sample_uniform: need at least one interval");
    std::vector<State<N>> out;
    out.reserve(n_intervals + 1);
    out.push_back(y0);
    const double dir = length >= 0 ? 1.0 : -1.0;
    double s = s0;
    State<N> y = y0, k1 = f(s0, y0);
    double h = dir * std::min(tol.h_initial, std::abs(length) / double(n_intervals));
    std::size_t steps = 0;
    for (std::size_t j = 1; j <= n_intervals; ++j) {
        const double target = s0 + length * double(j) / double(n_intervals);
        while (dir * (target - s) > 0) {
            if (steps++ > tol.max_steps) throw IntegrationError("sample_uniform: step budget exhausted");
            double hh = h;
            const bool clipped = dir * (s + hh - target) >= 0;
            if (clipped) hh = target - s;
            Step<N> st = dp_step<N>(f, s, y, k1, hh, tol);
            if (st.err > 1.0) {
                h = hh * std::max(0.2, 0.9 * std::pow(st.err, -0.2));
                continue;
            }
            s = clipped ? target : s + hh;
            y = st.y1;
            k1 = st.k7;
            const double hn = hh * detail::grow_factor(st.err);
            // a clipped step says nothing about the natural step size
            if (!clipped || std::abs(hn) > std::abs(h)) h = dir * std::min(std::abs(hn), tol.h_max);
        }
        out.push_back(y);
    }
    return out;
}

// Fixed-step integration, for convergence-order measurements.
template <std::size_t N, class Rhs>
State<N> integrate_fixed(const Rhs &f, double s0, const State<N> &y0, double length, std::size_t n_steps) {
    Tolerances loose;
    const double h = length / double(n_steps);
    double s = s0;
    State<N> y = y0, k1 = f(s0, y0);
    for (std::size_t i = 0; i < n_steps; ++i) {
        Step<N> st = dp_step<N>(f, s, y, k1, h, loose);
        s += h;
        y = st.y1;
        k1 = st.k7;
    }
    return y;
}

} // namespace shrinker_lab::ode
