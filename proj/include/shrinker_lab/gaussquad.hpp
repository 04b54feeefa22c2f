#pragma once

// Gaussian-weighted integrals over networks.  Bounded curves use composite
// Simpson on their arclength grid; half-lines use closed forms in erfc for
// polynomial integrands and composite Gauss-Legendre panels otherwise.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "quadrature.hpp"

namespace shrinker_lab {

inline const double sqrt_4pi = std::sqrt(4.0 * pi);

// A half-line x(t) = p + t u, t >= 0, of a ray or one side of a line.
// curve_s(t) = s0 + sign * t is the curve's own arclength parameter.
struct HalfLine {
    Vec2 p, u;
    double s0 = 0;
    double sign = 1;
};

inline std::vector<HalfLine> half_lines(const NetworkCurve &c) {
    if (c.kind == CurveKind::ray) return {{c.origin, c.direction, 0.0, 1.0}};
    if (c.kind == CurveKind::line) return {{c.origin, c.direction, 0.0, 1.0}, {c.origin, -c.direction, 0.0, -1.0}};
    return {};
}

// M_n = int_0^inf t^n exp(-|q + t u|^2 / (4 t0)) dt for n = 0..nmax, with
// q = p - x0.  Shift w = t + b, b = <q,u>, and use
//   J_0 = sqrt(pi t0) erfc(b / (2 sqrt t0)),  J_1 = 2 t0 e^{-b^2/(4t0)},
//   J_k = 2 t0 (b^{k-1} e^{-b^2/(4t0)} + (k-1) J_{k-2}).
inline std::vector<double> ray_moments(Vec2 q, Vec2 u, double t0, int nmax) {
    const double b = dot(q, u);
    const double d2 = std::max(norm2(q) - b * b, 0.0);
    const double damp = std::exp(-d2 / (4 * t0));
    const double eb = std::exp(-b * b / (4 * t0));
    std::vector<double> J(std::size_t(nmax + 1));
    J[0] = std::sqrt(pi * t0) * std::erfc(b / (2 * std::sqrt(t0)));
    if (nmax >= 1) J[1] = 2 * t0 * eb;
    for (int k = 2; k <= nmax; ++k) J[std::size_t(k)] = 2 * t0 * (std::pow(b, k - 1) * eb + (k - 1) * J[std::size_t(k - 2)]);
    std::vector<double> M(std::size_t(nmax + 1), 0.0);
    for (int n = 0; n <= nmax; ++n) {
        double binom = 1, acc = 0;
        for (int k = n; k >= 0; --k) { // (w - b)^n = sum C(n,k) w^k (-b)^{n-k}
            acc += binom * std::pow(-b, n - k) * J[std::size_t(k)];
            binom = binom * k / double(n - k + 1);
        }
        M[std::size_t(n)] = damp * acc;
    }
    return M;
}

inline CurveSample half_line_point(const NetworkCurve &c, const HalfLine &hl, double t) {
    CurveSample p;
    p.x = hl.p + t * hl.u;
    p.T = c.direction;
    p.N = rot90(c.direction);
    p.phi = std::atan2(c.direction.y, c.direction.x);
    p.psi = polar_psi(p.x, p.phi);
    p.k = 0;
    p.s = hl.s0 + hl.sign * t;
    return p;
}

using PointFunction = std::function<double(const CurveSample &)>;

// Per-curve samples aligned with the geometry, plus for unbounded curves an
// evaluator along the infinite part.  tail_degree >= 0 declares the tail a
// polynomial of that degree in arclength (integrated in closed form);
// -1 requests adaptive panels.
struct WeightedIntegrand {
    std::vector<std::vector<double>> values;
    std::vector<PointFunction> tail;
    std::vector<int> tail_degree;

    static WeightedIntegrand from_function(const ShrinkerNetwork &net, const PointFunction &f, int degree = -1) {
        WeightedIntegrand w;
        for (const auto &c : net.curves) {
            std::vector<double> v;
            v.reserve(c.size());
            for (const auto &p : c.samples) v.push_back(f(p));
            w.values.push_back(std::move(v));
            w.tail.push_back(c.bounded() ? PointFunction{} : f);
            w.tail_degree.push_back(c.bounded() ? -1 : degree);
        }
        return w;
    }
};

struct Gauss {
    Vec2 x0{0, 0};
    double t0 = 1;
    double operator()(Vec2 x) const { return std::exp(-norm2(x - x0) / (4 * t0)); }
};

namespace detail {

inline const GaussRule &rule10() {
    static const GaussRule g = gauss_legendre(10);
    return g;
}

// Closed form for a polynomial tail of known degree: interpolate at
// t = 0..d, then check one extra node.
inline double tail_polynomial(const NetworkCurve &c, const HalfLine &hl, const PointFunction &f, int d, Gauss g) {
    const int n = d + 1;
    Eigen::MatrixXd V(n, n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) V(i, j) = std::pow(double(i), j);
        y(i) = f(half_line_point(c, hl, double(i)));
    }
    const Eigen::VectorXd coef = V.fullPivLu().solve(y);
    const double t_probe = double(d) + 0.5;
    double p_probe = 0, scale = 0;
    for (int j = 0; j < n; ++j) {
        p_probe += coef(j) * std::pow(t_probe, j);
        scale += std::abs(coef(j) * std::pow(t_probe, j));
    }
    if (std::abs(p_probe - f(half_line_point(c, hl, t_probe))) > 1e-9 * std::max(scale, 1.0))
        throw IntegrandError("bracket: ray tail is not a polynomial of the declared degree");
    const auto M = ray_moments(hl.p - g.x0, hl.u, g.t0, d);
    double total = 0;
    for (int j = 0; j < n; ++j) total += coef(j) * M[std::size_t(j)];
    return total;
}

inline double tail_adaptive(const NetworkCurve &c, const HalfLine &hl, const PointFunction &f, Gauss g) {
    const auto &gr = rule10();
    const double width = std::sqrt(g.t0);
    const double reach = 17.0 * 2.0 * std::sqrt(g.t0); // e^{-reach^2/(4 t0)} ~ 1e-125 relative
    double total = 0, quiet = 0;
    for (int panel = 0; panel < 4000; ++panel) {
        const double a = panel * width;
        double part = 0;
        for (std::size_t i = 0; i < gr.nodes.size(); ++i) {
            const double t = a + 0.5 * width * (1 + gr.nodes[i]);
            const auto p = half_line_point(c, hl, t);
            const double v = f(p) * g(p.x);
            if (!std::isfinite(v)) throw IntegrandError("bracket: non-finite ray integrand");
            part += gr.weights[i] * v;
        }
        part *= 0.5 * width;
        total += part;
        const double dist = norm(hl.p + (a + width) * hl.u - g.x0);
        quiet = std::abs(part) <= 1e-17 * std::max(std::abs(total), 1e-300) ? quiet + 1 : 0;
        if (dist > reach && quiet >= 2) return total;
        if (dist > reach && std::abs(part) <= 1e-300) return total;
    }
    throw IntegrandError("bracket: ray integrand does not decay (super-Gaussian growth)");
}

} // namespace detail

// int_Gamma f exp(-|x - x0|^2 / (4 t0)) dsigma, without normalization.
inline double weighted_integral(const ShrinkerNetwork &net, const WeightedIntegrand &f, Gauss g = {}) {
    if (f.values.size() != net.curves.size()) throw IntegrandError("integrand does not cover every curve");
    double total = 0;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        if (c.bounded()) {
            if (f.values[ci].size() != c.size()) throw IntegrandError("integrand samples misaligned with geometry");
            std::vector<double> v(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) v[i] = f.values[ci][i] * g(c.samples[i].x);
            total += simpson(v, c.spacing());
            continue;
        }
        if (!f.tail[ci]) throw IntegrandError("integrand has no evaluator on an unbounded curve");
        for (const auto &hl : half_lines(c))
            total += f.tail_degree[ci] >= 0 ? detail::tail_polynomial(c, hl, f.tail[ci], f.tail_degree[ci], g)
                                            : detail::tail_adaptive(c, hl, f.tail[ci], g);
    }
    return total;
}

// [[f]] at (0, 1).
inline double bracket(const ShrinkerNetwork &net, const WeightedIntegrand &f) {
    return weighted_integral(net, f) / sqrt_4pi;
}

inline double bracket(const ShrinkerNetwork &net, const PointFunction &f, int tail_degree = -1) {
    return bracket(net, WeightedIntegrand::from_function(net, f, tail_degree));
}

struct FValue {
    double value = 0;
    Vec2 grad_x0;
    double grad_t0 = 0;
};

// F and its gradient in (x0, t0).  Rays: moments of degree <= 2.
inline FValue F_with_gradient(const ShrinkerNetwork &net, Vec2 x0, double t0) {
    if (!(t0 > 0)) throw DomainError("F_value: t0 must be positive");
    const Gauss g{x0, t0};
    double I0 = 0, Ir2 = 0;
    Vec2 I1;
    for (const auto &c : net.curves) {
        if (c.bounded()) {
            const std::size_t n = c.size();
            std::vector<double> a(n), bx(n), by(n), d2(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 r = c.samples[i].x - x0;
                const double e = g(c.samples[i].x);
                a[i] = e;
                bx[i] = r.x * e;
                by[i] = r.y * e;
                d2[i] = norm2(r) * e;
            }
            const double h = c.spacing();
            I0 += simpson(a, h);
            I1 += Vec2{simpson(bx, h), simpson(by, h)};
            Ir2 += simpson(d2, h);
            continue;
        }
        for (const auto &hl : half_lines(c)) {
            const Vec2 q = hl.p - x0;
            const auto M = ray_moments(q, hl.u, t0, 2);
            I0 += M[0];
            I1 += M[0] * q + M[1] * hl.u;
            Ir2 += norm2(q) * M[0] + 2 * dot(q, hl.u) * M[1] + M[2];
        }
    }
    const double norm_c = 1.0 / std::sqrt(4 * pi * t0);
    FValue out;
    out.value = norm_c * I0;
    out.grad_x0 = norm_c / (2 * t0) * I1;
    out.grad_t0 = norm_c * (Ir2 / (4 * t0 * t0) - I0 / (2 * t0));
    return out;
}

inline double F_value(const ShrinkerNetwork &net, Vec2 x0, double t0) { return F_with_gradient(net, x0, t0).value; }

struct EntropySearch {
    std::array<double, 3> grid{-1.0, 0.0, 1.0}; // x0 start coordinates
    std::array<double, 3> t0_starts{0.5, 1.0, 2.0};
    double log_t0_min = std::log(0.01), log_t0_max = std::log(100.0);
    int max_iter = 300;
    double grad_tol = 1e-10;
};

struct EntropyResult {
    double lambda = 0;
    Vec2 x0;
    double t0 = 1;
    double stationarity = 0; // max(|dF/dx0|, |t0 dF/dt0|) at the maximizer
    bool converged = false;
    int starts = 0;
};

// Multi-start BFGS on z = (x0, log t0), maximizing F.
inline EntropyResult entropy(const ShrinkerNetwork &net, const EntropySearch &cfg = {}) {
    using V3 = Eigen::Vector3d;
    auto eval = [&](const V3 &z, V3 &grad) {
        const double t0 = std::exp(z(2));
        const auto fv = F_with_gradient(net, {z(0), z(1)}, t0);
        grad = V3(-fv.grad_x0.x, -fv.grad_x0.y, -t0 * fv.grad_t0);
        return -fv.value;
    };
    auto clamp = [&](V3 z) {
        z(2) = std::clamp(z(2), cfg.log_t0_min, cfg.log_t0_max);
        return z;
    };
    EntropyResult best;
    best.lambda = -std::numeric_limits<double>::infinity();
    for (double gx : cfg.grid)
        for (double gy : cfg.grid)
            for (double ts : cfg.t0_starts) {
                V3 z(gx, gy, std::log(ts)), g;
                double f = eval(z, g);
                Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
                bool conv = false;
                for (int it = 0; it < cfg.max_iter; ++it) {
                    if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) { conv = true; break; }
                    V3 dir = -H * g;
                    if (dir.dot(g) >= 0) { H.setIdentity(); dir = -g; }
                    double step = 1.0, fn = 0;
                    V3 zn, gn;
                    bool ok = false;
                    for (int ls = 0; ls < 60; ++ls) {
                        zn = clamp(z + step * dir);
                        fn = eval(zn, gn);
                        if (fn <= f + 1e-4 * (zn - z).dot(g)) { ok = true; break; }
                        step *= 0.5;
                    }
                    if (!ok) break;
                    const V3 s = zn - z, yv = gn - g;
                    const double sy = s.dot(yv);
                    if (sy > 1e-300) {
                        const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
                        const double rho = 1.0 / sy;
                        H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
                    }
                    z = zn; f = fn; g = gn;
                }
                if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) conv = true;
                ++best.starts;
                if (-f > best.lambda + 1e-13 || (std::abs(-f - best.lambda) <= 1e-13 && conv && !best.converged)) {
                    best.lambda = -f;
                    best.x0 = {z(0), z(1)};
                    best.t0 = std::exp(z(2));
                    best.stationarity = g.lpNorm<Eigen::Infinity>();
                    best.converged = conv;
                }
            }
    return best;
}

// Contribution of the constant 1 on a radial ray starting at radius a:
// int_a^inf (-1 + r^2/4) e^{-r^2/4} dr.
inline double ray_stability_integral(double a) {
    if (!(a >= 0)) throw DomainError("ray_stability_integral: start radius must be non-negative");
    return -0.5 * (std::sqrt(pi) * std::erfc(a / 2) - a * std::exp(-a * a / 4));
}

inline double ray_stability_threshold() {
    return brent([](double a) { return ray_stability_integral(a); }, 0.5, 2.0, 1e-14).x;
}

} // namespace shrinker_lab
