#pragma once

// Drift Laplacian, stability operator L = Lap - <x,grad>/2 + k^2 + 1/2, the
// bilinear form [v,w] with its junction term, and the instability
// certificates.  Derivatives are second-order finite differences in
// arclength on the uniform grid of each curve.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gaussquad.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace shrinker_lab {

// ---- finite differences ----

namespace detail {
inline void require_resolution(const NetworkCurve &c, const std::vector<double> &f) {
    if (f.size() != c.size()) throw ResolutionError("samples not aligned with the curve grid");
    if (f.size() < 5) throw ResolutionError("at least 5 samples are required");
}
} // namespace detail

// 5-point centered stencils (fourth order) in the interior, periodic on
// closed curves whose last sample repeats the first; 3-point centered next
// to the ends and one-sided second-order stencils at the ends.
inline std::vector<double> arclength_derivative(const NetworkCurve &c, const std::vector<double> &f) {
    detail::require_resolution(c, f);
    const std::size_t n = f.size();
    const double h = c.spacing();
    std::vector<double> d(n);
    if (c.closed) {
        const std::size_t m = n - 1;
        auto at = [&](std::size_t i, long k) { return f[std::size_t((long(i) + k + 2 * long(m)) % long(m))]; };
        for (std::size_t i = 0; i < m; ++i) d[i] = (at(i, -2) - 8 * at(i, -1) + 8 * at(i, 1) - at(i, 2)) / (12 * h);
        d[m] = d[0];
        return d;
    }
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) / (12 * h);
    d[1] = (f[2] - f[0]) / (2 * h);
    d[n - 2] = (f[n - 1] - f[n - 3]) / (2 * h);
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    d[n - 1] = (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h);
    return d;
}

inline std::vector<double> arclength_second_derivative(const NetworkCurve &c, const std::vector<double> &f) {
    detail::require_resolution(c, f);
    const std::size_t n = f.size();
    const double h2 = c.spacing() * c.spacing();
    std::vector<double> d(n);
    if (c.closed) {
        const std::size_t m = n - 1;
        auto at = [&](std::size_t i, long k) { return f[std::size_t((long(i) + k + 2 * long(m)) % long(m))]; };
        for (std::size_t i = 0; i < m; ++i)
            d[i] = (-at(i, -2) + 16 * at(i, -1) - 30 * f[i] + 16 * at(i, 1) - at(i, 2)) / (12 * h2);
        d[m] = d[0];
        return d;
    }
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = (-f[i - 2] + 16 * f[i - 1] - 30 * f[i] + 16 * f[i + 1] - f[i + 2]) / (12 * h2);
    d[1] = (f[2] - 2 * f[1] + f[0]) / h2;
    d[n - 2] = (f[n - 1] - 2 * f[n - 2] + f[n - 3]) / h2;
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2;
    d[n - 1] = (2 * f[n - 1] - 5 * f[n - 2] + 4 * f[n - 3] - f[n - 4]) / h2;
    return d;
}

inline std::vector<double> drift_laplacian(const NetworkCurve &c, const std::vector<double> &f) {
    const auto d1 = arclength_derivative(c, f);
    const auto d2 = arclength_second_derivative(c, f);
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = d2[i] - 0.5 * dot(c.samples[i].x, c.samples[i].T) * d1[i];
    return out;
}

inline std::vector<double> stability_operator(const NetworkCurve &c, const std::vector<double> &f) {
    auto out = drift_laplacian(c, f);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double k = c.samples[i].k;
        out[i] += (k * k + 0.5) * f[i];
    }
    return out;
}

// ---- variation functions ----

// Data on one curve: value + a_k k + <a_n, N>, or explicit samples.
struct CurveRep {
    enum class Kind { constant, geometric, samples } kind = Kind::constant;
    double value = 0;
    double a_k = 0;
    Vec2 a_n;
    std::vector<double> data;

    static CurveRep constant(double v) { return {Kind::constant, v, 0, {}, {}}; }
    static CurveRep geometric(double ak, Vec2 an) { return {Kind::geometric, 0, ak, an, {}}; }
    static CurveRep sampled(std::vector<double> d) { return {Kind::samples, 0, 0, {}, std::move(d)}; }

    double at(const CurveSample &p, std::size_t i) const {
        if (kind == Kind::samples) return data.at(i);
        return value + a_k * p.k + dot(a_n, p.N);
    }
};

struct VariationFunction {
    std::vector<CurveRep> curves;
    Vec2 y;
    double h = 0;

    static VariationFunction zero(const ShrinkerNetwork &net) {
        VariationFunction f;
        f.curves.assign(net.curves.size(), CurveRep::constant(0));
        return f;
    }
    static VariationFunction constants(const std::vector<double> &v) {
        VariationFunction f;
        for (double x : v) f.curves.push_back(CurveRep::constant(x));
        return f;
    }
    // a_k k + <a_n, N> on every curve
    static VariationFunction geometric(const ShrinkerNetwork &net, double a_k, Vec2 a_n) {
        VariationFunction f;
        f.curves.assign(net.curves.size(), CurveRep::geometric(a_k, a_n));
        return f;
    }
};

inline std::vector<double> values_on(const ShrinkerNetwork &net, const VariationFunction &f, std::size_t ci) {
    const auto &c = net.curves.at(ci);
    const auto &rep = f.curves.at(ci);
    if (rep.kind == CurveRep::Kind::samples && rep.data.size() != c.size())
        throw ResolutionError("variation samples not aligned with the curve grid");
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = rep.at(c.samples[i], i);
    return v;
}

inline double end_value(const ShrinkerNetwork &net, const VariationFunction &f, const Incidence &inc) {
    const auto &c = net.curves[std::size_t(inc.curve)];
    const std::size_t i = inc.end == End::start ? 0 : c.size() - 1;
    return f.curves.at(std::size_t(inc.curve)).at(c.samples[i], i);
}

// Unbounded curves only carry data that is constant along them (k = 0 and
// N is constant on a straight line).
inline double ray_value(const ShrinkerNetwork &net, const VariationFunction &f, std::size_t ci) {
    const auto &rep = f.curves.at(ci);
    if (rep.kind == CurveRep::Kind::samples)
        throw IntegrandError("data on an unbounded curve must be constant or geometric");
    return rep.at(net.curves[ci].samples.front(), 0);
}

inline double admissibility_defect(const ShrinkerNetwork &net, const VariationFunction &f) {
    double d = 0;
    for (const auto &j : net.junctions) {
        double s = 0;
        for (const auto &inc : j.incident) s += inc.eta * end_value(net, f, inc);
        d = std::max(d, std::abs(s));
    }
    return d;
}

inline void require_admissible(const ShrinkerNetwork &net, const VariationFunction &f, double tol = 1e-10) {
    if (f.curves.size() != net.curves.size()) throw AdmissibilityError("variation does not cover every curve");
    if (admissibility_defect(net, f) > tol) throw AdmissibilityError("sum of eta * v at a junction is nonzero");
}

// ---- junction derivatives ----

// One-sided derivative along the inward junction tangent from the five
// nearest samples.
inline double inward_derivative(const NetworkCurve &c, const std::vector<double> &f, End e) {
    if (f.size() < 5) throw ResolutionError("at least 5 samples are required");
    const double h = c.spacing();
    const std::size_t n = f.size();
    auto g = [&](std::size_t k) { return e == End::start ? f[k] : f[n - 1 - k]; };
    return (-25 * g(0) + 48 * g(1) - 36 * g(2) + 16 * g(3) - 3 * g(4)) / (12 * h);
}

// d/dT (v exp(-|x|^2/4)) at a curve end, T pointing into the curve.
inline double inward_flux(const NetworkCurve &c, const std::vector<double> &v, End e) {
    const auto &p = c.at(e);
    const Vec2 T = e == End::start ? p.T : -p.T;
    const double vv = e == End::start ? v.front() : v.back();
    return (inward_derivative(c, v, e) - 0.5 * vv * dot(p.x, T)) * std::exp(-0.25 * norm2(p.x));
}

struct JunctionFlux {
    double sum_defect = 0;
    double spread = 0;
    double common = 0;
    std::vector<double> flux; // eta * d/dT (v e) per incident curve
};

struct BoundaryReport {
    std::vector<JunctionFlux> junctions;
    double max_sum_defect = 0, max_spread = 0;
    bool passed(double tol = 1e-4) const { return max_sum_defect <= tol && max_spread <= tol; }
};

inline BoundaryReport eigen_boundary_check(const ShrinkerNetwork &net, const VariationFunction &f) {
    BoundaryReport rep;
    std::vector<std::vector<double>> vals(net.curves.size());
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) vals[ci] = values_on(net, f, ci);
    for (const auto &j : net.junctions) {
        JunctionFlux jf;
        double s = 0;
        for (const auto &inc : j.incident) {
            const auto &c = net.curves[std::size_t(inc.curve)];
            const auto &v = vals[std::size_t(inc.curve)];
            s += inc.eta * (inc.end == End::start ? v.front() : v.back());
            jf.flux.push_back(inc.eta * inward_flux(c, v, inc.end));
        }
        jf.sum_defect = std::abs(s);
        const auto [lo, hi] = std::minmax_element(jf.flux.begin(), jf.flux.end());
        jf.spread = *hi - *lo;
        for (double x : jf.flux) jf.common += x / double(jf.flux.size());
        rep.max_sum_defect = std::max(rep.max_sum_defect, jf.sum_defect);
        rep.max_spread = std::max(rep.max_spread, jf.spread);
        rep.junctions.push_back(jf);
    }
    return rep;
}

struct EigenResiduals {
    double k = 0;  // max |Lk - k|
    double e1 = 0; // max |L<e1,N> - <e1,N>/2|
    double e2 = 0;
    double max() const { return std::max({k, e1, e2}); }
};

inline EigenResiduals eigen_residuals(const ShrinkerNetwork &net) {
    EigenResiduals r;
    for (const auto &c : net.curves) {
        std::vector<double> k(c.size()), n1(c.size()), n2(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            k[i] = c.samples[i].k;
            n1[i] = c.samples[i].N.x;
            n2[i] = c.samples[i].N.y;
        }
        const auto Lk = stability_operator(c, k), L1 = stability_operator(c, n1), L2 = stability_operator(c, n2);
        for (std::size_t i = 0; i < c.size(); ++i) {
            r.k = std::max(r.k, std::abs(Lk[i] - k[i]));
            r.e1 = std::max(r.e1, std::abs(L1[i] - 0.5 * n1[i]));
            r.e2 = std::max(r.e2, std::abs(L2[i] - 0.5 * n2[i]));
        }
    }
    return r;
}

// ---- lifting normal data to a vector field ----

struct LiftedField {
    std::vector<std::vector<Vec2>> V; // per curve, per sample
};

inline double smoothstep5(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (10 + t * (-15 + 6 * t));
}

inline LiftedField lift_normal_data(const ShrinkerNetwork &net, const VariationFunction &v, double width) {
    if (!(width > 0)) throw DomainError("lift_normal_data: cutoff width must be positive");
    if (v.curves.size() != net.curves.size()) throw AdmissibilityError("variation does not cover every curve");
    for (const auto &j : net.junctions)
        if (j.incident.size() != 3) throw TopologyError("lift_normal_data: junction is not triple");
    double scale = 1;
    std::vector<std::vector<double>> vals(net.curves.size());
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        vals[ci] = values_on(net, v, ci);
        for (double x : vals[ci]) scale = std::max(scale, std::abs(x));
    }
    if (admissibility_defect(net, v) > 1e-10 * scale) throw AdmissibilityError("lift_normal_data: data not admissible");

    LiftedField out;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        out.V.emplace_back(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) out.V[ci][i] = vals[ci][i] * c.samples[i].N;
    }
    for (const auto &j : net.junctions) {
        // counter-clockwise order of the incident tangents
        std::array<std::size_t, 3> ord{0, 1, 2};
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            const Vec2 ta = j.incident[a].tangent, tb = j.incident[b].tangent;
            return std::atan2(ta.y, ta.x) < std::atan2(tb.y, tb.x);
        });
        for (std::size_t q = 0; q < 3; ++q) {
            const auto &inc = j.incident[ord[q]];
            const auto &n1 = j.incident[ord[(q + 1) % 3]];
            const auto &n2 = j.incident[ord[(q + 2) % 3]];
            const double coef = (-n1.eta * end_value(net, v, n1) + n2.eta * end_value(net, v, n2)) / std::sqrt(3.0);
            const auto &c = net.curves[std::size_t(inc.curve)];
            const double s_end = inc.end == End::start ? c.samples.front().s : c.samples.back().s;
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double d = std::abs(c.samples[i].s - s_end);
                if (d >= width) continue;
                const Vec2 t_in = inc.end == End::start ? c.samples[i].T : -c.samples[i].T;
                out.V[std::size_t(inc.curve)][i] += coef * (1 - smoothstep5(d / width)) * t_in;
            }
        }
    }
    return out;
}

// Max distance between the one-sided limits of V at each junction.
inline double junction_continuity_defect(const ShrinkerNetwork &net, const LiftedField &F) {
    double d = 0;
    for (const auto &j : net.junctions)
        for (std::size_t a = 0; a < j.incident.size(); ++a)
            for (std::size_t b = a + 1; b < j.incident.size(); ++b) {
                auto lim = [&](const Incidence &inc) {
                    const auto &V = F.V[std::size_t(inc.curve)];
                    return inc.end == End::start ? V.front() : V.back();
                };
                d = std::max(d, norm(lim(j.incident[a]) - lim(j.incident[b])));
            }
    return d;
}

// ---- bilinear form ----

// Gradient-form contribution of one curve, before the 1/sqrt(4pi):
//   int (v'w' - (k^2 + 1/2) v w) e + 1/2 sum_ends v w <O, T> e(O)
inline double curve_contribution(const ShrinkerNetwork &net, const VariationFunction &v, const VariationFunction &w,
                                 std::size_t ci) {
    const auto &c = net.curves.at(ci);
    auto junction_term = [&](double vv, double ww, End e) {
        const auto &p = c.at(e);
        const Vec2 T = e == End::start ? p.T : -p.T;
        return 0.5 * vv * ww * dot(p.x, T) * std::exp(-0.25 * norm2(p.x));
    };
    if (!c.bounded()) {
        const double a = ray_value(net, v, ci), b = ray_value(net, w, ci);
        double total = 0;
        for (const auto &hl : half_lines(c)) total += -0.5 * a * b * ray_moments(hl.p, hl.u, 1.0, 0)[0];
        if (c.kind == CurveKind::ray && c.endpoints[0] != open_end) total += junction_term(a, b, End::start);
        return total;
    }
    const auto fv = values_on(net, v, ci), fw = values_on(net, w, ci);
    const auto dv = arclength_derivative(c, fv), dw = arclength_derivative(c, fw);
    std::vector<double> g(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto &p = c.samples[i];
        g[i] = (dv[i] * dw[i] - (p.k * p.k + 0.5) * fv[i] * fw[i]) * std::exp(-0.25 * norm2(p.x));
    }
    double total = simpson(g, c.spacing());
    if (!c.closed) {
        total += junction_term(fv.front(), fw.front(), End::start);
        total += junction_term(fv.back(), fw.back(), End::end);
    }
    return total;
}

// Divergence-form contribution of one curve, before the 1/sqrt(4pi):
//   -int v (L w) e - sum_ends v d/dT (w e)
inline double curve_contribution_divergence(const ShrinkerNetwork &net, const VariationFunction &v,
                                            const VariationFunction &w, std::size_t ci) {
    const auto &c = net.curves.at(ci);
    if (!c.bounded()) {
        const double a = ray_value(net, v, ci), b = ray_value(net, w, ci);
        double total = 0;
        for (const auto &hl : half_lines(c)) total += -a * 0.5 * b * ray_moments(hl.p, hl.u, 1.0, 0)[0];
        if (c.kind == CurveKind::ray && c.endpoints[0] != open_end) {
            const auto &p = c.at(End::start);
            total -= a * (-0.5 * b * dot(p.x, p.T)) * std::exp(-0.25 * norm2(p.x));
        }
        return total;
    }
    const auto fv = values_on(net, v, ci), fw = values_on(net, w, ci);
    const auto Lw = stability_operator(c, fw);
    std::vector<double> g(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) g[i] = -fv[i] * Lw[i] * std::exp(-0.25 * norm2(c.samples[i].x));
    double total = simpson(g, c.spacing());
    if (!c.closed) {
        total -= fv.front() * inward_flux(c, fw, End::start);
        total -= fv.back() * inward_flux(c, fw, End::end);
    }
    return total;
}

// [v, w] on admissible data.
inline double bilinear_form(const ShrinkerNetwork &net, const VariationFunction &v, const VariationFunction &w) {
    require_admissible(net, v);
    require_admissible(net, w);
    double total = 0;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) total += curve_contribution(net, v, w, ci);
    return total / sqrt_4pi;
}

inline double bilinear_form_divergence(const ShrinkerNetwork &net, const VariationFunction &v,
                                       const VariationFunction &w) {
    require_admissible(net, v);
    require_admissible(net, w);
    double total = 0;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) total += curve_contribution_divergence(net, v, w, ci);
    return total / sqrt_4pi;
}

// [[ f ]] for a product of variation data and a geometric factor; on rays
// the factor must be polynomial of the given degree in arclength.
inline double bracket_product(const ShrinkerNetwork &net, const VariationFunction *v, const VariationFunction *w,
                              const PointFunction &g, int degree) {
    WeightedIntegrand I;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        std::vector<double> fv = v ? values_on(net, *v, ci) : std::vector<double>(c.size(), 1.0);
        std::vector<double> fw = w ? values_on(net, *w, ci) : std::vector<double>(c.size(), 1.0);
        std::vector<double> vals(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) vals[i] = fv[i] * fw[i] * g(c.samples[i]);
        I.values.push_back(std::move(vals));
        if (c.bounded()) {
            I.tail.emplace_back();
            I.tail_degree.push_back(-1);
        } else {
            const double a = v ? ray_value(net, *v, ci) : 1.0, b = w ? ray_value(net, *w, ci) : 1.0;
            I.tail.push_back([a, b, g](const CurveSample &p) { return a * b * g(p); });
            I.tail_degree.push_back(degree);
        }
    }
    return bracket(net, I);
}

inline double inner_product(const ShrinkerNetwork &net, const VariationFunction &v, const VariationFunction &w) {
    return bracket_product(net, &v, &w, [](const CurveSample &) { return 1.0; }, 0);
}

// Full second variation of F at (0,1) in the directions (v, y, h), (w, z, l).
inline double second_variation(const ShrinkerNetwork &net, const VariationFunction &v, const VariationFunction &w) {
    const Vec2 y = v.y, z = w.y;
    const double h = v.h, l = w.h;
    double q = bilinear_form(net, v, w);
    q += bracket_product(net, &v, nullptr, [z](const CurveSample &p) { return 0.5 * dot(z, p.N); }, 0);
    q += bracket_product(net, &w, nullptr, [y](const CurveSample &p) { return 0.5 * dot(y, p.N); }, 0);
    q -= l * bracket_product(net, &v, nullptr, [](const CurveSample &p) { return p.k; }, 0);
    q -= h * bracket_product(net, &w, nullptr, [](const CurveSample &p) { return p.k; }, 0);
    q -= h * l * bracket_product(net, nullptr, nullptr, [](const CurveSample &p) { return p.k * p.k; }, 0);
    q += bracket_product(net, nullptr, nullptr,
                         [y, z](const CurveSample &p) { return -0.5 * dot(y, z) + 0.25 * dot(p.x, y) * dot(p.x, z); }, 2);
    return q;
}

// ---- certificates ----

struct FishRocketCoefficients {
    double A_closed = 0, A_quadrature = 0;
    double B_closed = 0, B_quadrature = 0;
    double C_quadrature = 0;           // -1/2 int f2^2 e - sum f2 d/dT (f2 e) over the ends of gamma_1
    double C_junction_term = 0;        // the endpoint sum alone (with its minus sign)
    double C_upper_junction = 0;       // rocket: part of that sum at the upper junction
    double C_gradient_form = 0;        // same quantity from the gradient form
    double C_bound_printed = 0;        // -cos(h1/2 + pi/6) r_in e^{-r_in^2/4} sin(h1/2)
    double discriminant = 0;           // B^2 - A C (quadrature)
    double bound_discriminant = 0;     // B^2 - A C_bound_printed
    double delta_phi = 0, c = 0, r_in = 0, h1 = 0;
};

struct QuadraticFormReport {
    std::string network;
    std::string basis_description;
    std::vector<VariationFunction> basis; // orthonormal in [[f g]]
    Eigen::MatrixXd gram;
    Eigen::VectorXd gram_eigenvalues;
    double gram_symmetry_defect = 0;
    VariationFunction f_tilde;             // [[f_tilde^2]] = 1
    double f_tilde_form = 0;               // [f_tilde, f_tilde]
    std::array<double, 3> orthogonality{}; // [[f k]], [[f <N,e1>]], [[f <N,e2>]]
    std::optional<FishRocketCoefficients> coefficients;
    bool certified = false;
};


namespace detail {

inline VariationFunction combine(const std::vector<VariationFunction> &gens, const Eigen::VectorXd &a) {
    VariationFunction f;
    f.curves.resize(gens.front().curves.size());
    for (std::size_t ci = 0; ci < f.curves.size(); ++ci) {
        auto &rep = f.curves[ci];
        for (std::size_t g = 0; g < gens.size(); ++g) {
            const auto &r = gens[g].curves.at(ci);
            if (r.kind == CurveRep::Kind::samples) throw DomainError("combine: sampled generators are not supported");
            if (r.kind == CurveRep::Kind::geometric) rep.kind = CurveRep::Kind::geometric;
            const double c = a(Eigen::Index(g));
            rep.value += c * r.value;
            rep.a_k += c * r.a_k;
            rep.a_n += c * r.a_n;
        }
    }
    return f;
}

inline std::array<double, 3> orthogonality(const ShrinkerNetwork &net, const VariationFunction &f) {
    return {bracket_product(net, &f, nullptr, [](const CurveSample &p) { return p.k; }, 0),
            bracket_product(net, &f, nullptr, [](const CurveSample &p) { return p.N.x; }, 0),
            bracket_product(net, &f, nullptr, [](const CurveSample &p) { return p.N.y; }, 0)};
}

// Certificate on the admissible part of span(gens): Gram matrix of [.,.] in
// an [[.]]-orthonormal basis and the most unstable direction orthogonal to
// k, <N,e1>, <N,e2>.
inline QuadraticFormReport certify_span(const ShrinkerNetwork &net, const std::vector<VariationFunction> &gens,
                                        std::size_t expected_dim, std::string description) {
    QuadraticFormReport rep;
    rep.network = net.name;
    rep.basis_description = std::move(description);
    const auto G = Eigen::Index(gens.size());

    Eigen::MatrixXd K(Eigen::Index(net.junctions.size()), G);
    for (Eigen::Index g = 0; g < G; ++g)
        for (std::size_t j = 0; j < net.junctions.size(); ++j) {
            double s = 0;
            for (const auto &inc : net.junctions[j].incident) s += inc.eta * end_value(net, gens[std::size_t(g)], inc);
            K(Eigen::Index(j), g) = s;
        }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    lu.setThreshold(1e-9);
    const Eigen::MatrixXd ker = lu.kernel();
    if (std::size_t(ker.cols()) != expected_dim)
        throw CertificateError(net.name + ": admissible space has dimension " + std::to_string(ker.cols()) +
                               ", expected " + std::to_string(expected_dim));

    // [[f g]]-orthonormal coefficients
    Eigen::MatrixXd M(G, G);
    for (Eigen::Index a = 0; a < G; ++a)
        for (Eigen::Index b = a; b < G; ++b)
            M(a, b) = M(b, a) = inner_product(net, gens[std::size_t(a)], gens[std::size_t(b)]);
    const Eigen::MatrixXd S = ker.transpose() * M * ker;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw CertificateError(net.name + ": basis is degenerate in the weighted norm");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd B = ker * L.transpose().triangularView<Eigen::Upper>().solve(
                                        Eigen::MatrixXd::Identity(ker.cols(), ker.cols()));
    const auto d = B.cols();
    for (Eigen::Index a = 0; a < d; ++a) rep.basis.push_back(combine(gens, B.col(a)));

    rep.gram.resize(d, d);
    parallel_for(std::size_t(d * d), [&](std::size_t idx) {
        const auto a = Eigen::Index(idx) / d, b = Eigen::Index(idx) % d;
        rep.gram(a, b) = bilinear_form(net, rep.basis[std::size_t(a)], rep.basis[std::size_t(b)]);
    });
    rep.gram_symmetry_defect = (rep.gram - rep.gram.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd Gs = 0.5 * (rep.gram + rep.gram.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gs);
    rep.gram_eigenvalues = eig.eigenvalues();
    if (!(rep.gram_eigenvalues.maxCoeff() < 0))
        throw CertificateError(net.name + ": form is not negative definite on the basis (max eigenvalue " +
                               std::to_string(rep.gram_eigenvalues.maxCoeff()) + ")");

    Eigen::MatrixXd P(3, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        const auto o = orthogonality(net, rep.basis[std::size_t(a)]);
        for (int m = 0; m < 3; ++m) P(m, a) = o[std::size_t(m)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullV);
    const auto &sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-9 * std::max(1.0, sv(0))) ++rank;
    if (rank >= d) throw CertificateError(net.name + ": no direction orthogonal to k, <N,e1>, <N,e2>");
    const Eigen::MatrixXd Z = svd.matrixV().rightCols(d - rank);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sub(Z.transpose() * Gs * Z);
    Eigen::VectorXd coef = B * (Z * sub.eigenvectors().col(0));
    Eigen::Index big = 0;
    coef.cwiseAbs().maxCoeff(&big);
    if (coef(big) < 0) coef = -coef;
    rep.f_tilde = combine(gens, coef);
    const double norm2_f = inner_product(net, rep.f_tilde, rep.f_tilde);
    rep.f_tilde = combine(gens, coef / std::sqrt(norm2_f));
    rep.f_tilde_form = bilinear_form(net, rep.f_tilde, rep.f_tilde);
    rep.orthogonality = orthogonality(net, rep.f_tilde);
    const double worst_orth = std::max({std::abs(rep.orthogonality[0]), std::abs(rep.orthogonality[1]),
                                        std::abs(rep.orthogonality[2])});
    rep.certified = rep.f_tilde_form < 0 && worst_orth <= 1e-8 && rep.gram_symmetry_defect <= 1e-10;
    return rep;
}

inline std::vector<std::size_t> curves_of_kind(const ShrinkerNetwork &net, bool bounded) {
    std::vector<std::size_t> out;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci)
        if (net.curves[ci].bounded() == bounded) out.push_back(ci);
    return out;
}

} // namespace detail

// Per-curve constants on an n-ray star.
inline QuadraticFormReport star_certificate(const ShrinkerNetwork &net) {
    if (net.name != "4_ray_star" && net.name != "5_ray_star")
        throw DomainError("star_certificate: expected 4_ray_star or 5_ray_star, got '" + net.name + "'");
    const std::size_t n = net.junctions.size();
    if (net.curves.size() != 2 * n) throw TopologyError("star_certificate: expected n arcs and n rays");
    std::vector<VariationFunction> gens;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        auto g = VariationFunction::zero(net);
        g.curves[ci] = CurveRep::constant(1);
        gens.push_back(g);
    }
    return detail::certify_span(net, gens, n, "piecewise constants, one per curve");
}

// Fish and rocket: a1 k + a2 <N,e2> on the upper arcs (and the rocket's
// upward ray), a3 on the lower arc, a4 on the two lower rays (mirror
// symmetric, hence of opposite sign in the N = R T convention).
inline QuadraticFormReport fish_rocket_certificate(const ShrinkerNetwork &net) {
    const bool rocket = net.name == "rocket";
    if (!rocket && net.name != "fish")
        throw DomainError("fish_rocket_certificate: expected fish or rocket, got '" + net.name + "'");
    if (!net.energy || !net.h1) throw DomainError("fish_rocket_certificate: network lacks its energy data");
    if (net.curves.size() != (rocket ? 6u : 4u)) throw TopologyError("fish_rocket_certificate: unexpected layout");
    const std::vector<std::size_t> top = rocket ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{0};
    const std::size_t bottom = rocket ? 2 : 1;
    const std::vector<std::size_t> low_rays = rocket ? std::vector<std::size_t>{3, 4} : std::vector<std::size_t>{2, 3};

    std::vector<VariationFunction> gens(4, VariationFunction::zero(net));
    for (std::size_t ci : top) {
        gens[0].curves[ci] = CurveRep::geometric(1, {});
        gens[1].curves[ci] = CurveRep::geometric(0, {0, 1});
    }
    if (rocket) gens[1].curves[5] = CurveRep::geometric(0, {0, 1});
    gens[2].curves[bottom] = CurveRep::constant(1);
    // both lower rays leave their junctions, so mirror-symmetric data
    // changes sign between them
    gens[3].curves[low_rays[0]] = CurveRep::constant(1);
    gens[3].curves[low_rays[1]] = CurveRep::constant(-1);

    auto rep = detail::certify_span(net, gens, 3,
                                    "a1 k + a2 <N,e2> on the upper arcs, a3 on the lower arc, +-a4 on the lower rays");

    FishRocketCoefficients co;
    co.c = *net.energy;
    co.h1 = *net.h1;
    co.r_in = norm(net.curves[top.front()].samples.front().x);
    co.delta_phi = (rocket ? 4 * pi / 3 : 5 * pi / 3) - co.h1;
    co.A_closed = -co.delta_phi / (2 * co.c);
    co.B_closed = co.r_in * std::sin(co.h1 / 2) / co.c;
    for (std::size_t ci : top) {
        const auto &c = net.curves[ci];
        std::vector<double> kk(c.size()), kf(c.size()), ff(c.size()), f2(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto &p = c.samples[i];
            const double e = std::exp(-0.25 * norm2(p.x));
            f2[i] = p.N.y;
            kk[i] = p.k * p.k * e;
            kf[i] = p.k * p.N.y * e;
            ff[i] = p.N.y * p.N.y * e;
        }
        co.A_quadrature -= simpson(kk, c.spacing());
        co.B_quadrature -= simpson(kf, c.spacing());
        co.C_quadrature -= 0.5 * simpson(ff, c.spacing());
        for (End e : {End::start, End::end}) {
            const double term = -(e == End::start ? f2.front() : f2.back()) * inward_flux(c, f2, e);
            co.C_junction_term += term;
            if (c.at(e).x.y > 0) co.C_upper_junction += term;
        }
        co.C_gradient_form += curve_contribution(net, gens[1], gens[1], ci);
    }
    co.C_quadrature += co.C_junction_term;
    co.C_bound_printed = -std::cos(co.h1 / 2 + pi / 6) * co.r_in * std::exp(-0.25 * co.r_in * co.r_in) *
                         std::sin(co.h1 / 2);
    co.discriminant = co.B_quadrature * co.B_quadrature - co.A_quadrature * co.C_quadrature;
    co.bound_discriminant = co.B_closed * co.B_closed - co.A_closed * co.C_bound_printed;
    rep.coefficients = co;
    rep.certified = rep.certified && co.A_quadrature < 0 && co.discriminant < 0;
    return rep;
}

// ---- explicit cutoff of f_tilde on the rays ----

struct CutoffGridPoint {
    Vec2 y;
    double h = 0;
    double Q = 0;
};

struct CutoffReport {
    double r0 = 0;
    double r0_start = 0;
    double tail_bound = 0;  // sum a^2 (4 e^{-r0^2/4} + 10 sqrt(pi) erfc(r0/2))
    double margin = 0;      // |[f,f]|/2 - tail_bound
    double form_uncut = 0;  // [f_tilde, f_tilde]
    double form_cut = 0;    // [f_cut, f_cut]
    Vec2 b;                 // [[f_cut <N,e_i>]]
    double ck = 0;          // [[f_cut k]]
    double k2 = 0;          // [[k^2]]
    Eigen::Matrix2d M;      // [[x_i x_j/4 - delta_ij/2]]
    std::vector<CutoffGridPoint> grid;
    double grid_max = 0;
    bool certified = false;
};

namespace detail {

// Ray integrals of the cut data a chi(|x|); chi = 1 - S((|x| - r0)/2).
struct RayCut {
    double form = 0;     // int (f'^2 - f^2/2) e + f(0)^2 <p,u> e(p)/2
    double weight = 0;   // int f e
};

inline RayCut cut_on_ray(const HalfLine &hl, double a, double r0, std::size_t n = 8192) {
    const double T = r0 + 2 + norm(hl.p);
    const double h = T / double(n);
    std::vector<double> g(n + 1), w(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = h * double(i);
        const Vec2 x = hl.p + t * hl.u;
        const double r = norm(x), tau = (r - r0) / 2;
        const double e = std::exp(-0.25 * r * r);
        const double f = a * (1 - smoothstep5(tau));
        const double ds = (tau > 0 && tau < 1) ? 30 * tau * tau * (1 - tau) * (1 - tau) : 0;
        const double fp = -a * 0.5 * ds * (r > 0 ? dot(x, hl.u) / r : 0);
        g[i] = (fp * fp - 0.5 * f * f) * e;
        w[i] = f * e;
    }
    RayCut out;
    out.form = simpson(g, h) + 0.5 * a * a * dot(hl.p, hl.u) * std::exp(-0.25 * norm2(hl.p));
    out.weight = simpson(w, h);
    return out;
}

} // namespace detail

inline CutoffReport cutoff_certificate(const ShrinkerNetwork &net, const QuadraticFormReport &q) {
    if (!(q.f_tilde_form < 0)) throw CertificateError("cutoff_certificate: form of f_tilde is not negative");
    CutoffReport rep;
    rep.form_uncut = q.f_tilde_form;
    const auto rays = detail::curves_of_kind(net, false);
    double asum = 0;
    for (std::size_t ci : rays) {
        const double a = ray_value(net, q.f_tilde, ci);
        asum += a * a * double(half_lines(net.curves[ci]).size());
    }
    auto tail = [&](double r0) {
        return asum * (4 * std::exp(-0.25 * r0 * r0) + 10 * std::sqrt(pi) * std::erfc(r0 / 2));
    };
    rep.r0_start = std::ceil(std::max(net.max_junction_radius() + 1, net.max_bounded_radius()));
    const double target = 0.5 * std::abs(q.f_tilde_form);
    rep.r0 = -1;
    for (int i = 0; rep.r0_start + 0.1 * i <= 20 + 1e-12; ++i) {
        const double r0 = rep.r0_start + 0.1 * i;
        if (tail(r0) < target) {
            rep.r0 = r0;
            break;
        }
    }
    if (rep.r0 < 0) throw CertificateError("cutoff_certificate: no cutoff radius up to 20");
    rep.tail_bound = tail(rep.r0);
    rep.margin = target - rep.tail_bound;

    // bounded curves carry f_tilde unchanged
    for (std::size_t ci : detail::curves_of_kind(net, true))
        rep.form_cut += curve_contribution(net, q.f_tilde, q.f_tilde, ci) / sqrt_4pi;
    const auto on_bounded = [&](const PointFunction &g) {
        double s = 0;
        for (std::size_t ci : detail::curves_of_kind(net, true)) {
            const auto &c = net.curves[ci];
            const auto v = values_on(net, q.f_tilde, ci);
            std::vector<double> vals(c.size());
            for (std::size_t i = 0; i < c.size(); ++i)
                vals[i] = v[i] * g(c.samples[i]) * std::exp(-0.25 * norm2(c.samples[i].x));
            s += simpson(vals, c.spacing());
        }
        return s;
    };
    double b1 = on_bounded([](const CurveSample &p) { return p.N.x; });
    double b2 = on_bounded([](const CurveSample &p) { return p.N.y; });
    double ck = on_bounded([](const CurveSample &p) { return p.k; });
    for (std::size_t ci : rays) {
        const auto &c = net.curves[ci];
        const double a = ray_value(net, q.f_tilde, ci);
        for (const auto &hl : half_lines(c)) {
            const auto cut = detail::cut_on_ray(hl, a, rep.r0);
            rep.form_cut += cut.form / sqrt_4pi;
            const Vec2 N = half_line_point(c, hl, 0).N;
            b1 += cut.weight * N.x;
            b2 += cut.weight * N.y;
        }
    }
    rep.b = Vec2{b1, b2} / sqrt_4pi;
    rep.ck = ck / sqrt_4pi;
    rep.k2 = bracket(net, [](const CurveSample &p) { return p.k * p.k; }, 0);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            rep.M(i, j) = bracket(
                net,
                [i, j](const CurveSample &p) {
                    const double xi = i == 0 ? p.x.x : p.x.y, xj = j == 0 ? p.x.x : p.x.y;
                    return 0.25 * xi * xj - (i == j ? 0.5 : 0.0);
                },
                2);

    rep.grid_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int l = 0; l < 5; ++l) {
                CutoffGridPoint g;
                g.y = {-1 + 0.5 * i, -1 + 0.5 * j};
                g.h = -1 + 0.5 * l;
                const Eigen::Vector2d y(g.y.x, g.y.y);
                g.Q = rep.form_cut + dot(g.y, rep.b) - 2 * g.h * rep.ck - g.h * g.h * rep.k2 + y.dot(rep.M * y);
                rep.grid.push_back(g);
            }
    for (const auto &g : rep.grid) rep.grid_max = std::max(rep.grid_max, g.Q);
    rep.certified = rep.margin > 0 && rep.form_cut < 0 && rep.grid_max < 0;
    return rep;
}

} // namespace shrinker_lab
