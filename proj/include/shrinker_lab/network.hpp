#pragma once

// Networks of curves meeting at triple junctions.  Every curve is sampled
// uniformly in arclength and carries N = R(T) (left normal), so the sign of
// k is always taken with respect to the left normal of the parametrization.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "alcurve.hpp"
#include "errors.hpp"
#include "vec2.hpp"

namespace shrinker_lab {

enum class CurveKind { al_arc, ray, circle_arc, line };

inline const char *to_string(CurveKind k) {
    switch (k) {
    case CurveKind::al_arc: return "al_arc";
    case CurveKind::ray: return "ray";
    case CurveKind::circle_arc: return "circle_arc";
    case CurveKind::line: return "line";
    }
    return "?";
}

struct CurveSample {
    Vec2 x, T, N;
    double k = 0, s = 0, phi = 0, psi = 0;
};

inline constexpr int open_end = -1;

enum class End { start = 0, end = 1 };

struct NetworkCurve {
    CurveKind kind = CurveKind::al_arc;
    std::vector<CurveSample> samples;
    std::array<int, 2> endpoints{open_end, open_end};
    std::optional<ALCurve> arc;
    std::optional<double> energy;
    bool closed = false;

    // ray: start point + outward direction; line: point at s = 0 + direction
    Vec2 origin, direction;

    bool bounded() const { return kind == CurveKind::al_arc || kind == CurveKind::circle_arc; }
    std::size_t size() const { return samples.size(); }
    double spacing() const { return (samples.back().s - samples.front().s) / double(samples.size() - 1); }
    double length() const { return samples.back().s - samples.front().s; }
    const CurveSample &at(End e) const { return e == End::start ? samples.front() : samples.back(); }
};

struct Incidence {
    int curve = 0;
    End end = End::start;
    Vec2 tangent; // unit, pointing into the curve
    int eta = 1;  // N = eta * R(tangent)
};

struct Junction {
    Vec2 position;
    std::vector<Incidence> incident;
};

struct Region {
    std::vector<int> curves;
    int m = 0;
};

struct Symmetry {
    std::optional<Vec2> reflection_axis; // unit direction of the mirror line through 0
    std::vector<std::pair<int, bool>> mirror; // image curve and whether traversal reverses
    int rotation_order = 1;
};

struct ShrinkerNetwork {
    std::string name;
    std::vector<NetworkCurve> curves;
    std::vector<Junction> junctions;
    std::vector<Region> regions;
    Symmetry symmetry;
    std::optional<double> energy;
    std::optional<double> h1;

    double max_junction_radius() const {
        double m = 0;
        for (const auto &j : junctions) m = std::max(m, norm(j.position));
        return m;
    }
    double max_bounded_radius() const {
        double m = 0;
        for (const auto &c : curves)
            if (c.bounded())
                for (const auto &p : c.samples) m = std::max(m, norm(p.x));
        return m;
    }
};

// ---- construction helpers ----

inline double polar_psi(Vec2 x, double phi) {
    if (norm(x) == 0) return 0.0;
    return wrap_angle(phi - std::atan2(x.y, x.x));
}

inline CurveSample make_sample(Vec2 x, double phi, double k, double s) {
    const Vec2 T = unit(phi);
    return {x, T, rot90(T), k, s, phi, polar_psi(x, phi)};
}

inline NetworkCurve curve_from_arc(const ALCurve &arc) {
    NetworkCurve c;
    c.kind = CurveKind::al_arc;
    c.energy = arc.energy;
    c.samples.reserve(arc.samples.size());
    for (std::size_t i = 0; i < arc.samples.size(); ++i) {
        const auto &p = arc.samples[i];
        CurveSample cs = make_sample(p.point(), p.phi, arc.curvature[i], p.s);
        cs.psi = p.psi;
        c.samples.push_back(cs);
    }
    c.arc = arc;
    return c;
}

inline NetworkCurve make_ray(Vec2 start, Vec2 dir, double display_length, std::size_t n) {
    NetworkCurve c;
    c.kind = CurveKind::ray;
    const double phi = std::atan2(dir.y, dir.x);
    c.origin = start;
    c.direction = unit(phi);
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = display_length * double(i) / double(n);
        c.samples.push_back(make_sample(start + s * c.direction, phi, 0.0, s));
    }
    return c;
}

inline NetworkCurve make_line(Vec2 dir, double half_length, std::size_t n) {
    NetworkCurve c;
    c.kind = CurveKind::line;
    const double phi = std::atan2(dir.y, dir.x);
    c.origin = {0, 0};
    c.direction = unit(phi);
    for (std::size_t i = 0; i <= n; ++i) {
        const double s = -half_length + 2 * half_length * double(i) / double(n);
        c.samples.push_back(make_sample(s * c.direction, phi, 0.0, s));
    }
    return c;
}

// Counter-clockwise circle about the origin; N = R(T) points inward.
inline NetworkCurve make_circle(double radius, std::size_t n) {
    NetworkCurve c;
    c.kind = CurveKind::circle_arc;
    c.closed = true;
    const double L = 2 * pi * radius;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = 2 * pi * double(i) / double(n);
        CurveSample cs = make_sample(radius * unit(t), t + pi / 2, 1.0 / radius, L * double(i) / double(n));
        cs.psi = pi / 2;
        c.samples.push_back(cs);
    }
    c.samples.back().x = c.samples.front().x; // exact closure
    return c;
}

// Same point set, traversed the other way, mirrored across the axis.  The
// left normal stays the left normal, so curvature keeps its sign.
inline NetworkCurve mirror_reversed(const NetworkCurve &src, Vec2 axis) {
    NetworkCurve c = src;
    c.samples.clear();
    const double L = src.length();
    const std::size_t n = src.size();
    const double th_axis = std::atan2(axis.y, axis.x);
    for (std::size_t i = 0; i < n; ++i) {
        const auto &p = src.samples[n - 1 - i];
        const double phi = 2 * th_axis - p.phi + pi;
        CurveSample cs = make_sample(reflect(p.x, axis), phi, p.k, L * double(i) / double(n - 1));
        cs.psi = pi - p.psi;
        c.samples.push_back(cs);
    }
    if (src.arc) {
        ALCurve a = *src.arc;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &p = src.arc->samples[n - 1 - i];
            a.samples[i] = {p.r, 2 * th_axis - p.theta, 2 * th_axis - p.phi + pi, pi - p.psi, c.samples[i].s};
            a.curvature[i] = src.arc->curvature[n - 1 - i];
        }
        a.psi_start = a.samples.front().psi;
        a.psi_end = a.samples.back().psi;
        c.arc = a;
    }
    return c;
}

inline NetworkCurve rotated(const NetworkCurve &src, double angle) {
    NetworkCurve c = src;
    for (auto &p : c.samples) {
        p.x = rotate(p.x, angle);
        p.phi += angle;
        p.T = unit(p.phi);
        p.N = rot90(p.T);
    }
    c.origin = rotate(c.origin, angle);
    c.direction = rotate(c.direction, angle);
    if (c.arc)
        for (auto &p : c.arc->samples) {
            p.theta += angle;
            p.phi += angle;
        }
    return c;
}

// Cluster curve ends into junctions and fill in tangents and signatures.
// Open (ray / line infinite) ends are skipped.
inline void assemble_junctions(ShrinkerNetwork &net, double tol = 1e-7) {
    net.junctions.clear();
    for (auto &c : net.curves) c.endpoints = {open_end, open_end};
    // ray starts are exact junction positions, so let them seed the clusters
    for (int pass = 0; pass < 2; ++pass)
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        auto &c = net.curves[ci];
        if ((c.kind == CurveKind::ray) != (pass == 0)) continue;
        if (c.closed || c.kind == CurveKind::line) continue;
        const int ends = c.kind == CurveKind::ray ? 1 : 2;
        for (int e = 0; e < ends; ++e) {
            const End which = e == 0 ? End::start : End::end;
            const CurveSample &p = c.at(which);
            int jid = open_end;
            for (std::size_t j = 0; j < net.junctions.size(); ++j)
                if (norm(net.junctions[j].position - p.x) <= tol) jid = int(j);
            if (jid == open_end) {
                net.junctions.push_back({p.x, {}});
                jid = int(net.junctions.size()) - 1;
            }
            Incidence inc;
            inc.curve = int(ci);
            inc.end = which;
            inc.tangent = which == End::start ? p.T : -p.T;
            inc.eta = dot(p.N, rot90(inc.tangent)) >= 0 ? 1 : -1;
            net.junctions[std::size_t(jid)].incident.push_back(inc);
            c.endpoints[std::size_t(e)] = jid;
        }
    }
}

// ---- whole-network transforms (results no longer carry AL arc data) ----

inline ShrinkerNetwork scaled(const ShrinkerNetwork &src, double alpha) {
    if (!(alpha > 0)) throw DomainError("scaled: factor must be positive");
    ShrinkerNetwork net = src;
    for (auto &c : net.curves) {
        for (auto &p : c.samples) {
            p.x = alpha * p.x;
            p.k /= alpha;
            p.s *= alpha;
        }
        c.origin = alpha * c.origin;
        c.arc.reset();
    }
    for (auto &j : net.junctions) j.position = alpha * j.position;
    return net;
}

inline ShrinkerNetwork translated(const ShrinkerNetwork &src, Vec2 y) {
    ShrinkerNetwork net = src;
    for (auto &c : net.curves) {
        for (auto &p : c.samples) {
            p.x += y;
            p.psi = polar_psi(p.x, p.phi);
        }
        c.origin += y;
        c.arc.reset();
    }
    for (auto &j : net.junctions) j.position += y;
    return net;
}

inline ShrinkerNetwork rotated(const ShrinkerNetwork &src, double angle) {
    ShrinkerNetwork net = src;
    for (auto &c : net.curves) c = rotated(c, angle);
    for (auto &j : net.junctions) {
        j.position = rotate(j.position, angle);
        for (auto &inc : j.incident) inc.tangent = rotate(inc.tangent, angle);
    }
    if (net.symmetry.reflection_axis) net.symmetry.reflection_axis = rotate(*net.symmetry.reflection_axis, angle);
    return net;
}

} // namespace shrinker_lab
