#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "network.hpp"
#include "quadrature.hpp"

namespace shrinker_lab {

struct ValidationTolerances {
    double residual = 1e-6;
    double balance = 1e-8;
    double herring = 1e-8;
    double radial = 1e-10;
    double endpoint = 1e-8;
    double normal = 1e-10;
};

struct CurveDefects {
    double residual = 0; // max |k + <x,N>/2|
    double radial = 0;   // rays and lines: distance of the supporting line from 0
    double normal = 0;   // max | |N| - 1 | and |<N,T>|
    double normal_jump = 0; // unexplained turn between consecutive normals
};

struct JunctionDefects {
    int valence = 0;
    double balance = 0;  // |sum T|
    double herring = 0;  // max |angle - 2pi/3|
    double signature = 0; // max |N_end - eta R(T)|
    double gap = 0;      // max distance from curve ends to the junction
    double tangent = 0;  // stored tangent vs curve end tangent
};

struct ValidationReport {
    std::vector<CurveDefects> curves;
    std::vector<JunctionDefects> junctions;
    double max_residual = 0, max_balance = 0, max_herring = 0, max_radial = 0;
    double max_signature = 0, max_gap = 0, max_normal = 0;
    std::vector<std::string> failures;
    bool passed() const { return failures.empty(); }
};

inline ValidationReport validate_network(const ShrinkerNetwork &net, const ValidationTolerances &tol = {}) {
    ValidationReport rep;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        CurveDefects d;
        for (std::size_t i = 0; i < c.samples.size(); ++i) {
            const auto &p = c.samples[i];
            d.residual = std::max(d.residual, std::abs(p.k + 0.5 * dot(p.x, p.N)));
            d.normal = std::max({d.normal, std::abs(norm(p.N) - 1), std::abs(dot(p.N, p.T))});
            if (i > 0) { // turn between neighbours beyond what the curvature accounts for
                const auto &q = c.samples[i - 1];
                const double expect = 0.5 * (p.s - q.s) * (std::abs(p.k) + std::abs(q.k));
                d.normal_jump = std::max(d.normal_jump, std::abs(angle_between(q.N, p.N) - expect));
            }
        }
        if (c.kind == CurveKind::ray || c.kind == CurveKind::line) d.radial = std::abs(cross(c.origin, c.direction));
        if (c.bounded() && !c.closed && (c.endpoints[0] == open_end || c.endpoints[1] == open_end))
            rep.failures.push_back("curve " + std::to_string(ci) + ": bounded curve with an open end");
        if (c.kind == CurveKind::ray && c.endpoints[0] == open_end)
            rep.failures.push_back("curve " + std::to_string(ci) + ": ray does not start at a junction");
        rep.max_residual = std::max(rep.max_residual, d.residual);
        rep.max_radial = std::max(rep.max_radial, d.radial);
        rep.max_normal = std::max(rep.max_normal, d.normal);
        if (d.normal_jump > 0.1)
            rep.failures.push_back("curve " + std::to_string(ci) + ": normal field jumps");
        rep.curves.push_back(d);
    }
    for (const auto &j : net.junctions) {
        JunctionDefects d;
        d.valence = int(j.incident.size());
        Vec2 sum;
        for (std::size_t a = 0; a < j.incident.size(); ++a) {
            const auto &inc = j.incident[a];
            sum += inc.tangent;
            const auto &c = net.curves[std::size_t(inc.curve)];
            const auto &p = c.at(inc.end);
            const Vec2 t_curve = inc.end == End::start ? p.T : -p.T;
            d.tangent = std::max(d.tangent, norm(t_curve - inc.tangent));
            d.gap = std::max(d.gap, norm(p.x - j.position));
            d.signature = std::max(d.signature, norm(p.N - double(inc.eta) * rot90(inc.tangent)));
            for (std::size_t b = a + 1; b < j.incident.size(); ++b)
                d.herring = std::max(d.herring,
                                     std::abs(angle_between(inc.tangent, j.incident[b].tangent) - 2 * pi / 3));
        }
        d.balance = norm(sum);
        if (d.valence != 3) rep.failures.push_back("junction valence " + std::to_string(d.valence));
        rep.max_balance = std::max(rep.max_balance, d.balance);
        rep.max_herring = std::max(rep.max_herring, d.herring);
        rep.max_signature = std::max(rep.max_signature, d.signature);
        rep.max_gap = std::max(rep.max_gap, d.gap);
        rep.junctions.push_back(d);
    }
    auto check = [&](double v, double t, const char *what) {
        if (!(v <= t)) rep.failures.push_back(std::string(what) + " " + std::to_string(v));
    };
    check(rep.max_residual, tol.residual, "shrinker residual");
    check(rep.max_balance, tol.balance, "junction balance");
    check(rep.max_herring, tol.herring, "Herring angle");
    check(rep.max_radial, tol.radial, "ray radiality");
    check(rep.max_signature, tol.normal, "normal signature");
    check(rep.max_gap, tol.endpoint, "junction gap");
    check(rep.max_normal, tol.normal, "unit normal");
    return rep;
}

inline double area_rate(int m) {
    if (m < 2) throw DomainError("area_rate: edge count must be at least 2");
    return double(m - 6) * pi / 3.0;
}

struct OrientedEdge {
    int curve;
    int sign; // +1 along the parametrization, -1 against it
};

// Walk the region boundary as a closed chain, oriented counter-clockwise.
inline std::vector<OrientedEdge> region_boundary(const ShrinkerNetwork &net, const Region &reg) {
    if (reg.curves.empty()) throw TopologyError("region has no boundary curves");
    std::vector<OrientedEdge> chain;
    const auto &first = net.curves.at(std::size_t(reg.curves[0]));
    if (reg.curves.size() == 1 && first.closed) {
        chain.push_back({reg.curves[0], 1});
    } else {
        std::vector<bool> used(reg.curves.size(), false);
        used[0] = true;
        chain.push_back({reg.curves[0], 1});
        const int start = first.endpoints[0];
        int here = first.endpoints[1];
        if (start == open_end || here == open_end) throw TopologyError("region boundary has an open end");
        while (here != start || chain.size() < reg.curves.size()) {
            bool found = false;
            for (std::size_t i = 0; i < reg.curves.size() && !found; ++i) {
                if (used[i]) continue;
                const auto &c = net.curves.at(std::size_t(reg.curves[i]));
                if (c.endpoints[0] == here) {
                    chain.push_back({reg.curves[i], 1});
                    here = c.endpoints[1];
                    found = used[i] = true;
                } else if (c.endpoints[1] == here) {
                    chain.push_back({reg.curves[i], -1});
                    here = c.endpoints[0];
                    found = used[i] = true;
                }
            }
            if (!found) throw TopologyError("region boundary is not a closed chain");
        }
    }
    double area2 = 0;
    for (const auto &e : chain) {
        const auto &s = net.curves[std::size_t(e.curve)].samples;
        for (std::size_t i = 0; i + 1 < s.size(); ++i) area2 += e.sign * cross(s[i].x, s[i + 1].x);
    }
    if (area2 == 0) throw TopologyError("region boundary encloses no area");
    if (area2 < 0)
        for (auto &e : chain) e.sign = -e.sign;
    return chain;
}

// Total curvature of the counter-clockwise boundary plus m exterior angles
// of pi/3, minus 2pi.
inline double gauss_bonnet_check(const ShrinkerNetwork &net, std::size_t region_id) {
    const Region &reg = net.regions.at(region_id);
    double total = 0;
    for (const auto &e : region_boundary(net, reg)) {
        const auto &c = net.curves[std::size_t(e.curve)];
        std::vector<double> k(c.size());
        // signed against the left normal of the traversal direction
        for (std::size_t i = 0; i < c.size(); ++i) k[i] = c.samples[i].k * dot(c.samples[i].N, rot90(c.samples[i].T));
        total += e.sign * simpson(k, c.spacing());
    }
    return total + double(reg.m) * pi / 3.0 - 2.0 * pi;
}

// Max distance between reflected samples and the declared image curves.
inline double symmetry_defect(const ShrinkerNetwork &net) {
    if (!net.symmetry.reflection_axis) return 0.0;
    const Vec2 axis = *net.symmetry.reflection_axis;
    double d = 0;
    for (std::size_t ci = 0; ci < net.symmetry.mirror.size(); ++ci) {
        const auto [img, rev] = net.symmetry.mirror[ci];
        const auto &a = net.curves[ci].samples;
        const auto &b = net.curves.at(std::size_t(img)).samples;
        if (a.size() != b.size()) return INFINITY;
        for (std::size_t i = 0; i < a.size(); ++i)
            d = std::max(d, norm(reflect(a[i].x, axis) - b[rev ? b.size() - 1 - i : i].x));
    }
    return d;
}

} // namespace shrinker_lab
