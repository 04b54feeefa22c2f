#pragma once

// The catalog of regular shrinkers.  Bounded arcs are parametrized counter-
// clockwise about the origin (sin psi > 0); every arc leaves a junction with
// psi = 2pi/3 and arrives with psi = pi/3.  Which pi/3 crossing closes an
// arc depends on the topology:
//
//   n-ray star, h1    r_in  -> r_min -> r_in                 first decreasing
//   spoon loop, fish  r_in  -> r_min -> r_max -> r_min -> r_in  second decreasing
//   lens              r_out -> r_min -> r_out                first increasing
//   rocket (side)     r_in  -> r_min -> r_out                first increasing

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alcurve.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "parallel.hpp"
#include "roots.hpp"
#include "validate.hpp"

namespace shrinker_lab {

struct TableRow {
    std::string_view name;
    double c, r_min, r_in, r_out, r_max, h1;
};

inline constexpr std::array<TableRow, 7> reference_table{{
    {"brakke_spoon", 1.4021, 0.8568, 1.1390, 1.7086, 2.0596, 1.9082},
    {"lens", 1.3938, 0.8649, 1.1590, 1.6858, 2.0487, 1.9497},
    {"fish", 3.3597, 0.3046, 0.3546, 2.9271, 3.0511, 1.1040},
    {"3_ray_star", 1.3716, 0.8878, 1.2251, 1.6121, 2.0180, 2 * pi / 3},
    {"rocket", 1.9338, 0.5591, 0.6674, 2.3358, 2.5155, 1.2717},
    {"4_ray_star", 1.5281, 0.7544, 0.9443, 1.9443, 2.2038, 2 * pi / 4},
    {"5_ray_star", 1.9804, 0.5436, 0.6474, 2.3675, 2.5429, 2 * pi / 5},
}};

inline constexpr std::array<std::string_view, 10> catalog_names{
    "line", "circle", "standard_triod", "brakke_spoon", "lens",
    "fish", "3_ray_star", "4_ray_star", "5_ray_star", "rocket"};

inline bool is_catalog_name(std::string_view n) {
    for (auto c : catalog_names)
        if (c == n) return true;
    return false;
}

inline const TableRow *table_row(std::string_view name) {
    for (const auto &r : reference_table)
        if (r.name == name) return &r;
    return nullptr;
}

struct CatalogOptions {
    std::size_t samples = 2048;
    double delta = 0.2;
    double closure_tol = 1e-10;
    double ray_length = 8.0;
    int scan_points = 32;
    ArcOptions arc{};
    ValidationTolerances validation{};
};

struct Topology {
    enum class Kind { star, spoon, lens, fish, rocket } kind;
    int rays = 0; // stars only
};

// Smallest energy at which the junction level sqrt(3)c/2 is attainable.
inline const double junction_energy_min = 2.0 * profile_K_min / std::sqrt(3.0);

namespace detail {

inline PolarState junction_state(double r, double theta) {
    const double psi = 2 * pi / 3;
    return {r, theta, theta + psi, psi, 0.0};
}

inline const PsiCrossing stop_in_in{pi / 3, -1, 1};
inline const PsiCrossing stop_loop{pi / 3, -1, 2};
inline const PsiCrossing stop_to_out{pi / 3, +1, 1};

inline double sweep(double c, double r0, const PsiCrossing &stop, const ArcOptions &opt) {
    return trace_arc_end(c, junction_state(r0, 0.0), stop, opt).theta;
}

} // namespace detail

inline double inner_sweep(double c, const ArcOptions &opt = {}) {
    return detail::sweep(c, solve_radii(c, std::sqrt(3.0) / 2).small, detail::stop_in_in, opt);
}

// Realized minus target closure quantity, as a function of the energy.
inline double closure(const Topology &t, double c, const ArcOptions &opt = {}) {
    const auto rr = solve_radii(c, std::sqrt(3.0) / 2);
    using namespace detail;
    switch (t.kind) {
    case Topology::Kind::star: return sweep(c, rr.small, stop_in_in, opt) - 2 * pi / t.rays;
    case Topology::Kind::spoon: return sweep(c, rr.small, stop_loop, opt) - 2 * pi;
    case Topology::Kind::lens: return sweep(c, rr.large, stop_to_out, opt) - pi;
    case Topology::Kind::fish:
        return sweep(c, rr.small, stop_loop, opt) + sweep(c, rr.small, stop_in_in, opt) - 2 * pi;
    case Topology::Kind::rocket:
        return sweep(c, rr.small, stop_to_out, opt) + 0.5 * sweep(c, rr.small, stop_in_in, opt) - pi;
    }
    throw DomainError("closure: unknown topology");
}

struct ShootResult {
    double c = 0;
    double residual = 0;
    double lo = 0, hi = 0;
    int evaluations = 0;
};

inline ShootResult shoot_energy(const Topology &t, double c_seed, const CatalogOptions &opt = {}) {
    if (!(c_seed > 0)) throw DomainError("shoot_energy: seed energy must be positive");
    // just above the floor the arcs only graze psi = pi/3; keep a margin
    const double lo = std::max(c_seed * (1 - opt.delta), junction_energy_min * (1 + 1e-4));
    const double hi = c_seed * (1 + opt.delta);
    auto range = [&](double a, double b) { return "[" + std::to_string(a) + ", " + std::to_string(b) + "]"; };
    if (!(lo < hi)) throw BracketingError("shoot_energy: empty bracket " + range(lo, hi));
    auto G = [&](double c) { return closure(t, c, opt.arc); };

    // sign changes on a uniform scan; keep the one nearest the seed.  Points
    // where the closing crossing does not exist are gaps in the scan.
    auto G_or_nan = [&](double c) {
        try {
            return G(c);
        } catch (const NonConvergenceError &) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    const int n = std::max(opt.scan_points, 1);
    double a = lo, ga = G_or_nan(lo);
    double best_a = 0, best_b = 0;
    bool found = false;
    int evals = 1;
    for (int i = 1; i <= n; ++i) {
        const double b = lo + (hi - lo) * double(i) / double(n);
        const double gb = G_or_nan(b);
        ++evals;
        if (std::isfinite(ga) && std::isfinite(gb) && ((ga > 0) != (gb > 0) || gb == 0)) {
            const double mid = 0.5 * (a + b);
            if (!found || std::abs(mid - c_seed) < std::abs(0.5 * (best_a + best_b) - c_seed)) {
                best_a = a;
                best_b = b;
            }
            found = true;
        }
        a = b;
        ga = gb;
    }
    if (!found) throw BracketingError("shoot_energy: closure has no sign change on " + range(lo, hi));

    auto root = brent(G, best_a, best_b, 1e-15, 0.1 * opt.closure_tol);
    ShootResult res{root.x, std::abs(root.fx), lo, hi, evals + root.evaluations};
    if (!(res.residual <= opt.closure_tol))
        throw NonConvergenceError("shoot_energy: closure residual above tolerance");
    return res;
}

namespace detail {

inline NetworkCurve arc_curve(double c, double r0, double theta0, const PsiCrossing &stop, const CatalogOptions &opt) {
    ArcOptions ao = opt.arc;
    ao.samples = opt.samples;
    return curve_from_arc(integrate_arc(c, junction_state(r0, theta0), stop, ao));
}

inline NetworkCurve radial_ray(Vec2 start, const CatalogOptions &opt) {
    return make_ray(start, normalized(start), opt.ray_length, opt.samples);
}

inline ShrinkerNetwork build_star(int n, double c, const CatalogOptions &opt) {
    ShrinkerNetwork net;
    const double r_in = solve_radii(c, std::sqrt(3.0) / 2).small;
    const double th0 = pi / 2;
    const NetworkCurve arc0 = arc_curve(c, r_in, th0, stop_in_in, opt);
    for (int j = 0; j < n; ++j) net.curves.push_back(rotated(arc0, 2 * pi * j / n));
    for (int j = 0; j < n; ++j) net.curves.push_back(radial_ray(r_in * unit(th0 + 2 * pi * j / n), opt));
    net.regions.push_back({{}, n});
    for (int j = 0; j < n; ++j) net.regions[0].curves.push_back(j);
    net.symmetry.reflection_axis = Vec2{0, 1};
    for (int j = 0; j < n; ++j) net.symmetry.mirror.push_back({(2 * n - 1 - j) % n, true});
    for (int j = 0; j < n; ++j) net.symmetry.mirror.push_back({n + (n - j) % n, false});
    net.symmetry.rotation_order = n;
    net.h1 = arc0.arc->sweep();
    return net;
}

inline ShrinkerNetwork build_spoon(double c, const CatalogOptions &opt) {
    ShrinkerNetwork net;
    const double r_in = solve_radii(c, std::sqrt(3.0) / 2).small;
    net.curves.push_back(arc_curve(c, r_in, -pi / 2, stop_loop, opt));
    net.curves.push_back(radial_ray({0, -r_in}, opt));
    net.regions.push_back({{0}, 1});
    net.symmetry.reflection_axis = Vec2{0, 1};
    net.symmetry.mirror = {{0, true}, {1, false}};
    net.h1 = inner_sweep(c, opt.arc);
    return net;
}

inline ShrinkerNetwork build_lens(double c, const CatalogOptions &opt) {
    ShrinkerNetwork net;
    const double r_out = solve_radii(c, std::sqrt(3.0) / 2).large;
    const NetworkCurve upper = arc_curve(c, r_out, 0.0, stop_to_out, opt);
    net.curves.push_back(upper);
    net.curves.push_back(rotated(upper, pi));
    net.curves.push_back(radial_ray({r_out, 0}, opt));
    net.curves.push_back(radial_ray({-r_out, 0}, opt));
    net.regions.push_back({{0, 1}, 2});
    net.symmetry.reflection_axis = Vec2{0, 1};
    net.symmetry.mirror = {{0, true}, {1, true}, {3, false}, {2, false}};
    net.symmetry.rotation_order = 2;
    net.h1 = inner_sweep(c, opt.arc);
    return net;
}

// Symmetric about the y-axis, two rays pointing down from O_L, O_R.
inline ShrinkerNetwork build_fish_frame(double c, bool rocket, const CatalogOptions &opt) {
    ShrinkerNetwork net;
    const auto rr = solve_radii(c, std::sqrt(3.0) / 2);
    const double h1 = inner_sweep(c, opt.arc);
    const double th_r = -pi / 2 + h1 / 2, th_l = -pi / 2 - h1 / 2;
    const NetworkCurve bottom = arc_curve(c, rr.small, th_l, stop_in_in, opt);
    const Vec2 axis{0, 1};
    if (!rocket) {
        net.curves.push_back(arc_curve(c, rr.small, th_r, stop_loop, opt));
        net.curves.push_back(bottom);
        net.curves.push_back(radial_ray(rr.small * unit(th_r), opt));
        net.curves.push_back(radial_ray(rr.small * unit(th_l), opt));
        net.regions.push_back({{0, 1}, 2});
        net.symmetry.mirror = {{0, true}, {1, true}, {3, false}, {2, false}};
    } else {
        const NetworkCurve right = arc_curve(c, rr.small, th_r, stop_to_out, opt);
        net.curves.push_back(right);
        net.curves.push_back(mirror_reversed(right, axis));
        net.curves.push_back(bottom);
        net.curves.push_back(radial_ray(rr.small * unit(th_r), opt));
        net.curves.push_back(radial_ray(rr.small * unit(th_l), opt));
        net.curves.push_back(make_ray({0, norm(right.samples.back().x)}, axis, opt.ray_length, opt.samples));
        net.regions.push_back({{0, 1, 2}, 3});
        net.symmetry.mirror = {{1, true}, {0, true}, {2, true}, {4, false}, {3, false}, {5, false}};
    }
    net.symmetry.reflection_axis = axis;
    net.h1 = h1;
    return net;
}

} // namespace detail

inline Topology topology_of(std::string_view name) {
    using K = Topology::Kind;
    if (name == "3_ray_star") return {K::star, 3};
    if (name == "4_ray_star") return {K::star, 4};
    if (name == "5_ray_star") return {K::star, 5};
    if (name == "brakke_spoon") return {K::spoon};
    if (name == "lens") return {K::lens};
    if (name == "fish") return {K::fish};
    if (name == "rocket") return {K::rocket};
    throw DomainError("topology_of: '" + std::string(name) + "' is not shot on the energy");
}

inline ShrinkerNetwork build_catalog_shrinker(std::string_view name, const CatalogOptions &opt = {}) {
    if (!is_catalog_name(name)) throw DomainError("unknown catalog shrinker '" + std::string(name) + "'");
    ShrinkerNetwork net;
    const std::size_t n = opt.samples;
    if (name == "line") {
        net.curves.push_back(make_line({1, 0}, opt.ray_length, n));
    } else if (name == "circle") {
        net.curves.push_back(make_circle(std::sqrt(2.0), n));
        net.regions.push_back({{0}, 0});
        net.symmetry.reflection_axis = Vec2{0, 1};
    } else if (name == "standard_triod") {
        for (int j = 0; j < 3; ++j)
            net.curves.push_back(make_ray({0, 0}, unit(pi / 2 + 2 * pi * j / 3), opt.ray_length, n));
        net.symmetry.reflection_axis = Vec2{0, 1};
        net.symmetry.mirror = {{0, false}, {2, false}, {1, false}};
        net.symmetry.rotation_order = 3;
    } else {
        const Topology t = topology_of(name);
        const double c = shoot_energy(t, table_row(name)->c, opt).c;
        using K = Topology::Kind;
        switch (t.kind) {
        case K::star: net = detail::build_star(t.rays, c, opt); break;
        case K::spoon: net = detail::build_spoon(c, opt); break;
        case K::lens: net = detail::build_lens(c, opt); break;
        case K::fish: net = detail::build_fish_frame(c, false, opt); break;
        case K::rocket: net = detail::build_fish_frame(c, true, opt); break;
        }
        net.energy = c;
    }
    net.name = std::string(name);
    assemble_junctions(net);
    const auto rep = validate_network(net, opt.validation);
    if (!rep.passed()) throw ValidationError("build_catalog_shrinker(" + net.name + "): " + rep.failures.front());
    return net;
}

struct CatalogRow {
    std::string name;
    double c, r_min, r_in, r_out, r_max, h1;
};

inline CatalogRow catalog_row(const ShrinkerNetwork &net) {
    if (!net.energy || !net.h1) throw DomainError("catalog_row: network has no energy");
    const double c = *net.energy;
    const auto outer = solve_radii(c, 1.0);
    const auto junc = solve_radii(c, std::sqrt(3.0) / 2);
    return {net.name, c, outer.small, junc.small, junc.large, outer.large, *net.h1};
}

// Several shrinkers at once, one worker per network; output in input order.
inline std::vector<ShrinkerNetwork> build_catalog(const std::vector<std::string> &names, const CatalogOptions &opt = {}) {
    for (const auto &n : names)
        if (!is_catalog_name(n)) throw DomainError("unknown catalog shrinker '" + n + "'");
    std::vector<ShrinkerNetwork> out(names.size());
    parallel_for(names.size(), [&](std::size_t i) { out[i] = build_catalog_shrinker(names[i], opt); });
    return out;
}

} // namespace shrinker_lab
