#pragma once

// Network serialization (JSON, CSV, SVG) and report payloads.  Needs the
// vendored nlohmann/json on the include path.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "gaussquad.hpp"
#include "network.hpp"
#include "stability.hpp"
#include "validate.hpp"

namespace shrinker_lab {

using Json = nlohmann::ordered_json;

// ---- files ----

// Write to a temporary sibling and rename, so a failure never leaves a
// partial file at path.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IOError("no such directory: " + dir.string());
    std::random_device rd;
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IOError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            fs::remove(tmp, ec);
            throw IOError("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IOError("cannot move output into place: " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- JSON ----

inline Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }

inline Json network_json(const ShrinkerNetwork &net) {
    Json j;
    j["name"] = net.name;
    j["energy"] = net.energy ? Json(*net.energy) : Json(nullptr);
    j["h1"] = net.h1 ? Json(*net.h1) : Json(nullptr);
    Json curves = Json::array();
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        Json cj;
        cj["id"] = ci;
        cj["kind"] = to_string(c.kind);
        if (c.energy) cj["energy"] = *c.energy;
        cj["closed"] = c.closed;
        if (!c.bounded()) {
            cj["origin"] = vec_json(c.origin);
            cj["direction"] = vec_json(c.direction);
        }
        Json samples = Json::array();
        for (const auto &p : c.samples) samples.push_back(Json::array({p.x.x, p.x.y, p.phi, p.psi, p.k, p.s}));
        cj["samples"] = std::move(samples);
        cj["endpoints"] = Json::array({c.endpoints[0], c.endpoints[1]});
        curves.push_back(std::move(cj));
    }
    j["curves"] = std::move(curves);
    Json junctions = Json::array();
    for (const auto &jn : net.junctions) {
        Json jj;
        jj["position"] = vec_json(jn.position);
        Json inc = Json::array();
        for (const auto &i : jn.incident)
            inc.push_back({{"curve", i.curve},
                           {"end", i.end == End::start ? "start" : "end"},
                           {"eta", i.eta},
                           {"tangent", vec_json(i.tangent)}});
        jj["incident"] = std::move(inc);
        junctions.push_back(std::move(jj));
    }
    j["junctions"] = std::move(junctions);
    Json regions = Json::array();
    for (const auto &r : net.regions) regions.push_back({{"curves", r.curves}, {"m", r.m}});
    j["regions"] = std::move(regions);
    Json sym;
    sym["reflection_axis"] = net.symmetry.reflection_axis ? vec_json(*net.symmetry.reflection_axis) : Json(nullptr);
    Json mirror = Json::array();
    for (const auto &[img, rev] : net.symmetry.mirror) mirror.push_back(Json::array({img, rev}));
    sym["mirror"] = std::move(mirror);
    sym["rotation_order"] = net.symmetry.rotation_order;
    j["symmetry"] = std::move(sym);
    return j;
}

inline std::string network_to_json(const ShrinkerNetwork &net) { return network_json(net).dump(1) + "\n"; }

namespace detail {
inline Vec2 json_vec(const Json &j) {
    if (!j.is_array() || j.size() != 2) throw IOError("expected a 2-vector");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline CurveKind kind_from_string(const std::string &s) {
    for (CurveKind k : {CurveKind::al_arc, CurveKind::ray, CurveKind::circle_arc, CurveKind::line})
        if (s == to_string(k)) return k;
    throw IOError("unknown curve kind '" + s + "'");
}
} // namespace detail

inline ShrinkerNetwork network_from_json(const std::string &text) {
    ShrinkerNetwork net;
    try {
        const Json j = Json::parse(text);
        net.name = j.at("name").get<std::string>();
        if (!j.at("energy").is_null()) net.energy = j["energy"].get<double>();
        if (!j.at("h1").is_null()) net.h1 = j["h1"].get<double>();
        for (const auto &cj : j.at("curves")) {
            NetworkCurve c;
            c.kind = detail::kind_from_string(cj.at("kind").get<std::string>());
            if (cj.contains("energy")) c.energy = cj["energy"].get<double>();
            c.closed = cj.value("closed", false);
            if (!c.bounded()) {
                c.origin = detail::json_vec(cj.at("origin"));
                c.direction = detail::json_vec(cj.at("direction"));
            }
            for (const auto &s : cj.at("samples")) {
                if (s.size() != 6) throw IOError("sample must have 6 entries");
                auto p = make_sample({s[0].get<double>(), s[1].get<double>()}, s[2].get<double>(), s[4].get<double>(),
                                     s[5].get<double>());
                p.psi = s[3].get<double>();
                c.samples.push_back(p);
            }
            if (c.samples.size() < 2) throw IOError("curve needs at least 2 samples");
            c.endpoints = {cj.at("endpoints")[0].get<int>(), cj.at("endpoints")[1].get<int>()};
            net.curves.push_back(std::move(c));
        }
        for (const auto &jj : j.at("junctions")) {
            Junction jn;
            jn.position = detail::json_vec(jj.at("position"));
            for (const auto &ij : jj.at("incident")) {
                Incidence inc;
                inc.curve = ij.at("curve").get<int>();
                if (inc.curve < 0 || std::size_t(inc.curve) >= net.curves.size())
                    throw IOError("incidence refers to a missing curve");
                const auto end = ij.at("end").get<std::string>();
                if (end != "start" && end != "end") throw IOError("incidence end must be start or end");
                inc.end = end == "start" ? End::start : End::end;
                inc.eta = ij.at("eta").get<int>();
                inc.tangent = detail::json_vec(ij.at("tangent"));
                jn.incident.push_back(inc);
            }
            net.junctions.push_back(std::move(jn));
        }
        for (const auto &rj : j.at("regions")) net.regions.push_back({rj.at("curves").get<std::vector<int>>(), rj.at("m").get<int>()});
        if (j.contains("symmetry")) {
            const auto &sj = j["symmetry"];
            if (!sj.at("reflection_axis").is_null()) net.symmetry.reflection_axis = detail::json_vec(sj["reflection_axis"]);
            for (const auto &m : sj.at("mirror")) net.symmetry.mirror.emplace_back(m[0].get<int>(), m[1].get<bool>());
            net.symmetry.rotation_order = sj.at("rotation_order").get<int>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw IOError(std::string("malformed network JSON: ") + e.what());
    }
    return net;
}

// ---- CSV ----

inline std::string network_to_csv(const ShrinkerNetwork &net) {
    std::string out = "curve_id,s,x,y,phi,psi,k\n";
    char buf[256];
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci)
        for (const auto &p : net.curves[ci].samples) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", ci, p.s, p.x.x, p.x.y, p.phi,
                          p.psi, p.k);
            out += buf;
        }
    return out;
}

// ---- SVG ----

struct SvgOptions {
    double size = 600;      // pixels
    double extent = 0;      // half-width in plane units; 0 picks from the data
    bool unit_circle = true;
    double r0 = 0;          // cutoff radius overlay if > 0
};

inline std::string network_to_svg(const ShrinkerNetwork &net, const SvgOptions &opt = {}) {
    double ext = opt.extent;
    if (ext <= 0) {
        for (const auto &c : net.curves)
            for (const auto &p : c.samples) ext = std::max({ext, std::abs(p.x.x), std::abs(p.x.y)});
        ext = std::max({ext * 1.05, 1.2, opt.r0 * 1.05});
    }
    const double scale = opt.size / (2 * ext);
    auto X = [&](double x) { return (x + ext) * scale; };
    auto Y = [&](double y) { return (ext - y) * scale; };
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  opt.size, opt.size, opt.size, opt.size);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    auto circle = [&](double r, const char *style) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" %s/>\n", X(0), Y(0), r * scale, style);
        out += buf;
    };
    if (opt.unit_circle) circle(1, "fill=\"none\" stroke=\"#999\" stroke-dasharray=\"4 4\"");
    if (opt.r0 > 0) circle(opt.r0, "fill=\"none\" stroke=\"#c66\" stroke-dasharray=\"8 4\"");
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        std::snprintf(buf, sizeof buf, "<polyline data-curve=\"%zu\" fill=\"none\" stroke=\"%s\" stroke-width=\"2\" points=\"",
                      ci, c.bounded() ? "black" : "#246");
        out += buf;
        const std::size_t stride = std::max<std::size_t>(1, c.size() / 512);
        for (std::size_t i = 0; i < c.size(); i += stride) {
            std::snprintf(buf, sizeof buf, "%.3f,%.3f ", X(c.samples[i].x.x), Y(c.samples[i].x.y));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "%.3f,%.3f\"/>\n", X(c.samples.back().x.x), Y(c.samples.back().x.y));
        out += buf;
    }
    for (const auto &j : net.junctions) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"4\" fill=\"#c22\"/>\n", X(j.position.x),
                      Y(j.position.y));
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

// ---- reports ----

inline Json validation_json(const ValidationReport &r) {
    Json j;
    j["passed"] = r.passed();
    j["max_residual"] = r.max_residual;
    j["max_balance"] = r.max_balance;
    j["max_herring"] = r.max_herring;
    j["max_radial"] = r.max_radial;
    j["max_signature"] = r.max_signature;
    j["max_gap"] = r.max_gap;
    j["max_normal"] = r.max_normal;
    Json curves = Json::array();
    for (const auto &c : r.curves)
        curves.push_back({{"residual", c.residual}, {"radial", c.radial}, {"normal", c.normal}, {"normal_jump", c.normal_jump}});
    j["curves"] = std::move(curves);
    Json junctions = Json::array();
    for (const auto &d : r.junctions)
        junctions.push_back({{"valence", d.valence},
                             {"balance", d.balance},
                             {"herring", d.herring},
                             {"signature", d.signature},
                             {"gap", d.gap},
                             {"tangent", d.tangent}});
    j["junctions"] = std::move(junctions);
    j["failures"] = r.failures;
    return j;
}

inline Json variation_json(const VariationFunction &f) {
    Json curves = Json::array();
    for (const auto &r : f.curves) {
        if (r.kind == CurveRep::Kind::samples)
            curves.push_back({{"samples", r.data}});
        else
            curves.push_back({{"value", r.value}, {"a_k", r.a_k}, {"a_n", vec_json(r.a_n)}});
    }
    return {{"curves", curves}, {"y", vec_json(f.y)}, {"h", f.h}};
}

inline Json matrix_json(const Eigen::MatrixXd &m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json quadratic_form_json(const QuadraticFormReport &q) {
    Json j;
    j["network"] = q.network;
    j["basis"] = q.basis_description;
    j["gram"] = matrix_json(q.gram);
    Json ev = Json::array();
    for (Eigen::Index i = 0; i < q.gram_eigenvalues.size(); ++i) ev.push_back(q.gram_eigenvalues(i));
    j["gram_eigenvalues"] = std::move(ev);
    j["gram_symmetry_defect"] = q.gram_symmetry_defect;
    j["f_tilde"] = variation_json(q.f_tilde);
    j["f_tilde_form"] = q.f_tilde_form;
    j["orthogonality"] = {{"k", q.orthogonality[0]}, {"N_e1", q.orthogonality[1]}, {"N_e2", q.orthogonality[2]}};
    if (q.coefficients) {
        const auto &c = *q.coefficients;
        j["coefficients"] = {{"A_closed", c.A_closed},
                             {"A_quadrature", c.A_quadrature},
                             {"B_closed", c.B_closed},
                             {"B_quadrature", c.B_quadrature},
                             {"C_quadrature", c.C_quadrature},
                             {"C_junction_term", c.C_junction_term},
                             {"C_upper_junction", c.C_upper_junction},
                             {"C_bound_printed", c.C_bound_printed},
                             {"discriminant", c.discriminant},
                             {"bound_discriminant", c.bound_discriminant},
                             {"delta_phi", c.delta_phi},
                             {"c", c.c},
                             {"r_in", c.r_in},
                             {"h1", c.h1}};
    }
    j["certified"] = q.certified;
    return j;
}

inline Json cutoff_json(const CutoffReport &c) {
    Json j;
    j["r0"] = c.r0;
    j["r0_search_start"] = c.r0_start;
    j["profile"] = {{"kind", "1 - smoothstep5((|x| - r0)/2) on rays"}, {"inner", c.r0}, {"outer", c.r0 + 2}};
    j["tail_bound"] = c.tail_bound;
    j["margin"] = c.margin;
    j["form_uncut"] = c.form_uncut;
    j["form_cut"] = c.form_cut;
    j["grid_points"] = c.grid.size();
    j["grid_max"] = c.grid_max;
    j["certified"] = c.certified;
    return j;
}

} // namespace shrinker_lab
