// shrinker_lab: build catalog shrinkers, run the validation and stability
// suites, export geometry.
//
// Exit codes: 0 ok, 1 a check or certificate failed, 2 usage error,
// 3 shrinker not covered by the instability argument, 4 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "shrinker_lab/catalog.hpp"
#include "shrinker_lab/identities.hpp"
#include "shrinker_lab/io.hpp"
#include "shrinker_lab/stability.hpp"
#include "shrinker_lab/validate.hpp"

using namespace shrinker_lab;

namespace {

enum Exit { ok = 0, failed = 1, usage = 2, not_covered = 3, io_error = 4 };

struct Common {
    std::size_t samples = 2048;
    double tol_residual = 1e-6;
    double tol_bracket = 1e-6;
    std::string out;
    std::string format;
};

void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("--samples", c.samples, "samples per curve")->check(CLI::Range(8, 1 << 20));
    cmd->add_option("--tol-residual", c.tol_residual, "shrinker-equation residual tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--tol-bracket", c.tol_bracket, "bracket identity tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--out", c.out, "output file");
}

CatalogOptions catalog_options(const Common &c) {
    CatalogOptions opt;
    opt.samples = c.samples;
    opt.validation.residual = c.tol_residual;
    return opt;
}

// Emit JSON to --out (atomically) or, with --format json, to stdout.
void emit(const Json &j, const Common &c) {
    const std::string text = j.dump(1) + "\n";
    if (!c.out.empty()) write_atomic(c.out, text);
    if (c.format == "json" && c.out.empty()) std::cout << text;
}

bool human(const Common &c) { return c.format != "json" || !c.out.empty(); }

int cmd_catalog(const Common &c, const std::string &only, const std::string &csv) {
    std::vector<std::string> names;
    for (const auto &r : reference_table)
        if (only.empty() || r.name == only) names.emplace_back(r.name);
    if (names.empty()) {
        std::cerr << "catalog: '" << only << "' has no table row\n";
        return usage;
    }
    const auto nets = build_catalog(names, catalog_options(c));
    bool pass = true;
    std::string csv_text = "name,c,r_min,r_in,r_out,r_max,h1,max_delta\n";
    std::printf("%-14s %9s %9s %9s %9s %9s %9s  %s\n", "name", "c", "r_min", "r_in", "r_out", "r_max", "h1", "max|delta|");
    for (const auto &net : nets) {
        const auto row = catalog_row(net);
        const auto *ref = table_row(net.name);
        const double got[6] = {row.c, row.r_min, row.r_in, row.r_out, row.r_max, row.h1};
        const double want[6] = {ref->c, ref->r_min, ref->r_in, ref->r_out, ref->r_max, ref->h1};
        double delta = 0;
        for (int i = 0; i < 6; ++i) delta = std::max(delta, std::abs(got[i] - want[i]));
        pass = pass && delta <= 1e-3;
        std::printf("%-14s %9.6f %9.6f %9.6f %9.6f %9.6f %9.6f  %.2e%s\n", net.name.c_str(), got[0], got[1], got[2],
                    got[3], got[4], got[5], delta, delta <= 1e-3 ? "" : "  FAIL");
        char buf[512];
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", net.name.c_str(), got[0],
                      got[1], got[2], got[3], got[4], got[5], delta);
        csv_text += buf;
    }
    if (!csv.empty()) write_atomic(csv, csv_text);
    return pass ? ok : failed;
}

int cmd_check(const Common &c, const std::string &name) {
    const auto net = build_catalog_shrinker(name, catalog_options(c));
    ValidationTolerances tol;
    tol.residual = c.tol_residual;
    const auto val = validate_network(net, tol);
    std::vector<std::string> failures = val.failures;

    Json gb = Json::array();
    for (std::size_t r = 0; r < net.regions.size(); ++r) {
        const double d = gauss_bonnet_check(net, r);
        gb.push_back({{"region", r}, {"m", net.regions[r].m}, {"defect", d}});
        if (std::abs(d) > 1e-6) failures.push_back("gauss-bonnet defect in region " + std::to_string(r));
    }
    Json ids;
    for (const auto &v : identity_values(net)) {
        ids[v.label] = v.value;
        if (std::abs(v.value) > c.tol_bracket) failures.push_back("bracket identity " + v.label);
    }
    const auto eig = eigen_residuals(net);
    if (eig.k > 1e-4) failures.push_back("eigen residual Lk - k");
    if (eig.e1 > 1e-4 || eig.e2 > 1e-4) failures.push_back("eigen residual L<V,N> - <V,N>/2");
    Json flux;
    const std::pair<const char *, VariationFunction> fns[] = {
        {"k", VariationFunction::geometric(net, 1, {})},
        {"N_e1", VariationFunction::geometric(net, 0, {1, 0})},
        {"N_e2", VariationFunction::geometric(net, 0, {0, 1})}};
    for (const auto &[label, f] : fns) {
        const auto b = eigen_boundary_check(net, f);
        flux[label] = {{"sum_defect", b.max_sum_defect}, {"spread", b.max_spread}, {"passed", b.passed()}};
        if (!b.passed()) failures.push_back(std::string("junction flux for ") + label);
    }

    Json j;
    j["name"] = net.name;
    j["samples"] = c.samples;
    j["validation"] = validation_json(val);
    j["gauss_bonnet"] = gb;
    j["bracket_identities"] = ids;
    j["eigen_residuals"] = {{"k", eig.k}, {"N_e1", eig.e1}, {"N_e2", eig.e2}};
    j["junction_flux"] = flux;
    j["symmetry_defect"] = symmetry_defect(net);
    j["failures"] = failures;
    j["passed"] = failures.empty();
    emit(j, c);
    if (human(c)) {
        std::printf("%s (%zu samples per curve)\n", net.name.c_str(), c.samples);
        std::printf("  residual %.3e  balance %.3e  herring %.3e\n", val.max_residual, val.max_balance, val.max_herring);
        std::printf("  worst bracket identity %.3e\n", worst_identity(net));
        std::printf("  eigen residuals k %.3e  <N,e1> %.3e  <N,e2> %.3e\n", eig.k, eig.e1, eig.e2);
        for (const auto &f : failures) std::printf("  FAIL %s\n", f.c_str());
        std::printf("%s\n", failures.empty() ? "PASS" : "FAIL");
    }
    return failures.empty() ? ok : failed;
}

int cmd_stability(const Common &c, const std::string &name) {
    const bool star = name == "4_ray_star" || name == "5_ray_star";
    if (!star && name != "fish" && name != "rocket") {
        std::cerr << "stability: " << name
                  << " is not covered by the instability argument: it applies to the 4-ray star, the 5-ray star, the "
                     "fish and the rocket, and needs the triple junctions inside the unit circle\n";
        return not_covered;
    }
    const auto net = build_catalog_shrinker(name, catalog_options(c));
    Json j;
    j["name"] = name;
    bool pass = false;
    try {
        const auto q = star ? star_certificate(net) : fish_rocket_certificate(net);
        const auto cut = cutoff_certificate(net, q);
        j["certificate"] = quadratic_form_json(q);
        j["cutoff"] = cutoff_json(cut);
        pass = q.certified && cut.certified;
        if (human(c)) {
            std::printf("%s\n", name.c_str());
            if (q.coefficients) {
                const auto &co = *q.coefficients;
                std::printf("  A %.6f (quadrature %.6f)  B %.6f (quadrature %.6f)\n", co.A_closed, co.A_quadrature,
                            co.B_closed, co.B_quadrature);
                std::printf("  C %.6f  B^2 - AC %.6f\n", co.C_quadrature, co.discriminant);
            }
            std::printf("  Gram eigenvalues:");
            for (Eigen::Index i = 0; i < q.gram_eigenvalues.size(); ++i) std::printf(" %.6f", q.gram_eigenvalues(i));
            std::printf("\n  [f,f] %.6f  r0 %.1f  margin %.4e  grid max %.6f\n", q.f_tilde_form, cut.r0, cut.margin,
                        cut.grid_max);
        }
    } catch (const CertificateError &e) {
        j["error"] = e.what();
        std::cerr << "certificate failed: " << e.what() << "\n";
    }
    j["certified"] = pass;
    emit(j, c);
    if (human(c)) std::printf("%s\n", pass ? "CERTIFIED" : "FAIL");
    return pass ? ok : failed;
}

int cmd_export(const Common &c, const std::string &name, double r0) {
    const std::string format = c.format.empty() ? "json" : c.format;
    const auto net = build_catalog_shrinker(name, catalog_options(c));
    std::string text;
    if (format == "json") {
        text = network_to_json(net);
    } else if (format == "csv") {
        text = network_to_csv(net);
    } else {
        SvgOptions opt;
        opt.r0 = r0;
        text = network_to_svg(net, opt);
    }
    if (c.out.empty())
        std::cout << text;
    else
        write_atomic(c.out, text);
    return ok;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Regular shrinking networks: catalog, checks, instability certificates, export"};
    app.require_subcommand(1);
    Common common;
    std::string name, only, csv;
    double r0 = 0;

    auto *catalog = app.add_subcommand("catalog", "reproduce the table of shrinker radii");
    add_common(catalog, common);
    catalog->add_option("--only", only, "a single shrinker");
    catalog->add_option("--csv", csv, "also write the table as CSV");

    auto *check = app.add_subcommand("check", "validation, identity and eigenfunction suites");
    add_common(check, common);
    check->add_option("name", name, "catalog shrinker")->required();
    check->add_option("--format", common.format, "stdout format")->check(CLI::IsMember({"text", "json"}));

    auto *stability = app.add_subcommand("stability", "instability certificate");
    add_common(stability, common);
    stability->add_option("name", name, "catalog shrinker")->required();
    stability->add_option("--format", common.format, "stdout format")->check(CLI::IsMember({"text", "json"}));

    auto *exp = app.add_subcommand("export", "write geometry as JSON, CSV or SVG");
    add_common(exp, common);
    exp->add_option("name", name, "catalog shrinker")->required();
    exp->add_option("--format", common.format, "json, csv or svg")->check(CLI::IsMember({"json", "csv", "svg"}));
    exp->add_option("--r0", r0, "SVG: draw the cutoff circle of this radius");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    const std::string which = !only.empty() ? only : name;
    if (!which.empty() && !is_catalog_name(which)) {
        std::cerr << "unknown shrinker '" << which << "'; known:";
        for (auto n : catalog_names) std::cerr << " " << n;
        std::cerr << "\n";
        return usage;
    }

    try {
        if (*catalog) return cmd_catalog(common, only, csv);
        if (*check) return cmd_check(common, name);
        if (*stability) return cmd_stability(common, name);
        if (*exp) return cmd_export(common, name, r0);
    } catch (const IOError &e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_error;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return failed;
    }
    return usage;
}
