#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "catalog_cache.hpp"
#include "shrinker_lab/io.hpp"

using namespace shrinker_lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &tag) {
    const fs::path p = fs::temp_directory_path() / ("shrinker_lab_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Run the CLI with stdout/stderr redirected; returns the exit status.
int run(const std::string &args, const fs::path &stdout_file = "/dev/null") {
    const std::string cmd =
        std::string("\"") + SHRINKER_LAB_CLI + "\" " + args + " >\"" + stdout_file.string() + "\" 2>/dev/null";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::size_t entries(const fs::path &dir) {
    return std::distance(fs::directory_iterator(dir), fs::directory_iterator());
}

} // namespace

TEST(NetworkJson, RoundTripPreservesDefects) {
    for (const char *name : {"fish", "rocket", "brakke_spoon", "4_ray_star", "circle"}) {
        SCOPED_TRACE(name);
        const auto &net = cached(name);
        const auto back = network_from_json(network_to_json(net));
        ASSERT_EQ(back.curves.size(), net.curves.size());
        ASSERT_EQ(back.junctions.size(), net.junctions.size());
        for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
            ASSERT_EQ(back.curves[ci].size(), net.curves[ci].size());
            EXPECT_EQ(back.curves[ci].samples.back().x.x, net.curves[ci].samples.back().x.x);
            EXPECT_EQ(back.curves[ci].samples.back().psi, net.curves[ci].samples.back().psi);
        }
        const auto a = validate_network(net), b = validate_network(back);
        EXPECT_EQ(a.passed(), b.passed());
        EXPECT_EQ(a.max_residual, b.max_residual);
        EXPECT_EQ(a.max_balance, b.max_balance);
        EXPECT_EQ(a.max_herring, b.max_herring);
        EXPECT_EQ(a.max_gap, b.max_gap);
        EXPECT_NEAR(symmetry_defect(net), symmetry_defect(back), 1e-15);
        // a second pass is byte-identical
        EXPECT_EQ(network_to_json(back), network_to_json(net));
    }
}

TEST(NetworkJson, FishJunctions) {
    const auto j = Json::parse(network_to_json(cached("fish")));
    ASSERT_EQ(j["junctions"].size(), 2u);
    for (const auto &jn : j["junctions"]) {
        const double r = std::hypot(jn["position"][0].get<double>(), jn["position"][1].get<double>());
        EXPECT_NEAR(r, 0.3546, 1e-3);
        EXPECT_EQ(jn["incident"].size(), 3u);
    }
}

TEST(NetworkJson, RejectsMalformedInput) {
    EXPECT_THROW(network_from_json("{"), IOError);
    EXPECT_THROW(network_from_json("{\"name\": \"x\"}"), IOError);
    auto j = Json::parse(network_to_json(cached("standard_triod")));
    j["junctions"][0]["incident"][0]["curve"] = 99;
    EXPECT_THROW(network_from_json(j.dump()), IOError);
}

TEST(NetworkCsv, CircleCurvature) {
    std::istringstream in(network_to_csv(cached("circle")));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "curve_id,s,x,y,phi,psi,k");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const double k = std::stod(line.substr(line.rfind(',') + 1));
        EXPECT_NEAR(std::abs(k), 1 / std::sqrt(2.0), 1e-12);
        ++rows;
    }
    EXPECT_EQ(rows, cached("circle").curves[0].size());
}

TEST(NetworkSvg, Structure) {
    SvgOptions opt;
    opt.r0 = 4;
    const auto svg = network_to_svg(cached("fish"), opt);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    std::size_t lines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
    EXPECT_EQ(lines, cached("fish").curves.size());
    EXPECT_NE(svg.find("r=\"4\" fill=\"#c22\""), std::string::npos); // junction marker
    EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(WriteAtomic, LeavesNoPartialFile) {
    const auto dir = scratch("atomic");
    write_atomic(dir / "a.txt", "hello");
    EXPECT_EQ(read_file(dir / "a.txt"), "hello");
    EXPECT_THROW(write_atomic(dir / "missing" / "b.txt", "x"), IOError);
    fs::create_directory(dir / "occupied");
    EXPECT_THROW(write_atomic(dir / "occupied", "x"), IOError);
    EXPECT_EQ(entries(dir), 2u);
    EXPECT_EQ(entries(dir / "occupied"), 0u);
    fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("check bogus"), 2);
    EXPECT_EQ(run("catalog --only bogus"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("export fish --format pdf"), 2);
    EXPECT_EQ(run("stability lens"), 3);
    EXPECT_EQ(run("stability circle"), 3);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, UnwritableOutput) {
    const auto dir = scratch("cli_out");
    EXPECT_EQ(run("export triod --out \"" + (dir / "none" / "t.json").string() + "\""), 2); // unknown name first
    EXPECT_EQ(run("export standard_triod --out \"" + (dir / "none" / "t.json").string() + "\""), 4);
    fs::create_directory(dir / "occupied");
    EXPECT_EQ(run("export standard_triod --out \"" + (dir / "occupied").string() + "\""), 4);
    EXPECT_EQ(entries(dir), 1u);
    EXPECT_EQ(entries(dir / "occupied"), 0u);
    fs::remove_all(dir);
}

TEST(Cli, ExportIsDeterministic) {
    const auto dir = scratch("cli_det");
    for (const char *fmt : {"json", "csv", "svg"}) {
        SCOPED_TRACE(fmt);
        const auto a = dir / (std::string("a.") + fmt), b = dir / (std::string("b.") + fmt);
        ASSERT_EQ(run(std::string("export fish --samples 512 --format ") + fmt + " --out \"" + a.string() + "\""), 0);
        ASSERT_EQ(run(std::string("export fish --samples 512 --format ") + fmt, b), 0);
        EXPECT_EQ(read_file(a), read_file(b));
        EXPECT_GT(fs::file_size(a), 1000u);
    }
    const auto net = network_from_json(read_file(dir / "a.json"));
    EXPECT_TRUE(validate_network(net).passed());
    fs::remove_all(dir);
}

TEST(Cli, CheckJsonReport) {
    const auto dir = scratch("cli_check");
    ASSERT_EQ(run("check fish --format json", dir / "fish.json"), 0);
    const auto j = Json::parse(read_file(dir / "fish.json"));
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_EQ(j["name"], "fish");
    EXPECT_LE(j["eigen_residuals"]["k"].get<double>(), 1e-4);
    EXPECT_TRUE(j["junction_flux"]["N_e2"]["passed"].get<bool>());
    fs::remove_all(dir);
}

TEST(Cli, StabilityJsonReport) {
    const auto dir = scratch("cli_stab");
    ASSERT_EQ(run("stability fish --format json", dir / "fish.json"), 0);
    const auto j = Json::parse(read_file(dir / "fish.json"));
    EXPECT_TRUE(j["certified"].get<bool>());
    EXPECT_LT(j["certificate"]["f_tilde_form"].get<double>(), 0);
    EXPECT_GT(j["cutoff"]["margin"].get<double>(), 0);
    fs::remove_all(dir);
}
