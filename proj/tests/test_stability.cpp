#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "catalog_cache.hpp"
#include "oracles.hpp"
#include "shrinker_lab/stability.hpp"

using namespace shrinker_lab;

namespace {

const std::vector<std::string> shot = {"3_ray_star", "4_ray_star", "5_ray_star", "brakke_spoon",
                                       "lens",       "fish",       "rocket"};
const std::vector<std::string> unstable = {"4_ray_star", "5_ray_star", "fish", "rocket"};

std::vector<double> sample(const NetworkCurve &c, double (*g)(const CurveSample &)) {
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = g(c.samples[i]);
    return v;
}

// Admissible per-curve constants: the kernel of the junction constraint.
Eigen::MatrixXd constant_kernel(const ShrinkerNetwork &net) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(Eigen::Index(net.junctions.size()), Eigen::Index(net.curves.size()));
    for (std::size_t j = 0; j < net.junctions.size(); ++j)
        for (const auto &inc : net.junctions[j].incident) K(Eigen::Index(j), inc.curve) += inc.eta;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    return lu.kernel();
}

// Random admissible data: geometric eigenfunctions, admissible constants, and
// bumps vanishing near the ends of bounded curves.
VariationFunction random_admissible(const ShrinkerNetwork &net, std::mt19937 &rng) {
    std::uniform_real_distribution<double> u(-1, 1);
    const auto ker = constant_kernel(net);
    Eigen::VectorXd consts = Eigen::VectorXd::Zero(Eigen::Index(net.curves.size()));
    if (ker.cols() > 0 && ker.norm() > 0)
        for (Eigen::Index c = 0; c < ker.cols(); ++c) consts += u(rng) * ker.col(c);
    const double ak = u(rng);
    const Vec2 an{u(rng), u(rng)};
    VariationFunction f;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        const auto &c = net.curves[ci];
        if (!c.bounded()) {
            auto rep = CurveRep::geometric(ak, an);
            rep.value = consts(Eigen::Index(ci));
            f.curves.push_back(rep);
            continue;
        }
        const double amp = u(rng), freq = 1 + 3 * (u(rng) + 1);
        const double s0 = c.samples.front().s, L = c.samples.back().s - s0;
        std::vector<double> d(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto &p = c.samples[i];
            const double t = (p.s - s0) / L;
            const double bump = c.closed ? std::sin(2 * oracle::pi * t) : std::pow(std::sin(oracle::pi * t), 4);
            d[i] = consts(Eigen::Index(ci)) + ak * p.k + dot(an, p.N) + amp * bump * std::cos(freq * t);
        }
        f.curves.push_back(CurveRep::sampled(d));
    }
    f.y = {u(rng), u(rng)};
    f.h = u(rng);
    return f;
}

// Fourth-order interior, second-order on the first and last two samples.
double stencil_tol(std::size_t i, std::size_t n, double scale) {
    const bool edge = i < 2 || i + 2 >= n;
    return (edge ? 1e-4 : 1e-6) * std::max(1.0, std::abs(scale));
}

} // namespace

TEST(DriftLaplacian, ConstantsAreAnnihilated) {
    for (const auto &c : cached("fish").curves) {
        const auto L = drift_laplacian(c, std::vector<double>(c.size(), 3.7));
        for (double x : L) EXPECT_LE(std::abs(x), 1e-6);
    }
}

TEST(DriftLaplacian, CoordinatesOnFish) {
    for (const auto &c : cached("fish").curves) {
        const auto x1 = sample(c, [](const CurveSample &p) { return p.x.x; });
        const auto x2 = sample(c, [](const CurveSample &p) { return p.x.y; });
        const auto L1 = drift_laplacian(c, x1), L2 = drift_laplacian(c, x2);
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_LE(std::abs(L1[i] + 0.5 * x1[i]), 1e-4);
            EXPECT_LE(std::abs(L2[i] + 0.5 * x2[i]), 1e-4);
        }
    }
}

TEST(DriftLaplacian, SquaredRadiusOnStarArcs) {
    for (const auto &c : cached("4_ray_star").curves) {
        if (!c.bounded()) continue;
        const auto r2 = sample(c, [](const CurveSample &p) { return norm2(p.x); });
        const auto L = drift_laplacian(c, r2);
        for (std::size_t i = 0; i < c.size(); ++i) EXPECT_LE(std::abs(L[i] - (2 - r2[i])), 1e-4);
    }
}

TEST(DriftLaplacian, MatchesFourthOrderOracleForAmbientPolynomial) {
    for (const auto &name : {"fish", "rocket", "lens"}) {
        for (const auto &c : cached(name).curves) {
            if (!c.bounded()) continue;
            const auto f = sample(c, [](const CurveSample &p) {
                return p.x.x * p.x.x * p.x.x - 2 * p.x.x * p.x.y + 0.5 * p.x.y * p.x.y;
            });
            const auto d1 = oracle::d1_4(f, c.spacing()), d2 = oracle::d2_4(f, c.spacing());
            const auto L = drift_laplacian(c, f);
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double ref = d2[i] - 0.5 * dot(c.samples[i].x, c.samples[i].T) * d1[i];
                EXPECT_NEAR(L[i], ref, stencil_tol(i, c.size(), ref)) << name << " sample " << i;
            }
        }
    }
}

TEST(DriftLaplacian, RejectsTooFewSamples) {
    const auto c = make_ray({0, 0}, {1, 0}, 1, 3);
    EXPECT_THROW(drift_laplacian(c, std::vector<double>(c.size(), 1.0)), ResolutionError);
    const auto &fish = cached("fish");
    EXPECT_THROW(drift_laplacian(fish.curves[0], std::vector<double>(7, 1.0)), ResolutionError);
}

TEST(StabilityOperator, GeometricEigenfunctionsOnCatalog) {
    for (const auto &name : shot) {
        const auto r = eigen_residuals(cached(name));
        EXPECT_LE(r.k, 1e-4) << name;
        EXPECT_LE(r.e1, 1e-4) << name;
        EXPECT_LE(r.e2, 1e-4) << name;
    }
}

TEST(StabilityOperator, ResidualsDecayAtSecondOrder) {
    for (const auto &name : shot) {
        const auto a = eigen_residuals(cached(name, 512)), b = eigen_residuals(cached(name, 1024));
        EXPECT_GE(std::log2(a.k / b.k), 1.75) << name;
        EXPECT_GE(std::log2(a.e1 / b.e1), 1.75) << name;
        EXPECT_GE(std::log2(a.e2 / b.e2), 1.75) << name;
    }
    // still above the roundoff floor at the default grid for the 4-ray star
    const auto a = eigen_residuals(cached("4_ray_star", 2048)), b = eigen_residuals(cached("4_ray_star", 4096));
    EXPECT_LT(b.k, a.k);
    EXPECT_LT(b.e1, a.e1);
    EXPECT_LT(b.e2, a.e2);
}

TEST(StabilityOperator, CircleCurvatureAndTangentialPart) {
    const auto &c = cached("circle").curves[0];
    const auto k = sample(c, [](const CurveSample &p) { return p.k; });
    const auto Lk = stability_operator(c, k);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(Lk[i], k[i], 1e-9);
    const auto xt = sample(c, [](const CurveSample &p) { return dot(p.x, p.T); });
    const auto L = stability_operator(c, xt);
    for (double x : L) EXPECT_LE(std::abs(x), 1e-9);
}

TEST(EigenBoundary, CurvatureFluxVanishesOnFish) {
    const auto &net = cached("fish");
    const auto rep = eigen_boundary_check(net, VariationFunction::geometric(net, 1, {}));
    EXPECT_TRUE(rep.passed());
    for (const auto &j : rep.junctions)
        for (double f : j.flux) EXPECT_LE(std::abs(f), 1e-6);
}

TEST(EigenBoundary, NormalComponentOnRocket) {
    const auto &net = cached("rocket");
    const auto rep = eigen_boundary_check(net, VariationFunction::geometric(net, 0, {0, 1}));
    EXPECT_TRUE(rep.passed());
    for (std::size_t j = 0; j < net.junctions.size(); ++j) {
        const Vec2 O = net.junctions[j].position;
        // -<grad e, R e2> with grad e = -x e / 2
        const double expect = -0.5 * O.x * std::exp(-0.25 * norm2(O));
        EXPECT_LE(rep.junctions[j].spread, 1e-4);
        EXPECT_NEAR(rep.junctions[j].common, expect, 1e-5);
    }
}

TEST(EigenBoundary, GeometricEigenfunctionsOnCatalog) {
    for (const auto &name : shot) {
        const auto &net = cached(name);
        EXPECT_TRUE(eigen_boundary_check(net, VariationFunction::geometric(net, 1, {})).passed()) << name;
        EXPECT_TRUE(eigen_boundary_check(net, VariationFunction::geometric(net, 0, {1, 0})).passed()) << name;
        EXPECT_TRUE(eigen_boundary_check(net, VariationFunction::geometric(net, 0, {0, 1})).passed()) << name;
    }
}

TEST(EigenBoundary, ReportsConstructedDefect) {
    const auto &net = cached("3_ray_star");
    auto f = VariationFunction::zero(net);
    f.curves[0] = CurveRep::constant(1);
    const auto rep = eigen_boundary_check(net, f);
    EXPECT_NEAR(rep.max_sum_defect, 1.0, 1e-14);
    EXPECT_FALSE(rep.passed());
}

TEST(Lift, ZeroDataGivesZeroField) {
    const auto &net = cached("fish");
    const auto F = lift_normal_data(net, VariationFunction::zero(net), 0.3);
    for (const auto &V : F.V)
        for (const auto &x : V) EXPECT_EQ(norm(x), 0.0);
}

TEST(Lift, FishCurvatureLimitsAgree) {
    const auto &net = cached("fish");
    const auto v = VariationFunction::geometric(net, 1, {});
    const auto F = lift_normal_data(net, v, 0.3);
    for (const auto &j : net.junctions) {
        Vec2 expect;
        for (const auto &inc : j.incident) {
            const auto &p = net.curves[std::size_t(inc.curve)].at(inc.end);
            expect += (2.0 / 3.0) * p.k * p.N;
        }
        for (const auto &inc : j.incident) {
            const auto &V = F.V[std::size_t(inc.curve)];
            EXPECT_LE(norm((inc.end == End::start ? V.front() : V.back()) - expect), 1e-8);
        }
    }
    EXPECT_LE(junction_continuity_defect(net, F), 1e-8);
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci)
        for (std::size_t i = 0; i < net.curves[ci].size(); ++i)
            EXPECT_NEAR(dot(F.V[ci][i], net.curves[ci].samples[i].N), net.curves[ci].samples[i].k, 1e-14);
}

TEST(Lift, StarConstantsAreContinuous) {
    const auto &net = cached("4_ray_star");
    const auto ker = constant_kernel(net);
    ASSERT_EQ(ker.cols(), 4);
    for (Eigen::Index c = 0; c < ker.cols(); ++c) {
        std::vector<double> vals(ker.rows());
        for (Eigen::Index i = 0; i < ker.rows(); ++i) vals[std::size_t(i)] = ker(i, c);
        const auto F = lift_normal_data(net, VariationFunction::constants(vals), 0.2);
        EXPECT_LE(junction_continuity_defect(net, F), 1e-8);
    }
}

TEST(Lift, RejectsInadmissibleData) {
    const auto &net = cached("4_ray_star");
    auto f = VariationFunction::zero(net);
    f.curves[0] = CurveRep::constant(1);
    EXPECT_THROW(lift_normal_data(net, f, 0.2), AdmissibilityError);
    EXPECT_THROW(bilinear_form(net, f, f), AdmissibilityError);
    EXPECT_THROW(second_variation(net, f, f), AdmissibilityError);
}

TEST(BilinearForm, SymmetricOnRandomAdmissiblePairs) {
    std::mt19937 rng(2024);
    for (const auto &name : shot) {
        const auto &net = cached(name);
        for (int t = 0; t < 20; ++t) {
            const auto v = random_admissible(net, rng), w = random_admissible(net, rng);
            EXPECT_LE(std::abs(bilinear_form(net, v, w) - bilinear_form(net, w, v)), 1e-8) << name;
        }
    }
}

TEST(BilinearForm, TwoExpressionsAgreeOnGeometricData) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-1, 1);
    for (const auto &name : catalog_names) {
        const auto &net = cached(std::string(name));
        const auto ker = constant_kernel(net);
        auto make = [&] {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(Eigen::Index(net.curves.size()));
            if (ker.norm() > 0)
                for (Eigen::Index q = 0; q < ker.cols(); ++q) c += u(rng) * ker.col(q);
            const double ak = u(rng);
            const Vec2 an{u(rng), u(rng)};
            VariationFunction f;
            for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
                auto rep = CurveRep::geometric(ak, an);
                rep.value = c(Eigen::Index(ci));
                f.curves.push_back(rep);
            }
            return f;
        };
        for (int t = 0; t < 20; ++t) {
            const auto v = make(), w = make();
            EXPECT_LE(std::abs(bilinear_form(net, v, w) - bilinear_form_divergence(net, v, w)), 1e-6) << name;
        }
    }
}

TEST(BilinearForm, TwoExpressionsAgreeOnSampledData) {
    std::mt19937 rng(2025);
    for (const auto &name : shot) {
        const auto &net = cached(name);
        for (int t = 0; t < 20; ++t) {
            const auto v = random_admissible(net, rng), w = random_admissible(net, rng);
            EXPECT_LE(std::abs(bilinear_form(net, v, w) - bilinear_form_divergence(net, v, w)), 1e-6) << name;
            EXPECT_LE(std::abs(bilinear_form_divergence(net, v, w) - bilinear_form_divergence(net, w, v)), 1e-6)
                << name;
        }
    }
}

TEST(BilinearForm, IntegrationByPartsWithAmbientPolynomials) {
    // [[v Lw]] = -[[<grad v, grad w>]] for v, w restrictions of polynomials
    auto v = [](Vec2 x) { return x.x * x.x - 0.3 * x.y; };
    auto gv = [](Vec2 x) { return Vec2{2 * x.x, -0.3}; };
    auto w = [](Vec2 x) { return x.x * x.y + 0.5 * x.y * x.y * x.y; };
    auto gw = [](Vec2 x) { return Vec2{x.y, x.x + 1.5 * x.y * x.y}; };
    auto hw = [](Vec2 x, Vec2 T) { return 2 * T.x * T.y + 3 * x.y * T.y * T.y; };
    for (const auto &name : shot) {
        const auto &net = cached(name);
        const double lhs = bracket(
            net,
            [&](const CurveSample &p) {
                const double Lw = hw(p.x, p.T) + p.k * dot(gw(p.x), p.N) - 0.5 * dot(p.x, p.T) * dot(gw(p.x), p.T);
                return v(p.x) * Lw;
            },
            6);
        const double rhs = -bracket(
            net, [&](const CurveSample &p) { return dot(gv(p.x), p.T) * dot(gw(p.x), p.T); }, 4);
        EXPECT_NEAR(lhs, rhs, 1e-6) << name;

        // the finite-difference operator reproduces the analytic one
        for (const auto &c : net.curves) {
            if (!c.bounded()) continue;
            std::vector<double> ws(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) ws[i] = w(c.samples[i].x);
            const auto L = drift_laplacian(c, ws);
            for (std::size_t i = 0; i < c.size(); ++i) {
                const auto &p = c.samples[i];
                const double Lw = hw(p.x, p.T) + p.k * dot(gw(p.x), p.N) - 0.5 * dot(p.x, p.T) * dot(gw(p.x), p.T);
                EXPECT_NEAR(L[i], Lw, stencil_tol(i, c.size(), Lw)) << name;
            }
        }
    }
}

TEST(BilinearForm, CurvatureAgainstNormalComponentOnFish) {
    const auto &net = cached("fish");
    const auto k = VariationFunction::geometric(net, 1, {});
    const auto f2 = VariationFunction::geometric(net, 0, {0, 1});
    const double direct = bracket(net, [](const CurveSample &p) { return p.k * p.N.y; }, 0);
    EXPECT_NEAR(bilinear_form(net, k, f2), -direct, 1e-6);
    EXPECT_NEAR(bilinear_form(net, f2, k), -direct, 1e-6);
}

TEST(BilinearForm, SingleRayContribution) {
    const auto &net = cached("4_ray_star");
    const double a = 0.944375;
    for (std::size_t ci = 0; ci < net.curves.size(); ++ci) {
        if (net.curves[ci].bounded()) continue;
        auto f = VariationFunction::zero(net);
        f.curves[ci] = CurveRep::constant(1);
        const double got = curve_contribution(net, f, f, ci) / sqrt_4pi;
        const double ref =
            oracle::semi_infinite([](double r) { return (-1 + 0.25 * r * r) * std::exp(-0.25 * r * r); }, a) /
            std::sqrt(4 * oracle::pi);
        EXPECT_NEAR(got, ray_stability_integral(a) / sqrt_4pi, 1e-5);
        EXPECT_NEAR(got, ref, 1e-5);
        EXPECT_LT(got, 0);
    }
}

TEST(BilinearForm, StarArcsInsideUnitCircle) {
    const auto &net = cached("4_ray_star");
    for (const auto &c : net.curves) {
        if (!c.bounded()) continue;
        for (const auto &p : c.samples) {
            EXPECT_LT(norm(p.x), 1.0);
            EXPECT_LE(-1 + 0.25 * dot(p.x, p.T) * dot(p.x, p.T), -0.75);
        }
    }
}

TEST(SecondVariation, TranslationsOnFish) {
    const auto &net = cached("fish");
    auto a = VariationFunction::zero(net);
    a.y = {0, 1};
    const double q = second_variation(net, a, a);
    const double r1 = bracket(net, [](const CurveSample &p) { return 0.25 * p.x.y * p.x.y - 0.5; }, 2);
    const double r2 = bracket(net, [](const CurveSample &p) { return 0.5 * p.T.y * p.T.y - 0.5; }, 0);
    EXPECT_NEAR(q, r1, 1e-10);
    EXPECT_NEAR(q, r2, 1e-6);
    EXPECT_LE(q, 0);
}

TEST(SecondVariation, TimeDirection) {
    const auto &net = cached("lens");
    auto a = VariationFunction::zero(net), b = VariationFunction::zero(net);
    a.h = 0.7;
    b.h = 1.3;
    const double k2 = bracket(net, [](const CurveSample &p) { return p.k * p.k; }, 0);
    EXPECT_NEAR(second_variation(net, a, b), -0.7 * 1.3 * k2, 1e-12);
    EXPECT_LT(second_variation(net, a, b), 0);
}

TEST(SecondVariation, SymmetricUnderSwap) {
    std::mt19937 rng(99);
    for (const auto &name : shot) {
        const auto &net = cached(name);
        for (int t = 0; t < 5; ++t) {
            const auto v = random_admissible(net, rng), w = random_admissible(net, rng);
            EXPECT_LE(std::abs(second_variation(net, v, w) - second_variation(net, w, v)), 1e-8) << name;
        }
    }
}

TEST(StarCertificate, DimensionsAndNegativity) {
    for (const auto &[name, dim] : std::vector<std::pair<std::string, int>>{{"4_ray_star", 4}, {"5_ray_star", 5}}) {
        const auto &net = cached(name);
        const auto q = star_certificate(net);
        EXPECT_EQ(q.gram.rows(), dim);
        EXPECT_EQ(q.basis.size(), std::size_t(dim));
        EXPECT_LT(q.gram_eigenvalues.maxCoeff(), -0.01) << name;
        EXPECT_LE(q.gram_symmetry_defect, 1e-8);
        for (double o : q.orthogonality) EXPECT_LE(std::abs(o), 1e-8) << name;
        EXPECT_LT(q.f_tilde_form, 0);
        EXPECT_NEAR(inner_product(net, q.f_tilde, q.f_tilde), 1.0, 1e-12);
        EXPECT_NEAR(second_variation(net, q.f_tilde, q.f_tilde), q.f_tilde_form, 1e-12);
        EXPECT_TRUE(q.certified);
        for (std::size_t a = 0; a < q.basis.size(); ++a)
            for (std::size_t b = 0; b < q.basis.size(); ++b)
                EXPECT_NEAR(inner_product(net, q.basis[a], q.basis[b]), a == b ? 1.0 : 0.0, 1e-10);
    }
}

TEST(StarCertificate, RefusesOtherNetworks) {
    EXPECT_THROW(star_certificate(cached("lens")), DomainError);
    EXPECT_THROW(star_certificate(cached("3_ray_star")), DomainError);
    EXPECT_THROW(fish_rocket_certificate(cached("lens")), DomainError);
    EXPECT_THROW(fish_rocket_certificate(cached("4_ray_star")), DomainError);
}

TEST(FishRocket, Coefficients) {
    struct Row {
        const char *name;
        double A, B, bound, bound_disc;
    };
    for (const Row &r : {Row{"fish", -0.6149, 0.0554, -0.08562, -0.049}, Row{"rocket", -0.7542, 0.2050, -0.1417, -0.064}}) {
        const auto &net = cached(r.name);
        const auto q = fish_rocket_certificate(net);
        ASSERT_TRUE(q.coefficients);
        const auto &co = *q.coefficients;
        EXPECT_NEAR(co.A_closed, co.A_quadrature, 1e-4) << r.name;
        EXPECT_NEAR(co.B_closed, co.B_quadrature, 1e-4) << r.name;
        EXPECT_NEAR(co.A_closed, r.A, 1e-3) << r.name;
        EXPECT_NEAR(co.B_closed, r.B, 1e-3) << r.name;
        EXPECT_LT(co.C_quadrature, 0) << r.name;
        EXPECT_LT(co.discriminant, 0) << r.name;
        EXPECT_NEAR(co.C_bound_printed, r.bound, 1e-3) << r.name;
        EXPECT_NEAR(co.bound_discriminant, r.bound_disc, 1e-2) << r.name;
        EXPECT_NEAR(co.C_quadrature, co.C_gradient_form, 1e-8) << r.name;

        // total turning of the upper arcs
        double turn = 0;
        for (std::size_t ci : std::string(r.name) == "rocket" ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{0})
            turn += std::abs(net.curves[ci].arc->turn());
        EXPECT_NEAR(turn, co.delta_phi, 1e-8) << r.name;
    }
}

TEST(FishRocket, CoefficientCAgainstAnalyticDerivative) {
    for (const auto &name : {"fish", "rocket"}) {
        const auto &net = cached(name);
        const auto co = *fish_rocket_certificate(net).coefficients;
        const std::vector<std::size_t> top = std::string(name) == "rocket" ? std::vector<std::size_t>{0, 1}
                                                                           : std::vector<std::size_t>{0};
        double C = 0;
        for (std::size_t ci : top) {
            const auto &c = net.curves[ci];
            std::vector<double> g(c.size());
            for (std::size_t i = 0; i < c.size(); ++i)
                g[i] = c.samples[i].N.y * c.samples[i].N.y * std::exp(-0.25 * norm2(c.samples[i].x));
            C -= 0.5 * oracle::simpson(g, c.spacing());
            for (End e : {End::start, End::end}) {
                const auto &p = c.at(e);
                const double sgn = e == End::start ? 1 : -1;
                const Vec2 T = sgn * p.T;
                const double df = sgn * (-p.k * p.T.y); // d/ds <N,e2> = -k <T,e2>
                C -= p.N.y * (df - 0.5 * p.N.y * dot(p.x, T)) * std::exp(-0.25 * norm2(p.x));
            }
        }
        EXPECT_NEAR(co.C_quadrature, C, 1e-5) << name;
        if (std::string(name) == "rocket") {
            EXPECT_LE(std::abs(co.C_upper_junction), 1e-5);
        }
    }
}

TEST(FishRocket, Certificate) {
    for (const auto &name : {"fish", "rocket"}) {
        const auto &net = cached(name);
        const auto q = fish_rocket_certificate(net);
        EXPECT_EQ(q.gram.rows(), 3);
        EXPECT_LT(q.gram_eigenvalues.maxCoeff(), 0) << name;
        for (double o : q.orthogonality) EXPECT_LE(std::abs(o), 1e-8) << name;
        EXPECT_LT(q.f_tilde_form, 0);
        EXPECT_LE(admissibility_defect(net, q.f_tilde), 1e-10);
        EXPECT_TRUE(q.certified);
    }
}

TEST(Cutoff, FourUnstableShrinkers) {
    for (const auto &name : unstable) {
        const auto &net = cached(name);
        const auto q = net.name.find("star") != std::string::npos ? star_certificate(net) : fish_rocket_certificate(net);
        const auto rep = cutoff_certificate(net, q);
        EXPECT_LE(rep.r0, 10) << name;
        EXPECT_GT(rep.margin, 0) << name;
        EXPECT_EQ(rep.grid.size(), 125u);
        for (const auto &g : rep.grid) EXPECT_LT(g.Q, 0) << name;
        EXPECT_TRUE(rep.certified) << name;
        EXPECT_LE(std::abs(rep.form_cut - rep.form_uncut), rep.tail_bound) << name;
        if (name == "fish") EXPECT_LE(rep.r0, 6);

        // tail bound against independent quadrature over the radial rays
        double asum = 0;
        for (std::size_t ci = 0; ci < net.curves.size(); ++ci)
            if (!net.curves[ci].bounded()) {
                const double a = ray_value(net, q.f_tilde, ci);
                asum += a * a;
            }
        const double ref =
            asum * oracle::semi_infinite([](double r) { return (2 * r + 10) * std::exp(-0.25 * r * r); }, rep.r0);
        EXPECT_NEAR(rep.tail_bound, ref, 1e-10) << name;
        // smallest admissible grid radius
        if (rep.r0 > rep.r0_start + 1e-9) {
            const double r = rep.r0 - 0.1;
            const double prev = asum * (4 * std::exp(-0.25 * r * r) + 10 * std::sqrt(oracle::pi) * std::erfc(r / 2));
            EXPECT_GE(prev, 0.5 * std::abs(q.f_tilde_form)) << name;
        }
    }
}

TEST(Cutoff, ScalarsReproduceSecondVariation) {
    const auto &net = cached("4_ray_star");
    const auto q = star_certificate(net);
    const auto rep = cutoff_certificate(net, q);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 5; ++t) {
        auto f = q.f_tilde;
        f.y = {u(rng), u(rng)};
        f.h = u(rng);
        const Eigen::Vector2d y(f.y.x, f.y.y);
        const double b = 2 * (0.5 * f.y.x * q.orthogonality[1] + 0.5 * f.y.y * q.orthogonality[2]);
        const double model = q.f_tilde_form + b - 2 * f.h * q.orthogonality[0] - f.h * f.h * rep.k2 + y.dot(rep.M * y);
        EXPECT_NEAR(second_variation(net, f, f), model, 1e-10);
    }
}

TEST(Cutoff, RejectsNonNegativeForm) {
    const auto &net = cached("4_ray_star");
    QuadraticFormReport q;
    q.f_tilde = VariationFunction::zero(net);
    q.f_tilde_form = 0;
    EXPECT_THROW(cutoff_certificate(net, q), CertificateError);
}
