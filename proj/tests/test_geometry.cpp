#include "sgiga/geometry.hpp"
#include "sgiga/quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace sgiga;

namespace {

Mat32 fd_jacobian(const ParametricMap& map, const Vec2& x) {
    const double e = 1e-6;
    Mat32 J;
    for (int d = 0; d < 2; ++d) {
        Vec2 dx = Vec2::Zero();
        dx[d] = e;
        J.col(d) = (eval_map(map, x + dx) - eval_map(map, x - dx)) / (2 * e);
    }
    return J;
}

double patch_area(const Patch& patch, int n_cells, int n_gauss) {
    const QuadRule rule = gauss_quad(n_gauss);
    double area = 0.0;
    const double h = 1.0 / n_cells;
    for (int j = 0; j < n_cells; ++j)
        for (int i = 0; i < n_cells; ++i)
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const Vec2 x = h * (Vec2(i, j) + rule.points[q]);
                area += rule.weights[q] * h * h * metric_at(patch.map, x).sqrt_det;
            }
    return area;
}

} // namespace

TEST_CASE("cusp map point values") {
    const ParametricMap cusp = ParametricMap::cusp(2.0);
    const Vec3 F = eval_map(cusp, Vec2(0.5, 0.5));
    CHECK(F.x() == Catch::Approx(0.5).margin(1e-15));
    CHECK(F.y() == Catch::Approx(0.125).margin(1e-15));

    for (double g : {1.0, 2.0, 5.0})
        for (double y : {0.0, 0.3, 1.0}) {
            const Vec3 p = eval_map(ParametricMap::cusp(g), Vec2(1.0, y));
            CHECK(p.x() == Catch::Approx(1.0).margin(1e-15));
            CHECK(p.y() == Catch::Approx(y).margin(1e-15));
        }

    const Vec3 m = eval_map(ParametricMap::collapsed_bilinear(), Vec2(0.0, 1.0));
    CHECK(m.x() == Catch::Approx(0.5).margin(1e-15));
    CHECK(m.y() == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("points outside the reference domain are rejected") {
    const ParametricMap cusp = ParametricMap::cusp(2.0);
    CHECK_THROWS_AS(eval_map(cusp, Vec2(-0.01, 0.5)), invalid_input);
    CHECK_THROWS_AS(eval_map(cusp, Vec2(0.5, 1.01)), invalid_input);
    CHECK_THROWS_AS(eval_jacobian(cusp, Vec2(1.5, 0.0)), invalid_input);
    // within tolerance is fine
    CHECK_NOTHROW(eval_map(cusp, Vec2(-1e-13, 0.5)));
}

TEST_CASE("analytic Jacobians") {
    const ParametricMap cusp2 = ParametricMap::cusp(2.0);
    const Mat32 J = eval_jacobian(cusp2, Vec2(0.5, 0.5));
    CHECK(J(0, 0) == Catch::Approx(1.0));
    CHECK(J(0, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(J(1, 0) == Catch::Approx(0.5));
    CHECK(J(1, 1) == Catch::Approx(0.25));

    const ParametricMap cusp1 = ParametricMap::cusp(1.0);
    for (double y : {0.1, 0.7}) {
        const Mat32 J1 = eval_jacobian(cusp1, Vec2(0.0, y));
        CHECK(J1(0, 0) == Catch::Approx(1.0));
        CHECK(J1(1, 0) == Catch::Approx(y));
        CHECK(J1(1, 1) == Catch::Approx(0.0).margin(1e-15));
    }

    const Mat32 JI = eval_jacobian(ParametricMap::identity(), Vec2(0.3, 0.8));
    CHECK((JI.topRows<2>() - Mat2::Identity()).norm() < 1e-15);
}

TEST_CASE("Jacobians match central finite differences") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> dist(0.01, 0.99);
    std::vector<ParametricMap> maps = {
        ParametricMap::cusp(1.0),     ParametricMap::cusp(2.0),
        ParametricMap::cusp(3.5),     ParametricMap::collapsed_bilinear(),
        ParametricMap::model_patch(2, 2.0), ParametricMap::model_patch(4, 2.0),
        ParametricMap::model_patch(6, 3.0), ParametricMap::model_patch(8, 1.0),
        ParametricMap::ellipsoid_quarter(0), ParametricMap::ellipsoid_quarter(3)};
    for (const ParametricMap& map : maps)
        for (int k = 0; k < 1000; ++k) {
            const Vec2 x(dist(rng), dist(rng));
            const Mat32 diff = eval_jacobian(map, x) - fd_jacobian(map, x);
            REQUIRE(diff.cwiseAbs().maxCoeff() < 1e-6);
        }
}

TEST_CASE("cusp metric closed forms") {
    const ParametricMap cusp = ParametricMap::cusp(2.0);
    for (double y : {0.0, 0.4, 1.0}) {
        const MetricPointData md = metric_at(cusp, Vec2(0.5, y));
        CHECK(md.sqrt_det == Catch::Approx(0.25).epsilon(1e-12));
    }
    const MetricPointData md = metric_at(cusp, Vec2(0.5, 0.5));
    Mat2 G_expect;
    G_expect << 1.25, 0.125, 0.125, 0.0625;
    CHECK((md.G - G_expect).norm() < 1e-14);

    const MetricPointData mi = metric_at(ParametricMap::identity(), Vec2(0.2, 0.9));
    CHECK((mi.G - Mat2::Identity()).norm() < 1e-15);
    CHECK(mi.sqrt_det == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cusp determinant and eigen identities hold everywhere sampled") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double g : {1.0, 2.0, 5.0}) {
        const ParametricMap cusp = ParametricMap::cusp(g);
        for (int k = 0; k < 2000; ++k) {
            const Vec2 x(dist(rng), dist(rng));
            const MetricPointData md = metric_at(cusp, x);
            const double det_expect = std::pow(x.x(), 2 * g);
            if (det_expect > 1e-280) {
                REQUIRE(md.eig.lambda[0] * md.eig.lambda[1] ==
                        Catch::Approx(det_expect).epsilon(1e-10));
            }
            REQUIRE(md.eig.lambda[0] + md.eig.lambda[1] ==
                    Catch::Approx(md.G.trace()).epsilon(1e-13));
        }
    }
}

TEST_CASE("cusp eigenvalue leading orders near the singular side") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dx(1e-6, 1e-3), dy(0.0, 1.0);
    for (double g : {1.0, 2.0, 3.0}) {
        const ParametricMap cusp = ParametricMap::cusp(g);
        for (int k = 0; k < 300; ++k) {
            const double x = dx(rng), y = dy(rng);
            const MetricPointData md = metric_at(cusp, Vec2(x, y));
            const double small = md.eig.lambda[0];
            const double big = md.eig.lambda[1];
            const double x2g = std::pow(x, 2 * g);
            REQUIRE(small / x2g > 0.9);
            REQUIRE(small / x2g < 1.1);
            REQUIRE(big > 0.9);
            REQUIRE(big < 1.1 * (1.0 + g * g * y * y * std::pow(x, 2 * (g - 1))));
        }
    }
}

TEST_CASE("model multipatch domain") {
    for (double g : {1.0, 2.0, 2.5}) {
        const MultipatchDomain dom = build_model_multipatch(g);
        REQUIRE(dom.patches.size() == 8);
        REQUIRE(dom.interfaces.size() == 8);

        // every Interface side appears in exactly one InterfaceCurve
        std::map<std::pair<int, int>, int> seen;
        for (const InterfaceCurve& c : dom.interfaces) {
            seen[{c.patch_i, c.edge_i}]++;
            seen[{c.patch_j, c.edge_j}]++;
        }
        for (int p = 0; p < 8; ++p)
            for (int e = 0; e < 4; ++e) {
                const bool is_if = dom.patches[p].sides[e].kind == SideKind::Interface;
                CHECK(seen[{p, e}] == (is_if ? 1 : 0));
            }

        // total area = 4 by quadrature
        double area = 0.0;
        for (const Patch& p : dom.patches) area += patch_area(p, 16, 4);
        CHECK(area == Catch::Approx(4.0).epsilon(1e-10));

        // matching condition at 100 random parameters per interface
        std::mt19937 rng(42);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        for (const InterfaceCurve& c : dom.interfaces) {
            const Patch& pi = dom.patches[c.patch_i];
            const Patch& pj = dom.patches[c.patch_j];
            for (int k = 0; k < 100; ++k) {
                const double t = dist(rng);
                const Vec3 a = eval_map(pi.map, c.sigma_i(pi, t));
                const Vec3 b = eval_map(pj.map, c.sigma_j(pj, t));
                REQUIRE((a - b).norm() < 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(build_model_multipatch(0.5), invalid_input);
}

TEST_CASE("model patches tile straight-sided pieces at gamma = 1") {
    const MultipatchDomain dom = build_model_multipatch(1.0);
    // at gamma = 1 every edge image is a straight segment: test collinearity
    for (const Patch& p : dom.patches)
        for (int e = 0; e < 4; ++e) {
            const Vec3 a = eval_map(p.map, p.edge_point(e, 0.0));
            const Vec3 b = eval_map(p.map, p.edge_point(e, 1.0));
            for (double t : {0.25, 0.5, 0.75}) {
                const Vec3 m = eval_map(p.map, p.edge_point(e, t));
                const Vec3 expect = a + t * (b - a);
                REQUIRE((m - expect).norm() < 1e-13);
            }
        }
}

TEST_CASE("ellipsoid multipatch domain") {
    const MultipatchDomain dom = build_ellipsoid_multipatch();
    REQUIRE(dom.patches.size() == 4);
    REQUIRE(dom.interfaces.size() == 4);

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (const Patch& p : dom.patches) {
        for (int k = 0; k < 200; ++k) {
            const Vec3 x = eval_map(p.map, Vec2(dist(rng), dist(rng)));
            const double implicit =
                x.x() * x.x() / 9.0 + x.y() * x.y() / 4.0 + x.z() * x.z();
            REQUIRE(implicit == Catch::Approx(1.0).margin(1e-12));
        }
        // collapsed sides carry zero measure
        CHECK(p.sides[0].kind == SideKind::Collapsed);
        CHECK(p.sides[2].kind == SideKind::Collapsed);
        for (double x : {0.0, 0.3, 0.7, 1.0}) {
            CHECK(metric_at(p.map, Vec2(x, 0.0)).sqrt_det < 1e-12);
            CHECK(metric_at(p.map, Vec2(x, 1.0)).sqrt_det < 1e-12);
        }
        // no Dirichlet sides anywhere
        for (const SideClass& s : p.sides) CHECK(s.kind != SideKind::Dirichlet);
    }

    // total surface area against a dense-quadrature reference
    double coarse = 0.0, fine = 0.0;
    for (const Patch& p : dom.patches) {
        coarse += patch_area(p, 16, 4);
        fine += patch_area(p, 60, 8);
    }
    CHECK(fine == Catch::Approx(48.88).margin(0.02));
    CHECK(coarse == Catch::Approx(fine).epsilon(1e-4));
}

TEST_CASE("regularization region of the cusp map") {
    const int n = 256;
    const ParametricMap cusp = ParametricMap::cusp(2.0);
    const double delta = 0.001;
    const auto field = regularization_region(cusp, delta, n);

    // per-row transition within one cell of the exact threshold
    for (int j = 0; j < n; j += 16) {
        const double y = (j + 0.5) / n;
        // bisect lambda_min(x) = delta
        double lo = 1e-8, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (metric_at(cusp, Vec2(mid, y)).eig.lambda[0] < delta ? lo : hi) = mid;
        }
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            if (std::abs(x - lo) <= 1.5 / n) continue;
            REQUIRE(static_cast<bool>(field[j * n + i]) == (x < lo));
        }
        // the analytic strip estimate delta^{1/(2 gamma)}
        CHECK(lo == Catch::Approx(std::pow(delta, 0.25)).margin(0.02));
    }

    // delta = 0 gives the empty region
    const auto empty = regularization_region(cusp, 0.0, 64);
    for (auto v : empty) REQUIRE(v == 0);
}

TEST_CASE("regularization region of the collapsed bilinear map") {
    const int n = 256;
    const double delta = 0.001;
    const auto field = regularization_region(ParametricMap::collapsed_bilinear(), delta, n);
    const double r0 = 2.0 * std::sqrt(delta);
    int mismatched = 0, total = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = (i + 0.5) / n;
            const double y = (j + 0.5) / n;
            const double r = std::hypot(x, y - 1.0);
            if (std::abs(r - r0) <= 3.0 / n) continue; // transition band
            ++total;
            if (static_cast<bool>(field[j * n + i]) != (r < r0)) ++mismatched;
        }
    CHECK(mismatched == 0);
    CHECK(total > 60000);
}
