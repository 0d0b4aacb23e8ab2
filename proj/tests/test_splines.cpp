#include "sgiga/splines.hpp"
#include "sgiga/quadrature.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <random>

using namespace sgiga;

namespace {

BackgroundGrid unit_grid(int n, double rotation = 0.0) {
    const std::vector<Vec2> square{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    return build_grid(square, 1.0 / n, rotation);
}

/// Independent oracle: plain Cox-de Boor recursion on the same knot lattice.
double cox_de_boor(double origin, double h, int p, int start_knot, double u) {
    if (p == 0) {
        const double a = origin + start_knot * h, b = a + h;
        return (u >= a && u < b) ? 1.0 : 0.0;
    }
    const double a = origin + start_knot * h;
    const double b = origin + (start_knot + p + 1) * h;
    const double left = (u - a) / (p * h) * cox_de_boor(origin, h, p - 1, start_knot, u);
    const double right =
        (b - u) / (p * h) * cox_de_boor(origin, h, p - 1, start_knot + 1, u);
    return left + right;
}

} // namespace

TEST_CASE("bilinear basis at an element center") {
    const SplineSpace space(unit_grid(4), 1);
    const BasisEval b = space.eval(Vec2(0.125, 0.625));
    REQUIRE(b.count == 4);
    for (int i = 0; i < 4; ++i) CHECK(b.val[i] == Catch::Approx(0.25));
}

TEST_CASE("partition of unity and vanishing gradient sums") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int p : {1, 2, 3})
        for (double rot : {0.0, 0.37}) {
            const SplineSpace space(unit_grid(5, rot), p);
            for (int k = 0; k < 300; ++k) {
                const BasisEval b = space.eval(Vec2(dist(rng), dist(rng)));
                REQUIRE(b.count == (p + 1) * (p + 1));
                double s = 0.0;
                Vec2 gs = Vec2::Zero();
                for (int i = 0; i < b.count; ++i) {
                    s += b.val[i];
                    gs += b.grad[i];
                }
                REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
                REQUIRE(gs.norm() < 1e-10);
            }
        }
}

TEST_CASE("values match an independent Cox-de Boor oracle") {
    for (int p : {1, 2, 3}) {
        const BackgroundGrid grid = unit_grid(4);
        const SplineSpace space(grid, p);
        // points including knots (evaluated right-continuously)
        for (double u : {0.0, 0.25, 0.3, 0.5, 0.77, 0.999}) {
            const Vec2 x(u, 0.4);
            const BasisEval b = space.eval(x);
            const Vec2 g = grid.to_grid(x);
            for (int i = 0; i < b.count; ++i) {
                const auto [dx, dy] = space.dof_coords(b.dofs[i]);
                const double vx =
                    cox_de_boor(grid.origin.x(), grid.h, p, dx - p, g.x());
                const double vy =
                    cox_de_boor(grid.origin.y(), grid.h, p, dy - p, g.y());
                REQUIRE(b.val[i] == Catch::Approx(vx * vy).margin(1e-13));
            }
        }
    }
}

TEST_CASE("gradients match finite differences") {
    std::mt19937 rng(22);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (int p : {1, 2, 3}) {
        const SplineSpace space(unit_grid(4, 0.21), p);
        for (int k = 0; k < 200; ++k) {
            const Vec2 x(dist(rng), dist(rng));
            const BasisEval b = space.eval(x);
            const double e = 1e-6;
            const BasisEval bxp = space.eval(x + Vec2(e, 0)), bxm = space.eval(x - Vec2(e, 0));
            const BasisEval byp = space.eval(x + Vec2(0, e)), bym = space.eval(x - Vec2(0, e));
            // only comparable when all evaluations share the element
            if (bxp.dofs[0] != b.dofs[0] || bxm.dofs[0] != b.dofs[0] ||
                byp.dofs[0] != b.dofs[0] || bym.dofs[0] != b.dofs[0])
                continue;
            for (int i = 0; i < b.count; ++i) {
                REQUIRE(b.grad[i].x() ==
                        Catch::Approx((bxp.val[i] - bxm.val[i]) / (2 * e)).margin(1e-6));
                REQUIRE(b.grad[i].y() ==
                        Catch::Approx((byp.val[i] - bym.val[i]) / (2 * e)).margin(1e-6));
            }
        }
    }
}

TEST_CASE("dof support boxes") {
    for (int p : {1, 2, 3}) {
        const BackgroundGrid grid = unit_grid(6);
        const SplineSpace space(grid, p);
        const int dof = space.dof_index(3, 3);
        Vec2 lo, hi;
        space.dof_support(dof, lo, hi);
        CHECK((hi.x() - lo.x()) == Catch::Approx((p + 1) * grid.h));
        CHECK((hi.y() - lo.y()) == Catch::Approx((p + 1) * grid.h));
        // the box is exactly the span of the p+1 supporting elements
        CHECK(lo.x() == Catch::Approx(grid.origin.x() + (3 - p) * grid.h));
    }
}

TEST_CASE("polynomial reproduction through L2 projection") {
    for (int p : {1, 2, 3}) {
        const BackgroundGrid grid = unit_grid(4);
        const SplineSpace space(grid, p);
        const int n = space.ndof();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        const QuadRule rule = gauss_quad(p + 2);

        for (int a = 0; a + 1 <= p; ++a) {} // (monomials enumerated below)
        std::vector<std::pair<int, int>> monos;
        for (int a = 0; a <= p; ++a)
            for (int b = 0; a + b <= p; ++b) monos.emplace_back(a, b);
        Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, monos.size());

        for (int e = 0; e < grid.n_elements(); ++e) {
            Vec2 lo, hi;
            grid.elem_box(e, lo, hi);
            const auto [ex, ey] = grid.elem_coords(e);
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const Vec2 g = lo + grid.h * rule.points[q];
                const Vec2 x = grid.to_ref(g);
                const double w = rule.weights[q] * grid.h * grid.h;
                const BasisEval b = space.eval_in_element(x, ex, ey);
                for (int i = 0; i < b.count; ++i) {
                    for (int j = 0; j < b.count; ++j)
                        M(b.dofs[i], b.dofs[j]) += w * b.val[i] * b.val[j];
                    for (std::size_t m = 0; m < monos.size(); ++m)
                        rhs(b.dofs[i], m) += w * b.val[i] *
                                             std::pow(x.x(), monos[m].first) *
                                             std::pow(x.y(), monos[m].second);
                }
            }
        }
        const Eigen::MatrixXd coef = M.ldlt().solve(rhs);

        // residual of the projection at sample points
        std::mt19937 rng(23);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        for (int k = 0; k < 200; ++k) {
            const Vec2 x(dist(rng), dist(rng));
            const BasisEval b = space.eval(x);
            for (std::size_t m = 0; m < monos.size(); ++m) {
                double v = 0.0;
                for (int i = 0; i < b.count; ++i) v += coef(b.dofs[i], m) * b.val[i];
                const double exact =
                    std::pow(x.x(), monos[m].first) * std::pow(x.y(), monos[m].second);
                REQUIRE(v == Catch::Approx(exact).margin(1e-10));
            }
        }
    }
}

TEST_CASE("C^{p-1} continuity across interior knot lines") {
    for (int p : {1, 2, 3}) {
        const BackgroundGrid grid = unit_grid(4);
        const SplineSpace space(grid, p);
        // interior knot line between spans 2 and 3 on the x axis
        const int span_left = 2;
        const double u0 = grid.origin.x() + (span_left + 1) * grid.h;
        BasisDers1d dl, dr;
        space.eval_1d_ders(0, span_left, u0, p, dl);
        space.eval_1d_ders(0, span_left + 1, u0, p, dr);
        double max_pm1_jump = 0.0, max_p_jump = 0.0;
        for (int d = 0; d <= p + 1; ++d) {
            const auto left = [&](int l) { return d <= p ? dl[l][d] : 0.0; };
            const auto right = [&](int l) { return d >= 1 ? dr[l][d - 1] : 0.0; };
            if (p >= 1)
                max_pm1_jump = std::max(max_pm1_jump, std::abs(left(p - 1) - right(p - 1)));
            max_p_jump = std::max(max_p_jump, std::abs(left(p) - right(p)));
        }
        CHECK(max_pm1_jump < 1e-9);
        CHECK(max_p_jump > 1e-3); // p-th derivative jumps generically
    }
}

TEST_CASE("evaluation outside the grid span is rejected") {
    const SplineSpace space(unit_grid(4), 2);
    CHECK_THROWS_AS(space.eval(Vec2(3.0, 0.5)), invalid_input);
    CHECK_THROWS_AS(SplineSpace(unit_grid(4), 4), invalid_input);
}
