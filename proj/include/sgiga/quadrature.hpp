#pragma once

#include "sgiga/core.hpp"
#include "sgiga/geometry.hpp"
#include "sgiga/mesh.hpp"

#include <array>
#include <vector>

namespace sgiga {

/// Quadrature rule on a reference cell. Points are in reference-cell
/// coordinates ([0,1], [0,1]^2, or the unit triangle {x,y >= 0, x+y <= 1}).
struct QuadRule {
    std::vector<Vec2> points;    // for 1D rules only x() is used
    std::vector<double> weights;
    int exactness = 0;           // polynomial degree integrated exactly
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void legendre_rule(int n, std::array<double, 10>& x, std::array<double, 10>& w) {
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // evaluate P_n(t) and P_n'(t) via the three-term recurrence
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

} // namespace detail

/// n-point Gauss-Legendre rule mapped to [0,1]; exact for degree 2n-1.
inline QuadRule gauss_1d(int n) {
    if (n < 1 || n > 10) throw invalid_input("gauss_1d: point count must be in [1,10]");
    std::array<double, 10> x{}, w{};
    detail::legendre_rule(n, x, w);
    QuadRule rule;
    rule.exactness = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        rule.points.emplace_back(0.5 * (x[i] + 1.0), 0.0);
        rule.weights.push_back(0.5 * w[i]);
    }
    return rule;
}

/// Tensor-product Gauss rule on [0,1]^2 with n points per direction.
inline QuadRule gauss_quad(int n) {
    const QuadRule g = gauss_1d(n);
    QuadRule rule;
    rule.exactness = g.exactness;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            rule.points.emplace_back(g.points[i].x(), g.points[j].x());
            rule.weights.push_back(g.weights[i] * g.weights[j]);
        }
    return rule;
}

/// Rule on the unit triangle built by collapsing a tensor Gauss rule
/// (x, y) -> (x, y(1-x)). Positive weights; exact for total degree 2n-2.
inline QuadRule gauss_triangle(int n) {
    const QuadRule g = gauss_1d(n);
    QuadRule rule;
    rule.exactness = 2 * n - 2;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double s = g.points[i].x();
            const double t = g.points[j].x();
            rule.points.emplace_back(s, t * (1.0 - s));
            rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - s));
        }
    return rule;
}

/// One quadrature point of an interface integral, seen from the side whose
/// boundary term is being assembled. `weight` carries the Gauss weight and
/// the self side's reference arc-length factor.
struct InterfaceQuadPoint {
    double t = 0.0;       // interface parameter
    Vec2 x_self, x_partner;
    int elem_self = -1, elem_partner = -1; // inward owner elements
    double weight = 0.0;
    Vec2 normal_self;     // outward normal of the self side, ref coords
};

/// Point streams for both ordered sides of one interface. The parameter
/// interval is split at every t where either side crosses an element
/// boundary of its own mesh; an n-point Gauss rule is applied per piece.
struct InterfaceQuadrature {
    std::vector<InterfaceQuadPoint> side_i, side_j;
};

namespace detail {

/// Splitting parameters where the straight segment [ga, gb] (grid coords)
/// crosses grid lines.
inline void collect_crossings(const BackgroundGrid& grid, const Vec2& ga, const Vec2& gb,
                              std::vector<double>& ts) {
    for (int axis = 0; axis < 2; ++axis) {
        const double d = gb[axis] - ga[axis];
        if (std::abs(d) < 1e-15) continue;
        const int n = axis == 0 ? grid.nx : grid.ny;
        for (int k = 0; k <= n; ++k) {
            const double t = (grid.origin[axis] + k * grid.h - ga[axis]) / d;
            if (t > 1e-14 && t < 1.0 - 1e-14) ts.push_back(t);
        }
    }
}

inline int inward_owner(const BackgroundGrid& grid, const Vec2& xref, const Vec2& normal) {
    const Vec2 nudged = xref - (1e-9 * grid.h) * normal;
    const auto [ix, iy] = grid.locate(grid.to_grid(nudged));
    return grid.elem_id(ix, iy);
}

} // namespace detail

inline InterfaceQuadrature interface_quadrature(const MultipatchDomain& dom,
                                                const InterfaceCurve& curve,
                                                const PatchMesh& mesh_i,
                                                const PatchMesh& mesh_j, int n) {
    const Patch& pi = dom.patches[curve.patch_i];
    const Patch& pj = dom.patches[curve.patch_j];

    std::vector<double> ts{0.0, 1.0};
    detail::collect_crossings(mesh_i.grid, mesh_i.grid.to_grid(curve.sigma_i(pi, 0.0)),
                              mesh_i.grid.to_grid(curve.sigma_i(pi, 1.0)), ts);
    detail::collect_crossings(mesh_j.grid, mesh_j.grid.to_grid(curve.sigma_j(pj, 0.0)),
                              mesh_j.grid.to_grid(curve.sigma_j(pj, 1.0)), ts);
    std::sort(ts.begin(), ts.end());

    const QuadRule g = gauss_1d(n);
    const double len_i = pi.edge_length(curve.edge_i);
    const double len_j = pj.edge_length(curve.edge_j);
    const Vec2 normal_i = pi.edge_normal(curve.edge_i);
    const Vec2 normal_j = pj.edge_normal(curve.edge_j);

    InterfaceQuadrature out;
    for (std::size_t s = 0; s + 1 < ts.size(); ++s) {
        const double t0 = ts[s], t1 = ts[s + 1];
        if (t1 - t0 < 1e-14) continue;
        for (int q = 0; q < n; ++q) {
            const double t = t0 + g.points[q].x() * (t1 - t0);
            const double wt = g.weights[q] * (t1 - t0);
            const Vec2 xi = curve.sigma_i(pi, t);
            const Vec2 xj = curve.sigma_j(pj, t);
            if ((eval_map(pi.map, xi) - eval_map(pj.map, xj)).norm() > 1e-10)
                throw invalid_input(
                    "interface_quadrature: matching condition violated, geometry inconsistent");
            const int ei = detail::inward_owner(mesh_i.grid, xi, normal_i);
            const int ej = detail::inward_owner(mesh_j.grid, xj, normal_j);
            InterfaceQuadPoint a;
            a.t = t;
            a.x_self = xi;
            a.x_partner = xj;
            a.elem_self = ei;
            a.elem_partner = ej;
            a.weight = wt * len_i;
            a.normal_self = normal_i;
            out.side_i.push_back(a);
            InterfaceQuadPoint b;
            b.t = t;
            b.x_self = xj;
            b.x_partner = xi;
            b.elem_self = ej;
            b.elem_partner = ei;
            b.weight = wt * len_j;
            b.normal_self = normal_j;
            out.side_j.push_back(b);
        }
    }
    return out;
}

} // namespace sgiga
