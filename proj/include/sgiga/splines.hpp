#pragma once

#include "sgiga/core.hpp"
#include "sgiga/grid.hpp"

#include <array>

namespace sgiga {

/// Values and reference-frame gradients of the (p+1)^2 basis functions
/// active at one point.
struct BasisEval {
    static constexpr int max_active = 16;
    int count = 0;
    std::array<int, max_active> dofs{};
    std::array<double, max_active> val{};
    std::array<Vec2, max_active> grad{}; // reference coordinates

    double sum_values() const {
        double s = 0.0;
        for (int i = 0; i < count; ++i) s += val[i];
        return s;
    }
};

/// Table of 1D basis derivatives on one knot span: ders[k][j] is the k-th
/// derivative of the j-th active function (j = 0..p, dof = span + j).
using BasisDers1d = std::array<std::array<double, 4>, 4>;

/// Tensor-product B-spline space of degree p with maximal regularity
/// C^{p-1} on a background grid. Knots are uniform and extend p elements
/// beyond the grid on each side, so every grid cell carries a full set of
/// (p+1)^2 translates and no boundary clamping is involved.
class SplineSpace {
public:
    SplineSpace() = default;
    SplineSpace(const BackgroundGrid& grid, int degree) : grid_(grid), p_(degree) {
        if (degree < 1 || degree > 3)
            throw invalid_input("SplineSpace: degree must be in {1,2,3}");
        ndof_x_ = grid.nx + p_;
        ndof_y_ = grid.ny + p_;
    }

    const BackgroundGrid& grid() const { return grid_; }
    int degree() const { return p_; }
    int ndof_x() const { return ndof_x_; }
    int ndof_y() const { return ndof_y_; }
    int ndof() const { return ndof_x_ * ndof_y_; }
    int dof_index(int dx, int dy) const { return dy * ndof_x_ + dx; }
    std::pair<int, int> dof_coords(int dof) const { return {dof % ndof_x_, dof / ndof_x_}; }

    /// Support rectangle of a basis function, in grid coordinates.
    void dof_support(int dof, Vec2& lo, Vec2& hi) const {
        const auto [dx, dy] = dof_coords(dof);
        lo = grid_.origin + grid_.h * Vec2(dx - p_, dy - p_);
        hi = grid_.origin + grid_.h * Vec2(dx + 1, dy + 1);
    }

    /// 1D derivative table on the given span along one axis, evaluated at
    /// grid coordinate u (which may sit outside the span: evaluation then
    /// extends that span's polynomial, used for one-sided face values).
    void eval_1d_ders(int axis, int span, double u, int nder, BasisDers1d& ders) const {
        const double o = axis == 0 ? grid_.origin.x() : grid_.origin.y();
        ders_basis_funs(span, u, nder, o, ders);
    }

    BasisEval eval(const Vec2& xref) const {
        const Vec2 g = grid_.to_grid(xref);
        if (!grid_.in_span(g, point_tol * std::max(1.0, grid_.h)))
            throw invalid_input("SplineSpace::eval: point outside the grid span");
        const auto [ex, ey] = grid_.locate(g);
        return eval_in_element(xref, ex, ey);
    }

    /// Evaluation with a forced owning element, for points on knot lines
    /// where the one-sided polynomial piece matters.
    BasisEval eval_in_element(const Vec2& xref, int ex, int ey) const {
        const Vec2 g = grid_.to_grid(xref);
        BasisDers1d bx, by;
        eval_1d_ders(0, ex, g.x(), 1, bx);
        eval_1d_ders(1, ey, g.y(), 1, by);

        BasisEval out;
        out.count = (p_ + 1) * (p_ + 1);
        int m = 0;
        for (int j = 0; j <= p_; ++j)
            for (int i = 0; i <= p_; ++i, ++m) {
                out.dofs[m] = dof_index(ex + i, ey + j);
                out.val[m] = bx[0][i] * by[0][j];
                const Vec2 grad_grid(bx[1][i] * by[0][j], bx[0][i] * by[1][j]);
                out.grad[m] = grid_.dir_to_ref(grad_grid);
            }
        return out;
    }

private:
    // Cox-de Boor triangle with derivatives (band-limited to the p+1 active
    // functions of one span). Knots are the uniform lattice o + k*h.
    void ders_basis_funs(int span, double u, int n, double origin, BasisDers1d& out) const {
        const int p = p_;
        const double h = grid_.h;
        auto knot = [origin, h](int k) { return origin + k * h; };

        double ndu[4][4], a[2][4], left[4], right[4];
        ndu[0][0] = 1.0;
        for (int j = 1; j <= p; ++j) {
            left[j] = u - knot(span + 1 - j);
            right[j] = knot(span + j) - u;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                ndu[j][r] = right[r + 1] + left[j - r];
                const double temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        for (int j = 0; j <= p; ++j) out[0][j] = ndu[j][p];

        for (int r = 0; r <= p; ++r) {
            int s1 = 0, s2 = 1;
            a[0][0] = 1.0;
            for (int k = 1; k <= n; ++k) {
                double d = 0.0;
                const int rk = r - k, pk = p - k;
                if (r >= k) {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                const int j1 = rk >= -1 ? 1 : -rk;
                const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
                for (int j = j1; j <= j2; ++j) {
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                    d += a[s2][j] * ndu[rk + j][pk];
                }
                if (r <= pk) {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                out[k][r] = d;
                std::swap(s1, s2);
            }
        }
        double f = p;
        for (int k = 1; k <= n; ++k) {
            for (int j = 0; j <= p; ++j) out[k][j] *= f;
            f *= (p - k);
        }
    }

    BackgroundGrid grid_;
    int p_ = 1;
    int ndof_x_ = 0, ndof_y_ = 0;
};

} // namespace sgiga
