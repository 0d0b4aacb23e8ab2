#pragma once

#include "sgiga/core.hpp"

#include <vector>

namespace sgiga {

/// Structured quadrilateral background grid over a reference domain.
/// The grid frame is rotated by `angle` about `center`; cells are axis
/// aligned in grid coordinates g = R^T (x - center).
struct BackgroundGrid {
    Vec2 center = Vec2(0.5, 0.5);
    double angle = 0.0;
    double h = 1.0;
    Vec2 origin = Vec2::Zero(); // min corner of cell (0,0), grid coords
    int nx = 0, ny = 0;
    double cos_a = 1.0, sin_a = 0.0;

    Vec2 to_grid(const Vec2& x) const {
        const Vec2 d = x - center;
        return {cos_a * d.x() + sin_a * d.y(), -sin_a * d.x() + cos_a * d.y()};
    }
    Vec2 to_ref(const Vec2& g) const {
        return {center.x() + cos_a * g.x() - sin_a * g.y(),
                center.y() + sin_a * g.x() + cos_a * g.y()};
    }
    /// Rotate a vector from grid frame to reference frame.
    Vec2 dir_to_ref(const Vec2& v) const {
        return {cos_a * v.x() - sin_a * v.y(), sin_a * v.x() + cos_a * v.y()};
    }

    int n_elements() const { return nx * ny; }
    int elem_id(int ix, int iy) const { return iy * nx + ix; }
    std::pair<int, int> elem_coords(int e) const { return {e % nx, e / nx}; }

    /// Cell index containing a grid point; floor gives right-continuity on
    /// grid lines, clamping gives left-continuity at the top span end.
    std::pair<int, int> locate(const Vec2& g) const {
        int ix = static_cast<int>(std::floor((g.x() - origin.x()) / h));
        int iy = static_cast<int>(std::floor((g.y() - origin.y()) / h));
        ix = std::clamp(ix, 0, nx - 1);
        iy = std::clamp(iy, 0, ny - 1);
        return {ix, iy};
    }

    void elem_box(int e, Vec2& lo, Vec2& hi) const {
        const auto [ix, iy] = elem_coords(e);
        lo = origin + h * Vec2(ix, iy);
        hi = origin + h * Vec2(ix + 1, iy + 1);
    }

    bool in_span(const Vec2& g, double tol) const {
        return g.x() >= origin.x() - tol && g.x() <= origin.x() + nx * h + tol &&
               g.y() >= origin.y() - tol && g.y() <= origin.y() + ny * h + tol;
    }
};

/// Builds a grid of element size h covering the polygon with at least one
/// element of margin on every side. `offset` shifts the grid lattice in
/// grid coordinates (only the value mod h matters for cut positions).
inline BackgroundGrid build_grid(const std::vector<Vec2>& polygon, double h,
                                 double rotation, const Vec2& offset = Vec2::Zero()) {
    if (h <= 0.0) throw invalid_input("build_grid: h must be positive");
    if (polygon.size() < 3) throw invalid_input("build_grid: polygon needs >= 3 vertices");

    BackgroundGrid grid;
    grid.h = h;
    grid.angle = rotation;
    grid.cos_a = std::cos(rotation);
    grid.sin_a = std::sin(rotation);
    Vec2 c = Vec2::Zero();
    for (const Vec2& v : polygon) c += v;
    grid.center = c / static_cast<double>(polygon.size());

    Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
    for (const Vec2& v : polygon) {
        const Vec2 g = grid.to_grid(v);
        lo = lo.cwiseMin(g);
        hi = hi.cwiseMax(g);
    }
    for (int d = 0; d < 2; ++d) {
        const double m = offset[d] - h * std::floor(offset[d] / h); // in [0, h)
        grid.origin[d] = m > 0.0 ? lo[d] - 2.0 * h + m : lo[d] - h;
    }
    grid.nx = static_cast<int>(std::ceil((hi.x() - grid.origin.x()) / h - 1e-12)) + 1;
    grid.ny = static_cast<int>(std::ceil((hi.y() - grid.origin.y()) / h - 1e-12)) + 1;
    return grid;
}

} // namespace sgiga
