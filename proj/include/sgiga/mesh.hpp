#pragma once

#include "sgiga/core.hpp"
#include "sgiga/geometry.hpp"
#include "sgiga/grid.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace sgiga {

enum class ElemClass : std::uint8_t { Outside, Inside, Cut };

/// Classification of one background-grid element against the trimming
/// polygon. Cut elements carry the clipped intersection polygon and its
/// fan triangulation, both in grid coordinates.
struct ElementClass {
    ElemClass cls = ElemClass::Outside;
    std::vector<Vec2> clip;
    std::vector<std::array<Vec2, 3>> tris;
};

/// Interior grid face with at least one Cut neighbor; both neighbors are
/// non-Outside. `axis` is the face normal direction in the grid frame.
struct GhostFace {
    int elem_a = -1, elem_b = -1; // a is on the negative side of the face
    int axis = 0;
    Vec2 a, b; // endpoints in grid coordinates (the full cell edge)
};

/// Piece of a classified polygon edge lying inside a single element.
struct BoundarySubSegment {
    Vec2 a, b;   // endpoints, reference coordinates
    int elem;    // owning element (contains the inward-nudged midpoint)
    Vec2 normal; // outward unit normal, reference coordinates
};

struct PatchMesh {
    BackgroundGrid grid;
    std::vector<ElementClass> elements;
    std::vector<GhostFace> ghost_faces;
    std::vector<std::vector<BoundarySubSegment>> boundary; // one list per polygon edge
    int slivers_dropped = 0;
    int short_segments_dropped = 0;
    bool any_cut = false;
};

namespace detail {

inline double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

/// Clips a convex polygon against the half-plane {x[axis] <= bound} (or >=
/// if keep_ge). Crossing points get the bound assigned exactly.
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, int axis,
                                        double bound, bool keep_ge) {
    std::vector<Vec2> out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    auto inside = [&](const Vec2& p) {
        return keep_ge ? p[axis] >= bound : p[axis] <= bound;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const bool cin = inside(cur), nin = inside(nxt);
        if (cin) out.push_back(cur);
        if (cin != nin) {
            const double t = (bound - cur[axis]) / (nxt[axis] - cur[axis]);
            Vec2 p = cur + t * (nxt - cur);
            p[axis] = bound;
            out.push_back(p);
        }
    }
    return out;
}

inline std::vector<Vec2> clip_to_cell(const std::vector<Vec2>& poly, const Vec2& lo,
                                      const Vec2& hi) {
    std::vector<Vec2> r = clip_halfplane(poly, 0, lo.x(), true);
    r = clip_halfplane(r, 0, hi.x(), false);
    r = clip_halfplane(r, 1, lo.y(), true);
    r = clip_halfplane(r, 1, hi.y(), false);
    return r;
}

inline std::vector<std::array<Vec2, 3>> fan_triangulate(const std::vector<Vec2>& poly) {
    std::vector<std::array<Vec2, 3>> tris;
    if (poly.size() < 3) return tris;
    Vec2 c = Vec2::Zero();
    for (const Vec2& p : poly) c += p;
    c /= static_cast<double>(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i)
        tris.push_back({c, poly[i], poly[(i + 1) % poly.size()]});
    return tris;
}

} // namespace detail

/// Classifies every grid element as Inside / Cut / Outside relative to the
/// (convex) trimming polygon given in reference coordinates. Cut elements
/// with clip area below 1e-14 h^2 are reclassified Outside.
inline std::vector<ElementClass> classify_elements(const BackgroundGrid& grid,
                                                   const std::vector<Vec2>& polygon,
                                                   int* slivers_dropped = nullptr) {
    std::vector<Vec2> poly_g;
    poly_g.reserve(polygon.size());
    for (const Vec2& v : polygon) poly_g.push_back(grid.to_grid(v));
    if (detail::polygon_area(poly_g) < 0.0)
        throw invalid_input("classify_elements: polygon must be counterclockwise");

    Vec2 plo(1e300, 1e300), phi(-1e300, -1e300);
    for (const Vec2& v : poly_g) {
        plo = plo.cwiseMin(v);
        phi = phi.cwiseMax(v);
    }

    const double cell_area = grid.h * grid.h;
    const double sliver_tol = 1e-14 * cell_area;
    const double full_tol = (1.0 - 1e-10) * cell_area;
    int slivers = 0;

    std::vector<ElementClass> out(grid.n_elements());
    for (int e = 0; e < grid.n_elements(); ++e) {
        Vec2 lo, hi;
        grid.elem_box(e, lo, hi);
        if (hi.x() < plo.x() || lo.x() > phi.x() || hi.y() < plo.y() || lo.y() > phi.y())
            continue; // Outside, no overlap possible
        std::vector<Vec2> clip = detail::clip_to_cell(poly_g, lo, hi);
        const double area = clip.size() >= 3 ? detail::polygon_area(clip) : 0.0;
        if (area < sliver_tol) {
            if (area > 0.0) ++slivers;
            continue; // Outside
        }
        if (area >= full_tol) {
            out[e].cls = ElemClass::Inside;
            continue;
        }
        out[e].cls = ElemClass::Cut;
        out[e].tris = detail::fan_triangulate(clip);
        out[e].clip = std::move(clip);
    }
    if (slivers_dropped) *slivers_dropped = slivers;
    return out;
}

/// All interior faces with at least one Cut neighbor and no Outside
/// neighbor: the faces where ghost penalty stabilization acts.
inline std::vector<GhostFace> ghost_faces(const BackgroundGrid& grid,
                                          const std::vector<ElementClass>& elems) {
    std::vector<GhostFace> out;
    auto cls = [&](int ix, int iy) { return elems[grid.elem_id(ix, iy)].cls; };
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const ElemClass c0 = cls(ix, iy);
            if (c0 == ElemClass::Outside) continue;
            // face to the right neighbor (normal along grid x)
            if (ix + 1 < grid.nx) {
                const ElemClass c1 = cls(ix + 1, iy);
                if (c1 != ElemClass::Outside &&
                    (c0 == ElemClass::Cut || c1 == ElemClass::Cut)) {
                    GhostFace f;
                    f.elem_a = grid.elem_id(ix, iy);
                    f.elem_b = grid.elem_id(ix + 1, iy);
                    f.axis = 0;
                    f.a = grid.origin + grid.h * Vec2(ix + 1, iy);
                    f.b = grid.origin + grid.h * Vec2(ix + 1, iy + 1);
                    out.push_back(f);
                }
            }
            // face to the top neighbor (normal along grid y)
            if (iy + 1 < grid.ny) {
                const ElemClass c1 = cls(ix, iy + 1);
                if (c1 != ElemClass::Outside &&
                    (c0 == ElemClass::Cut || c1 == ElemClass::Cut)) {
                    GhostFace f;
                    f.elem_a = grid.elem_id(ix, iy);
                    f.elem_b = grid.elem_id(ix, iy + 1);
                    f.axis = 1;
                    f.a = grid.origin + grid.h * Vec2(ix, iy + 1);
                    f.b = grid.origin + grid.h * Vec2(ix + 1, iy + 1);
                    out.push_back(f);
                }
            }
        }
    return out;
}

/// Splits every polygon edge at grid-line crossings and assigns each piece
/// to the element containing its inward-nudged midpoint. Pieces shorter
/// than 1e-14 are dropped (counted).
inline std::vector<std::vector<BoundarySubSegment>>
segment_boundary(const Patch& patch, const BackgroundGrid& grid,
                 int* short_dropped = nullptr) {
    std::vector<std::vector<BoundarySubSegment>> out(patch.n_edges());
    int dropped = 0;
    for (int e = 0; e < patch.n_edges(); ++e) {
        const Vec2 a = patch.edge_start(e);
        const Vec2 b = patch.edge_end(e);
        const Vec2 ga = grid.to_grid(a);
        const Vec2 gb = grid.to_grid(b);
        const Vec2 normal = patch.edge_normal(e);
        const double len = patch.edge_length(e);

        std::vector<double> ts{0.0, 1.0};
        for (int axis = 0; axis < 2; ++axis) {
            const double d = gb[axis] - ga[axis];
            if (std::abs(d) < 1e-15) continue;
            const double o = grid.origin[axis];
            const int n = axis == 0 ? grid.nx : grid.ny;
            for (int k = 0; k <= n; ++k) {
                const double t = (o + k * grid.h - ga[axis]) / d;
                if (t > 1e-14 && t < 1.0 - 1e-14) ts.push_back(t);
            }
        }
        std::sort(ts.begin(), ts.end());

        for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
            const double t0 = ts[i], t1 = ts[i + 1];
            if ((t1 - t0) * len < 1e-14) {
                ++dropped;
                continue;
            }
            BoundarySubSegment s;
            s.a = a + t0 * (b - a);
            s.b = a + t1 * (b - a);
            s.normal = normal;
            const Vec2 mid = 0.5 * (s.a + s.b) - (1e-9 * grid.h) * normal;
            const auto [ix, iy] = grid.locate(grid.to_grid(mid));
            s.elem = grid.elem_id(ix, iy);
            out[e].push_back(s);
        }
    }
    if (short_dropped) *short_dropped = dropped;
    return out;
}

/// Builds the full mesh structure for one patch: background grid, element
/// classification, ghost faces, and boundary segmentation.
inline PatchMesh build_patch_mesh(const Patch& patch, double h, double rotation = 0.0,
                                  const Vec2& offset = Vec2::Zero()) {
    PatchMesh mesh;
    mesh.grid = build_grid(patch.polygon, h, rotation, offset);
    mesh.elements = classify_elements(mesh.grid, patch.polygon, &mesh.slivers_dropped);
    for (const ElementClass& ec : mesh.elements)
        if (ec.cls == ElemClass::Cut) {
            mesh.any_cut = true;
            break;
        }
    mesh.ghost_faces = ghost_faces(mesh.grid, mesh.elements);
    mesh.boundary = segment_boundary(patch, mesh.grid, &mesh.short_segments_dropped);
    return mesh;
}

} // namespace sgiga
