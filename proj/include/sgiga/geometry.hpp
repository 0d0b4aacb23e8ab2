#pragma once

#include "sgiga/core.hpp"
#include "sgiga/metric_reg.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace sgiga {

/// A closed-form parametric map F: [0,1]^2 -> R^d with analytic Jacobian.
struct ParametricMap {
    enum class Kind {
        Affine,            // x -> M x + b
        Cusp,              // (x, x^gamma y); left side collapses to a point
        CollapsedBilinear, // upper-left corner maps to the diagonal midpoint
        ModelPatch,        // one of the 8 maps tiling [-1,1]^2, index 1..8
        EllipsoidQuarter,  // quarter-longitude patch of the 3:2:1 ellipsoid, index 0..3
    };

    Kind kind = Kind::Affine;
    double gamma = 1.0; // cusp aggressiveness, >= 1 where applicable
    int index = 0;      // ModelPatch 1..8 / EllipsoidQuarter 0..3
    Mat2 A = Mat2::Identity();
    Vec2 b = Vec2::Zero();

    int intrinsic_dim() const { return 2; }
    int embed_dim() const { return kind == Kind::EllipsoidQuarter ? 3 : 2; }

    static ParametricMap identity() { return ParametricMap{}; }
    static ParametricMap affine(const Mat2& A, const Vec2& b) {
        ParametricMap m;
        m.kind = Kind::Affine;
        m.A = A;
        m.b = b;
        return m;
    }
    static ParametricMap cusp(double gamma) {
        ParametricMap m;
        m.kind = Kind::Cusp;
        m.gamma = gamma;
        return m;
    }
    static ParametricMap collapsed_bilinear() {
        ParametricMap m;
        m.kind = Kind::CollapsedBilinear;
        return m;
    }
    static ParametricMap model_patch(int index, double gamma) {
        ParametricMap m;
        m.kind = Kind::ModelPatch;
        m.index = index;
        m.gamma = gamma;
        return m;
    }
    static ParametricMap ellipsoid_quarter(int index) {
        ParametricMap m;
        m.kind = Kind::EllipsoidQuarter;
        m.index = index;
        return m;
    }
};

/// Per-point map data: Jacobian, metric tensor G = DF^T DF, its
/// eigendecomposition, and the measure factor |G|^{1/2} assembled from the
/// eigenvalues (the one determinant code path in the project).
struct MetricPointData {
    Mat32 DF = Mat32::Zero();
    Mat2 G = Mat2::Zero();
    EigenDecomp2 eig;
    double sqrt_det = 0.0;
};

namespace detail {

inline Vec2 check_reference_point(const ParametricMap&, const Vec2& x) {
    if (x.x() < -point_tol || x.x() > 1.0 + point_tol || x.y() < -point_tol ||
        x.y() > 1.0 + point_tol)
        throw invalid_input("eval_map: point outside the unit-square reference domain");
    return {std::clamp(x.x(), 0.0, 1.0), std::clamp(x.y(), 0.0, 1.0)};
}

inline void ellipsoid_point(int k, const Vec2& x, Vec3& F) {
    const double phi = 0.5 * M_PI * (k + x.x());
    const double s = std::sin(M_PI * x.y());
    F = Vec3(3.0 * s * std::cos(phi), 2.0 * s * std::sin(phi), std::cos(M_PI * x.y()));
}

} // namespace detail

inline Vec3 eval_map(const ParametricMap& map, const Vec2& xin) {
    const Vec2 x = detail::check_reference_point(map, xin);
    const double g = map.gamma;
    Vec3 out = Vec3::Zero();
    switch (map.kind) {
    case ParametricMap::Kind::Affine:
        out.head<2>() = map.A * x + map.b;
        return out;
    case ParametricMap::Kind::Cusp:
        out.head<2>() = Vec2(x.x(), std::pow(x.x(), g) * x.y());
        return out;
    case ParametricMap::Kind::CollapsedBilinear:
        out.head<2>() = Vec2(x.x() + 0.5 * (1.0 - x.x()) * x.y(),
                             x.x() * x.y() + 0.5 * (1.0 - x.x()) * x.y());
        return out;
    case ParametricMap::Kind::ModelPatch: {
        const double xg = std::pow(x.x(), g);
        Vec2 F;
        switch (map.index) {
        case 1: F = Vec2(x.x(), xg * x.y()); break;
        case 2: F = Vec2(x.x(), xg * (1.0 - x.y()) + x.y()); break;
        case 3: F = Vec2(x.x() - 1.0, x.y() * std::pow(1.0 - x.x(), g)); break;
        case 4: F = Vec2(-x.x(), 1.0 - x.y() * (1.0 - xg)); break;
        case 5: F = Vec2(x.x(), (x.y() - 1.0) * xg); break;
        case 6: F = Vec2(x.x(), x.y() * (1.0 - xg) - 1.0); break;
        case 7: F = Vec2(-x.x(), -x.y() * xg); break;
        case 8: F = Vec2(-x.x(), (1.0 - x.y()) * (1.0 - xg) - 1.0); break;
        default: throw invalid_input("eval_map: model patch index must be 1..8");
        }
        out.head<2>() = F;
        return out;
    }
    case ParametricMap::Kind::EllipsoidQuarter:
        detail::ellipsoid_point(map.index, x, out);
        return out;
    }
    return out;
}

inline Mat32 eval_jacobian(const ParametricMap& map, const Vec2& xin) {
    const Vec2 x = detail::check_reference_point(map, xin);
    const double g = map.gamma;
    Mat32 DF = Mat32::Zero();
    switch (map.kind) {
    case ParametricMap::Kind::Affine:
        DF.topRows<2>() = map.A;
        return DF;
    case ParametricMap::Kind::Cusp:
        DF(0, 0) = 1.0;
        DF(1, 0) = g * std::pow(x.x(), g - 1.0) * x.y();
        DF(1, 1) = std::pow(x.x(), g);
        return DF;
    case ParametricMap::Kind::CollapsedBilinear:
        DF(0, 0) = 1.0 - 0.5 * x.y();
        DF(0, 1) = 0.5 * (1.0 - x.x());
        DF(1, 0) = 0.5 * x.y();
        DF(1, 1) = 0.5 * (1.0 + x.x());
        return DF;
    case ParametricMap::Kind::ModelPatch: {
        const double xg = std::pow(x.x(), g);
        const double dg = g * std::pow(x.x(), g - 1.0);
        const double xr = std::pow(1.0 - x.x(), g);
        const double dr = g * std::pow(1.0 - x.x(), g - 1.0);
        Mat2 J;
        switch (map.index) {
        case 1: J << 1, 0, dg * x.y(), xg; break;
        case 2: J << 1, 0, dg * (1.0 - x.y()), 1.0 - xg; break;
        case 3: J << 1, 0, -dr * x.y(), xr; break;
        case 4: J << -1, 0, dg * x.y(), xg - 1.0; break;
        case 5: J << 1, 0, dg * (x.y() - 1.0), xg; break;
        case 6: J << 1, 0, -dg * x.y(), 1.0 - xg; break;
        case 7: J << -1, 0, -dg * x.y(), -xg; break;
        case 8: J << -1, 0, -dg * (1.0 - x.y()), xg - 1.0; break;
        default: throw invalid_input("eval_jacobian: model patch index must be 1..8");
        }
        DF.topRows<2>() = J;
        return DF;
    }
    case ParametricMap::Kind::EllipsoidQuarter: {
        const double phi = 0.5 * M_PI * (map.index + x.x());
        const double sy = std::sin(M_PI * x.y());
        const double cy = std::cos(M_PI * x.y());
        DF(0, 0) = -1.5 * M_PI * sy * std::sin(phi);
        DF(1, 0) = M_PI * sy * std::cos(phi);
        DF(2, 0) = 0.0;
        DF(0, 1) = 3.0 * M_PI * cy * std::cos(phi);
        DF(1, 1) = 2.0 * M_PI * cy * std::sin(phi);
        DF(2, 1) = -M_PI * sy;
        return DF;
    }
    }
    return DF;
}

inline MetricPointData metric_at(const ParametricMap& map, const Vec2& x) {
    MetricPointData out;
    out.DF = eval_jacobian(map, x);
    out.G.noalias() = out.DF.transpose() * out.DF;
    out.eig = sym_eig(out.G);
    out.sqrt_det = std::sqrt(out.eig.lambda[0]) * std::sqrt(out.eig.lambda[1]);
    return out;
}

enum class SideKind { Interface, Dirichlet, Collapsed };

/// Classification of one edge of the reference-boundary polygon.
struct SideClass {
    SideKind kind = SideKind::Dirichlet;
    int partner_patch = -1; // Interface only
    int partner_edge = -1;  // Interface only
    bool flip = false;      // partner edge parameterized in reverse
};

/// A patch: map plus trimming polygon (counterclockwise, inside [0,1]^2)
/// with one classified side per polygon edge.
struct Patch {
    ParametricMap map;
    std::vector<Vec2> polygon;
    std::vector<SideClass> sides;

    int n_edges() const { return static_cast<int>(polygon.size()); }
    Vec2 edge_start(int e) const { return polygon[e]; }
    Vec2 edge_end(int e) const { return polygon[(e + 1) % polygon.size()]; }
    Vec2 edge_point(int e, double t) const {
        return edge_start(e) + t * (edge_end(e) - edge_start(e));
    }
    double edge_length(int e) const { return (edge_end(e) - edge_start(e)).norm(); }
    /// Outward unit normal (polygon is counterclockwise).
    Vec2 edge_normal(int e) const {
        const Vec2 d = (edge_end(e) - edge_start(e)).normalized();
        return {d.y(), -d.x()};
    }
};

/// Interface between two patch edges: sigma_i(t) walks edge_i of patch i,
/// sigma_j(t) walks edge_j of patch j (reversed if flip), and the physical
/// images match: F_i(sigma_i(t)) = F_j(sigma_j(t)).
struct InterfaceCurve {
    int patch_i = -1, edge_i = -1;
    int patch_j = -1, edge_j = -1;
    bool flip = false;

    Vec2 sigma_i(const Patch& pi, double t) const { return pi.edge_point(edge_i, t); }
    Vec2 sigma_j(const Patch& pj, double t) const {
        return pj.edge_point(edge_j, flip ? 1.0 - t : t);
    }
};

struct MultipatchDomain {
    std::vector<Patch> patches;
    std::vector<InterfaceCurve> interfaces;
};

namespace detail {

inline std::vector<Vec2> unit_square_polygon() {
    return {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
}

/// Resolve the orientation flag of an interface by sampling, and verify the
/// matching condition. Used by the domain builders as a self-check.
inline bool resolve_flip(const MultipatchDomain& dom, InterfaceCurve& c, double tol) {
    const Patch& pi = dom.patches[c.patch_i];
    const Patch& pj = dom.patches[c.patch_j];
    for (const bool flip : {false, true}) {
        c.flip = flip;
        bool ok = true;
        for (const double t : {0.0, 0.31, 0.5, 0.77, 1.0}) {
            const Vec3 a = eval_map(pi.map, c.sigma_i(pi, t));
            const Vec3 b = eval_map(pj.map, c.sigma_j(pj, t));
            if ((a - b).norm() > tol) {
                ok = false;
                break;
            }
        }
        if (ok) return true;
    }
    return false;
}

} // namespace detail

/// Registers an interface between (pi, ei) and (pj, ej): resolves the
/// orientation by sampling and mirrors the pairing into both side tables.
inline void connect_patches(MultipatchDomain& dom, int pi, int ei, int pj, int ej) {
    InterfaceCurve c;
    c.patch_i = pi;
    c.edge_i = ei;
    c.patch_j = pj;
    c.edge_j = ej;
    if (!detail::resolve_flip(dom, c, 1e-12))
        throw invalid_input("connect_patches: edges do not match in physical space");
    dom.interfaces.push_back(c);
    dom.patches[pi].sides[ei] = {SideKind::Interface, pj, ej, c.flip};
    dom.patches[pj].sides[ej] = {SideKind::Interface, pi, ei, c.flip};
}

/// Single identity-map patch on the unit square, all sides Dirichlet.
inline MultipatchDomain build_unit_square_domain() {
    MultipatchDomain dom;
    Patch p;
    p.map = ParametricMap::identity();
    p.polygon = detail::unit_square_polygon();
    p.sides.assign(4, SideClass{});
    dom.patches.push_back(std::move(p));
    return dom;
}

/// The 8-patch partition of [-1,1]^2 built from cusp-type maps. Sides that
/// collapse to a point are classified Collapsed; outer sides are Dirichlet;
/// the 8 interior interfaces carry sampled matching checks.
inline MultipatchDomain build_model_multipatch(double gamma) {
    if (gamma < 1.0) throw invalid_input("build_model_multipatch: gamma must be >= 1");
    MultipatchDomain dom;
    for (int k = 1; k <= 8; ++k) {
        Patch p;
        p.map = ParametricMap::model_patch(k, gamma);
        p.polygon = detail::unit_square_polygon();
        p.sides.assign(4, SideClass{});
        dom.patches.push_back(std::move(p));
    }
    // edges: 0 bottom, 1 right, 2 top, 3 left (counterclockwise)
    auto set = [&dom](int p, int e, SideKind k) { dom.patches[p].sides[e].kind = k; };
    set(0, 3, SideKind::Collapsed);
    set(0, 1, SideKind::Dirichlet);
    set(1, 1, SideKind::Collapsed);
    set(1, 2, SideKind::Dirichlet);
    set(2, 1, SideKind::Collapsed);
    set(2, 3, SideKind::Dirichlet);
    set(3, 1, SideKind::Collapsed);
    set(3, 0, SideKind::Dirichlet);
    set(4, 3, SideKind::Collapsed);
    set(4, 1, SideKind::Dirichlet);
    set(5, 1, SideKind::Collapsed);
    set(5, 0, SideKind::Dirichlet);
    set(6, 3, SideKind::Collapsed);
    set(6, 1, SideKind::Dirichlet);
    set(7, 1, SideKind::Collapsed);
    set(7, 2, SideKind::Dirichlet);

    connect_patches(dom, 0, 2, 1, 0); // cusp curve, upper right
    connect_patches(dom, 0, 0, 4, 2); // y = 0, x > 0
    connect_patches(dom, 1, 3, 3, 3); // x = 0, upper half
    connect_patches(dom, 2, 2, 3, 2); // cusp curve, upper left
    connect_patches(dom, 2, 0, 6, 0); // y = 0, x < 0
    connect_patches(dom, 4, 0, 5, 2); // cusp curve, lower right
    connect_patches(dom, 5, 3, 7, 3); // x = 0, lower half
    connect_patches(dom, 6, 2, 7, 0); // cusp curve, lower left
    return dom;
}

/// Four quarter-longitude patches covering the ellipsoid
/// x^2/9 + y^2/4 + z^2 = 1. Each patch collapses two opposing sides onto
/// the poles; meridian sides are interfaces; there is no outer boundary.
inline MultipatchDomain build_ellipsoid_multipatch() {
    MultipatchDomain dom;
    for (int k = 0; k < 4; ++k) {
        Patch p;
        p.map = ParametricMap::ellipsoid_quarter(k);
        p.polygon = detail::unit_square_polygon();
        p.sides.assign(4, SideClass{});
        p.sides[0].kind = SideKind::Collapsed; // north pole
        p.sides[2].kind = SideKind::Collapsed; // south pole
        dom.patches.push_back(std::move(p));
    }
    for (int k = 0; k < 4; ++k)
        connect_patches(dom, k, 1, (k + 1) % 4, 3);
    return dom;
}

/// Region-of-regularization indicator for a parametric map, sampled at the
/// centers of an n-by-n grid over the unit square.
inline std::vector<std::uint8_t> regularization_region(const ParametricMap& map,
                                                       double delta, int n) {
    return regularization_region(
        [&map](const Vec2& x) { return metric_at(map, x).G; }, delta, n);
}

} // namespace sgiga
