#pragma once

#include "sgiga/core.hpp"
#include "sgiga/geometry.hpp"
#include "sgiga/grid.hpp"
#include "sgiga/mesh.hpp"
#include "sgiga/metric_reg.hpp"
#include "sgiga/quadrature.hpp"
#include "sgiga/splines.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace sgiga {

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct AssemblyParams {
    double beta = 25.0;  // Nitsche penalty
    double eta = 0.01;   // ghost penalty; 0 disables
    double kappa = 0.5;  // weight of the self trace in the interface average
    DeltaRule delta_rule = DeltaRule::fixed(0.0);
    int quad_points = 0;     // points per direction; 0 means degree + 2
    bool naive_flux = false; // two-factor baseline instead of the robust kernel

    static AssemblyParams defaults(int degree) {
        AssemblyParams p;
        p.beta = 25.0 * degree * degree;
        return p;
    }
    int n_quad(int degree) const { return quad_points > 0 ? quad_points : degree + 2; }
};

struct AssemblyDiagnostics {
    long regularized_points = 0; // quadrature points with min eigenvalue < delta
    long collapsed_points = 0;   // fully collapsed flux tensor evaluations
    int slivers_dropped = 0;
    int short_segments_dropped = 0;
};

struct DofMap {
    std::vector<std::vector<int>> global_of_local; // per patch, -1 = inactive
    std::vector<int> active_per_patch;
    int n_global = 0;
};

struct AssembledSystem {
    SparseMat A;
    Eigen::VectorXd b;
    Eigen::VectorXd mean_weights; // ∫ phi |G|^{1/2}; empty unless requested
    DofMap dofs;
    AssemblyDiagnostics diag;
};

/// One patch of a discretized multipatch domain.
struct PatchDiscretization {
    PatchMesh mesh;
    SplineSpace space;
    double h = 0.0;
    double delta = 0.0;
};

struct Discretization {
    MultipatchDomain domain;
    std::vector<PatchDiscretization> patches;
    DofMap dofs;
    int degree = 1;
};

struct MeshOptions {
    double h = 0.25;
    std::vector<double> rotations; // cycled over patches; empty = axis aligned
    std::vector<Vec2> offsets;     // cycled over patches; empty = none
};

/// Problem data as seen by the assembler: the source is evaluated per patch
/// at reference points (surface problems define it through the map), the
/// Dirichlet datum at physical points.
struct ProblemData {
    std::function<double(int patch, const Vec2& xref)> source;
    std::function<double(const Vec3& xphys)> dirichlet;
};

namespace detail {

/// A dof is active iff some element of its (p+1)^2 support block is Inside
/// or Cut; elements with zero quadrature support no trial functions.
inline std::vector<int> active_dofs(const SplineSpace& space,
                                    const std::vector<ElementClass>& elems) {
    const BackgroundGrid& grid = space.grid();
    const int p = space.degree();
    std::vector<int> map(space.ndof(), -1);
    for (int dy = 0; dy < space.ndof_y(); ++dy)
        for (int dx = 0; dx < space.ndof_x(); ++dx) {
            bool active = false;
            for (int ey = dy - p; ey <= dy && !active; ++ey) {
                if (ey < 0 || ey >= grid.ny) continue;
                for (int ex = dx - p; ex <= dx; ++ex) {
                    if (ex < 0 || ex >= grid.nx) continue;
                    if (elems[grid.elem_id(ex, ey)].cls != ElemClass::Outside) {
                        active = true;
                        break;
                    }
                }
            }
            if (active) map[space.dof_index(dx, dy)] = 0;
        }
    return map;
}

} // namespace detail

inline Discretization discretize(const MultipatchDomain& dom, const MeshOptions& opt,
                                 int degree, const DeltaRule& rule) {
    Discretization disc;
    disc.domain = dom;
    disc.degree = degree;
    int offset = 0;
    disc.dofs.global_of_local.resize(dom.patches.size());
    for (std::size_t i = 0; i < dom.patches.size(); ++i) {
        PatchDiscretization pd;
        const double rot = opt.rotations.empty() ? 0.0 : opt.rotations[i % opt.rotations.size()];
        const Vec2 off = opt.offsets.empty() ? Vec2::Zero() : opt.offsets[i % opt.offsets.size()];
        pd.mesh = build_patch_mesh(dom.patches[i], opt.h, rot, off);
        pd.space = SplineSpace(pd.mesh.grid, degree);
        pd.h = opt.h;
        pd.delta = delta_for_mesh(rule, opt.h);
        std::vector<int>& gmap = disc.dofs.global_of_local[i];
        gmap = detail::active_dofs(pd.space, pd.mesh.elements);
        int count = 0;
        for (int& g : gmap)
            if (g == 0) g = offset + count++;
        disc.dofs.active_per_patch.push_back(count);
        offset += count;
        disc.patches.push_back(std::move(pd));
    }
    disc.dofs.n_global = offset;
    return disc;
}

namespace detail {

inline Mat2 flux_tensor(const MetricPointData& md, double delta, bool naive,
                        AssemblyDiagnostics* diag) {
    if (naive) return naive_flux_tensor(md.G);
    const RegFluxTensor r = reg_flux_tensor(md.eig, delta);
    if (diag) {
        if (r.regularized) ++diag->regularized_points;
        if (r.fully_collapsed) ++diag->collapsed_points;
    }
    return r.R;
}

/// Accumulates w * grad^T R grad over active dofs, exactly symmetric.
inline void add_bulk_point(const BasisEval& bas, const std::vector<int>& gmap,
                           const Mat2& R, double w, std::vector<Triplet>& trips) {
    std::array<Vec2, BasisEval::max_active> Rg;
    for (int a = 0; a < bas.count; ++a) Rg[a] = R * bas.grad[a];
    for (int a = 0; a < bas.count; ++a) {
        const int ga = gmap[bas.dofs[a]];
        if (ga < 0) continue;
        for (int b = a; b < bas.count; ++b) {
            const int gb = gmap[bas.dofs[b]];
            if (gb < 0) continue;
            const double v = w * bas.grad[a].dot(Rg[b]);
            trips.emplace_back(ga, gb, v);
            if (a != b) trips.emplace_back(gb, ga, v);
        }
    }
}

} // namespace detail

/// Bulk term of one patch: quadrature over Inside cells and over the clip
/// triangulations of Cut cells; accumulates the stiffness contribution
/// grad w . (R_delta grad v), the load f w |G|^{1/2}, and optionally the
/// mean-value weights ∫ w |G|^{1/2}.
inline void assemble_bulk(int patch_index, const Patch& patch,
                          const PatchDiscretization& pd, const std::vector<int>& gmap,
                          const ProblemData* problem, const AssemblyParams& params,
                          std::vector<Triplet>& trips, Eigen::VectorXd& rhs,
                          Eigen::VectorXd* mean_weights, AssemblyDiagnostics& diag) {
    const BackgroundGrid& grid = pd.mesh.grid;
    const int n = params.n_quad(pd.space.degree());
    const QuadRule cell_rule = gauss_quad(n);
    const QuadRule tri_rule = gauss_triangle(n);

    auto handle_point = [&](const Vec2& gpt, double w, int ex, int ey) {
        const Vec2 xref = grid.to_ref(gpt);
        const BasisEval bas = pd.space.eval_in_element(xref, ex, ey);
        const MetricPointData md = metric_at(patch.map, xref);
        const Mat2 R = detail::flux_tensor(md, pd.delta, params.naive_flux, &diag);
        detail::add_bulk_point(bas, gmap, R, w, trips);
        if (problem && problem->source) {
            const double f = problem->source(patch_index, xref);
            for (int a = 0; a < bas.count; ++a) {
                const int ga = gmap[bas.dofs[a]];
                if (ga >= 0) rhs[ga] += w * f * bas.val[a] * md.sqrt_det;
            }
        }
        if (mean_weights) {
            for (int a = 0; a < bas.count; ++a) {
                const int ga = gmap[bas.dofs[a]];
                if (ga >= 0) (*mean_weights)[ga] += w * bas.val[a] * md.sqrt_det;
            }
        }
    };

    for (int e = 0; e < grid.n_elements(); ++e) {
        const ElementClass& ec = pd.mesh.elements[e];
        const auto [ex, ey] = grid.elem_coords(e);
        if (ec.cls == ElemClass::Inside) {
            Vec2 lo, hi;
            grid.elem_box(e, lo, hi);
            const double area = grid.h * grid.h;
            for (std::size_t q = 0; q < cell_rule.points.size(); ++q) {
                const Vec2 gpt = lo + grid.h * cell_rule.points[q];
                handle_point(gpt, cell_rule.weights[q] * area, ex, ey);
            }
        } else if (ec.cls == ElemClass::Cut) {
            for (const auto& tri : ec.tris) {
                const Vec2 e1 = tri[1] - tri[0];
                const Vec2 e2 = tri[2] - tri[0];
                const double jac = e1.x() * e2.y() - e1.y() * e2.x(); // 2 * area
                if (jac <= 0.0) continue;
                for (std::size_t q = 0; q < tri_rule.points.size(); ++q) {
                    const Vec2 gpt =
                        tri[0] + tri_rule.points[q].x() * e1 + tri_rule.points[q].y() * e2;
                    handle_point(gpt, tri_rule.weights[q] * jac, ex, ey);
                }
            }
        }
    }
}

/// Nitsche terms of one Dirichlet side: consistency, symmetry and penalty
/// contributions to the matrix, and the corresponding data terms to the
/// right-hand side.
inline void assemble_dirichlet_side(const Patch& patch, int edge,
                                    const PatchDiscretization& pd,
                                    const std::vector<int>& gmap,
                                    const ProblemData* problem,
                                    const AssemblyParams& params,
                                    std::vector<Triplet>& trips, Eigen::VectorXd& rhs,
                                    AssemblyDiagnostics& diag) {
    const BackgroundGrid& grid = pd.mesh.grid;
    const int n = params.n_quad(pd.space.degree());
    const QuadRule rule = gauss_1d(n);
    const double beta_h = params.beta / pd.h;

    for (const BoundarySubSegment& seg : pd.mesh.boundary[edge]) {
        const double len = (seg.b - seg.a).norm();
        const auto [ex, ey] = grid.elem_coords(seg.elem);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * len;
            const Vec2 xref = seg.a + rule.points[q].x() * (seg.b - seg.a);
            const BasisEval bas = pd.space.eval_in_element(xref, ex, ey);
            const MetricPointData md = metric_at(patch.map, xref);
            const Mat2 R = detail::flux_tensor(md, pd.delta, params.naive_flux, &diag);
            const Vec2 Rnu = R * seg.normal;
            const double pen = beta_h * seg.normal.dot(Rnu);
            const double g =
                problem && problem->dirichlet ? problem->dirichlet(eval_map(patch.map, xref)) : 0.0;

            std::array<double, BasisEval::max_active> fx;
            for (int a = 0; a < bas.count; ++a) fx[a] = Rnu.dot(bas.grad[a]);

            for (int a = 0; a < bas.count; ++a) {
                const int ga = gmap[bas.dofs[a]];
                if (ga < 0) continue;
                for (int b = a; b < bas.count; ++b) {
                    const int gb = gmap[bas.dofs[b]];
                    if (gb < 0) continue;
                    const double v = w * (-fx[a] * bas.val[b] - bas.val[a] * fx[b] +
                                          pen * bas.val[a] * bas.val[b]);
                    trips.emplace_back(ga, gb, v);
                    if (a != b) trips.emplace_back(gb, ga, v);
                }
                rhs[ga] += w * g * (-fx[a] + pen * bas.val[a]);
            }
        }
    }
}

/// Nitsche coupling terms for one ordered side of an interface: the self
/// patch contributes its own flux and its own penalty scaling while both
/// traces enter through the average.
inline void assemble_interface_side(const Patch& self_patch,
                                    const PatchDiscretization& self_pd,
                                    const std::vector<int>& self_gmap,
                                    const PatchDiscretization& partner_pd,
                                    const std::vector<int>& partner_gmap,
                                    const std::vector<InterfaceQuadPoint>& stream,
                                    const AssemblyParams& params,
                                    std::vector<Triplet>& trips,
                                    AssemblyDiagnostics& diag) {
    const double beta_h = params.beta / self_pd.h;
    const double jump_w = 1.0 - params.kappa; // v_self - <v> = (1-kappa)(v_self - v_partner)

    constexpr int cap = 2 * BasisEval::max_active;
    std::array<int, cap> gdof{};
    std::array<double, cap> jump{}, flux{};

    for (const InterfaceQuadPoint& pt : stream) {
        const auto [sex, sey] = self_pd.mesh.grid.elem_coords(pt.elem_self);
        const auto [pex, pey] = partner_pd.mesh.grid.elem_coords(pt.elem_partner);
        const BasisEval self_bas = self_pd.space.eval_in_element(pt.x_self, sex, sey);
        const BasisEval partner_bas =
            partner_pd.space.eval_in_element(pt.x_partner, pex, pey);

        const MetricPointData md = metric_at(self_patch.map, pt.x_self);
        const Mat2 R = detail::flux_tensor(md, self_pd.delta, params.naive_flux, &diag);
        const Vec2 Rnu = R * pt.normal_self;
        const double pen = beta_h * pt.normal_self.dot(Rnu);

        int m = 0;
        for (int a = 0; a < self_bas.count; ++a, ++m) {
            gdof[m] = self_gmap[self_bas.dofs[a]];
            jump[m] = jump_w * self_bas.val[a];
            flux[m] = Rnu.dot(self_bas.grad[a]);
        }
        for (int a = 0; a < partner_bas.count; ++a, ++m) {
            gdof[m] = partner_gmap[partner_bas.dofs[a]];
            jump[m] = -jump_w * partner_bas.val[a];
            flux[m] = 0.0;
        }

        for (int a = 0; a < m; ++a) {
            if (gdof[a] < 0) continue;
            for (int b = a; b < m; ++b) {
                if (gdof[b] < 0) continue;
                const double v = pt.weight * (-flux[a] * jump[b] - jump[a] * flux[b] +
                                              pen * jump[a] * jump[b]);
                trips.emplace_back(gdof[a], gdof[b], v);
                if (a != b) trips.emplace_back(gdof[b], gdof[a], v);
            }
        }
    }
}

/// Ghost penalty for one patch: jumps of pure normal derivatives of order
/// 1..p across interior faces near the cut boundary, scaled by
/// eta h^{2l-1}. Faces are axis aligned in the grid frame, so the normal
/// derivatives are single-direction derivatives in grid coordinates.
inline void assemble_ghost_penalty(const PatchDiscretization& pd,
                                   const std::vector<int>& gmap,
                                   const AssemblyParams& params,
                                   std::vector<Triplet>& trips) {
    if (params.eta <= 0.0 || pd.mesh.ghost_faces.empty()) return;
    const BackgroundGrid& grid = pd.mesh.grid;
    const SplineSpace& space = pd.space;
    const int p = space.degree();
    const int n = params.n_quad(p);
    const QuadRule rule = gauss_1d(n);

    std::array<double, 4> hpow{}; // eta * h^{2l-1}
    for (int l = 1; l <= p; ++l) hpow[l] = params.eta * std::pow(pd.h, 2 * l - 1);

    for (const GhostFace& face : pd.mesh.ghost_faces) {
        const int axis = face.axis;
        const int tangent = 1 - axis;
        const auto [ax, ay] = grid.elem_coords(face.elem_a);
        const int span_n = axis == 0 ? ax : ay;       // normal-axis span of elem_a
        const int span_t = axis == 0 ? ay : ax;       // shared tangential span
        const double u0 = face.a[axis];               // face coordinate on the normal axis

        BasisDers1d dl, dr;
        space.eval_1d_ders(axis, span_n, u0, p, dl);
        space.eval_1d_ders(axis, span_n + 1, u0, p, dr);

        // jumps of the normal-derivative factors over the p+2 dofs spanning
        // both elements (dof index along the normal axis: span_n + d)
        std::array<std::array<double, 4>, 6> jmp{};
        for (int l = 1; l <= p; ++l)
            for (int d = 0; d <= p + 1; ++d) {
                const double left = d <= p ? dl[l][d] : 0.0;
                const double right = d >= 1 ? dr[l][d - 1] : 0.0;
                jmp[d][l] = left - right;
            }

        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * grid.h;
            const double v = face.a[tangent] + rule.points[q].x() * grid.h;
            BasisDers1d tv;
            space.eval_1d_ders(tangent, span_t, v, 0, tv);

            for (int l = 1; l <= p; ++l) {
                const double scale = hpow[l] * w;
                for (int d1 = 0; d1 <= p + 1; ++d1)
                    for (int j1 = 0; j1 <= p; ++j1) {
                        const int dof1 = axis == 0
                                             ? space.dof_index(span_n + d1, span_t + j1)
                                             : space.dof_index(span_t + j1, span_n + d1);
                        const int g1 = gmap[dof1];
                        if (g1 < 0) continue;
                        const double f1 = jmp[d1][l] * tv[0][j1];
                        if (f1 == 0.0) continue;
                        for (int d2 = 0; d2 <= p + 1; ++d2)
                            for (int j2 = 0; j2 <= p; ++j2) {
                                const int dof2 =
                                    axis == 0
                                        ? space.dof_index(span_n + d2, span_t + j2)
                                        : space.dof_index(span_t + j2, span_n + d2);
                                const int g2 = gmap[dof2];
                                if (g2 < 0) continue;
                                const double f2 = jmp[d2][l] * tv[0][j2];
                                trips.emplace_back(g1, g2, scale * f1 * f2);
                            }
                    }
            }
        }
    }
}

/// Assembles the full regularized trimmed multipatch system.
inline AssembledSystem assemble_system(const Discretization& disc,
                                       const ProblemData& problem,
                                       const AssemblyParams& params,
                                       bool with_mean_weights = false) {
    AssembledSystem sys;
    const int n = disc.dofs.n_global;
    sys.dofs = disc.dofs;
    sys.b = Eigen::VectorXd::Zero(n);
    if (with_mean_weights) sys.mean_weights = Eigen::VectorXd::Zero(n);

    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < disc.patches.size(); ++i) {
        const Patch& patch = disc.domain.patches[i];
        const PatchDiscretization& pd = disc.patches[i];
        const std::vector<int>& gmap = disc.dofs.global_of_local[i];
        sys.diag.slivers_dropped += pd.mesh.slivers_dropped;
        sys.diag.short_segments_dropped += pd.mesh.short_segments_dropped;

        assemble_bulk(static_cast<int>(i), patch, pd, gmap, &problem, params, trips,
                      sys.b, with_mean_weights ? &sys.mean_weights : nullptr, sys.diag);
        for (int e = 0; e < patch.n_edges(); ++e)
            if (patch.sides[e].kind == SideKind::Dirichlet)
                assemble_dirichlet_side(patch, e, pd, gmap, &problem, params, trips,
                                        sys.b, sys.diag);
        assemble_ghost_penalty(pd, gmap, params, trips);
    }

    const int nq = params.n_quad(disc.degree);
    for (const InterfaceCurve& curve : disc.domain.interfaces) {
        const PatchDiscretization& pdi = disc.patches[curve.patch_i];
        const PatchDiscretization& pdj = disc.patches[curve.patch_j];
        const InterfaceQuadrature iq =
            interface_quadrature(disc.domain, curve, pdi.mesh, pdj.mesh, nq);
        assemble_interface_side(disc.domain.patches[curve.patch_i], pdi,
                                disc.dofs.global_of_local[curve.patch_i], pdj,
                                disc.dofs.global_of_local[curve.patch_j], iq.side_i,
                                params, trips, sys.diag);
        assemble_interface_side(disc.domain.patches[curve.patch_j], pdj,
                                disc.dofs.global_of_local[curve.patch_j], pdi,
                                disc.dofs.global_of_local[curve.patch_i], iq.side_j,
                                params, trips, sys.diag);
    }

    sys.A.resize(n, n);
    sys.A.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

/// Discrete energy of a coefficient vector in the natural norm of the
/// regularized formulation (bulk + boundary flux + boundary jump + ghost
/// penalty terms). Diagnostic only; the boundary gradient term is not part
/// of the bilinear form.
inline double discrete_energy(const Discretization& disc, const Eigen::VectorXd& u,
                              const AssemblyParams& params) {
    double energy = 0.0;
    AssemblyDiagnostics diag;

    auto eval_fn = [&](const PatchDiscretization& pd, const std::vector<int>& gmap,
                       const Vec2& xref, int ex, int ey, double& val, Vec2& grad) {
        const BasisEval bas = pd.space.eval_in_element(xref, ex, ey);
        val = 0.0;
        grad = Vec2::Zero();
        for (int a = 0; a < bas.count; ++a) {
            const int g = gmap[bas.dofs[a]];
            if (g < 0) continue;
            val += u[g] * bas.val[a];
            grad += u[g] * bas.grad[a];
        }
    };

    for (std::size_t i = 0; i < disc.patches.size(); ++i) {
        const Patch& patch = disc.domain.patches[i];
        const PatchDiscretization& pd = disc.patches[i];
        const std::vector<int>& gmap = disc.dofs.global_of_local[i];
        const BackgroundGrid& grid = pd.mesh.grid;
        const int n = params.n_quad(pd.space.degree());
        const QuadRule cell_rule = gauss_quad(n);
        const QuadRule tri_rule = gauss_triangle(n);
        const QuadRule line_rule = gauss_1d(n);

        auto bulk_point = [&](const Vec2& gpt, double w, int ex, int ey) {
            const Vec2 xref = grid.to_ref(gpt);
            double val;
            Vec2 grad;
            eval_fn(pd, gmap, xref, ex, ey, val, grad);
            const MetricPointData md = metric_at(patch.map, xref);
            const Mat2 R = detail::flux_tensor(md, pd.delta, params.naive_flux, &diag);
            energy += w * grad.dot(R * grad);
        };
        for (int e = 0; e < grid.n_elements(); ++e) {
            const ElementClass& ec = pd.mesh.elements[e];
            const auto [ex, ey] = grid.elem_coords(e);
            if (ec.cls == ElemClass::Inside) {
                Vec2 lo, hi;
                grid.elem_box(e, lo, hi);
                for (std::size_t q = 0; q < cell_rule.points.size(); ++q)
                    bulk_point(lo + grid.h * cell_rule.points[q],
                               cell_rule.weights[q] * grid.h * grid.h, ex, ey);
            } else if (ec.cls == ElemClass::Cut) {
                for (const auto& tri : ec.tris) {
                    const Vec2 e1 = tri[1] - tri[0];
                    const Vec2 e2 = tri[2] - tri[0];
                    const double jac = e1.x() * e2.y() - e1.y() * e2.x();
                    if (jac <= 0.0) continue;
                    for (std::size_t q = 0; q < tri_rule.points.size(); ++q)
                        bulk_point(tri[0] + tri_rule.points[q].x() * e1 +
                                       tri_rule.points[q].y() * e2,
                                   tri_rule.weights[q] * jac, ex, ey);
                }
            }
        }

        // Dirichlet sides: h |R^{1/2} grad|^2 and h^{-1} (v)^2 nu.R nu
        for (int e = 0; e < patch.n_edges(); ++e) {
            if (patch.sides[e].kind != SideKind::Dirichlet) continue;
            for (const BoundarySubSegment& seg : pd.mesh.boundary[e]) {
                const double len = (seg.b - seg.a).norm();
                const auto [ex, ey] = grid.elem_coords(seg.elem);
                for (std::size_t q = 0; q < line_rule.points.size(); ++q) {
                    const double w = line_rule.weights[q] * len;
                    const Vec2 xref = seg.a + line_rule.points[q].x() * (seg.b - seg.a);
                    double val;
                    Vec2 grad;
                    eval_fn(pd, gmap, xref, ex, ey, val, grad);
                    const MetricPointData md = metric_at(patch.map, xref);
                    const Mat2 R =
                        detail::flux_tensor(md, pd.delta, params.naive_flux, &diag);
                    energy += w * pd.h * grad.dot(R * grad);
                    energy += w / pd.h * val * val * seg.normal.dot(R * seg.normal);
                }
            }
        }
    }

    // interface terms: per-side flux norm and the jump penalty scaling
    const int nq = params.n_quad(disc.degree);
    for (const InterfaceCurve& curve : disc.domain.interfaces) {
        const PatchDiscretization& pdi = disc.patches[curve.patch_i];
        const PatchDiscretization& pdj = disc.patches[curve.patch_j];
        const InterfaceQuadrature iq =
            interface_quadrature(disc.domain, curve, pdi.mesh, pdj.mesh, nq);
        auto side_energy = [&](const Patch& self_patch, const PatchDiscretization& self_pd,
                               const std::vector<int>& self_gmap,
                               const PatchDiscretization& partner_pd,
                               const std::vector<int>& partner_gmap,
                               const std::vector<InterfaceQuadPoint>& stream) {
            const double jump_w = 1.0 - params.kappa;
            for (const InterfaceQuadPoint& pt : stream) {
                const auto [sex, sey] = self_pd.mesh.grid.elem_coords(pt.elem_self);
                const auto [pex, pey] = partner_pd.mesh.grid.elem_coords(pt.elem_partner);
                double vs, vp;
                Vec2 gs, gp;
                eval_fn(self_pd, self_gmap, pt.x_self, sex, sey, vs, gs);
                eval_fn(partner_pd, partner_gmap, pt.x_partner, pex, pey, vp, gp);
                const MetricPointData md = metric_at(self_patch.map, pt.x_self);
                const Mat2 R = detail::flux_tensor(md, self_pd.delta, params.naive_flux, &diag);
                const double jump = jump_w * (vs - vp);
                energy += pt.weight * self_pd.h * gs.dot(R * gs);
                energy += pt.weight / self_pd.h * jump * jump *
                          pt.normal_self.dot(R * pt.normal_self);
            }
        };
        side_energy(disc.domain.patches[curve.patch_i], pdi,
                    disc.dofs.global_of_local[curve.patch_i], pdj,
                    disc.dofs.global_of_local[curve.patch_j], iq.side_i);
        side_energy(disc.domain.patches[curve.patch_j], pdj,
                    disc.dofs.global_of_local[curve.patch_j], pdi,
                    disc.dofs.global_of_local[curve.patch_i], iq.side_j);
    }

    // ghost penalty contribution via its assembled quadratic form
    std::vector<Triplet> trips;
    for (std::size_t i = 0; i < disc.patches.size(); ++i)
        assemble_ghost_penalty(disc.patches[i], disc.dofs.global_of_local[i], params, trips);
    if (!trips.empty()) {
        SparseMat S(disc.dofs.n_global, disc.dofs.n_global);
        S.setFromTriplets(trips.begin(), trips.end());
        energy += u.dot(S * u);
    }
    return energy;
}

} // namespace sgiga
