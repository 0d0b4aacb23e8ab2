#pragma once

#include "sgiga/assembly.hpp"
#include "sgiga/core.hpp"
#include "sgiga/geometry.hpp"
#include "sgiga/solver.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace sgiga {

/// Problem with known exact solution. The gradient is the ambient gradient
/// of the closed-form expression; pulled back through DF^T it yields the
/// exact reference gradient on flat patches and surfaces alike.
struct ManufacturedProblem {
    std::function<double(const Vec3&)> u;
    std::function<Vec3(const Vec3&)> grad_u;
    std::function<double(const Vec3&)> f; // empty for chart-defined sources
    bool zero_mean = false;
};

/// u = sin(2 pi (x - 0.3)) cos(2 pi (y + 0.4)), f = 8 pi^2 u.
inline ManufacturedProblem manufactured_2d() {
    ManufacturedProblem p;
    p.u = [](const Vec3& x) {
        return std::sin(2 * M_PI * (x.x() - 0.3)) * std::cos(2 * M_PI * (x.y() + 0.4));
    };
    p.grad_u = [](const Vec3& x) {
        const double a = 2 * M_PI * (x.x() - 0.3);
        const double b = 2 * M_PI * (x.y() + 0.4);
        return Vec3(2 * M_PI * std::cos(a) * std::cos(b),
                    -2 * M_PI * std::sin(a) * std::sin(b), 0.0);
    };
    p.f = [u = p.u](const Vec3& x) { return 8.0 * M_PI * M_PI * u(x); };
    return p;
}

/// u = sin(4x) cos(3y) restricted to the surface; the source is computed
/// through the charts (see lb_source_fd).
inline ManufacturedProblem manufactured_surface() {
    ManufacturedProblem p;
    p.u = [](const Vec3& x) { return std::sin(4.0 * x.x()) * std::cos(3.0 * x.y()); };
    p.grad_u = [](const Vec3& x) {
        return Vec3(4.0 * std::cos(4.0 * x.x()) * std::cos(3.0 * x.y()),
                    -3.0 * std::sin(4.0 * x.x()) * std::sin(3.0 * x.y()), 0.0);
    };
    p.zero_mean = true;
    return p;
}

/// Laplace-Beltrami source -|G|^{-1/2} div(|G|^{1/2} G^{-1} grad u_hat) at a
/// reference point, with the divergence taken by Richardson-extrapolated
/// central differences (base step 1e-4) of the analytic flux.
inline double lb_source_fd(const ParametricMap& map, const ManufacturedProblem& mp,
                           const Vec2& x) {
    auto flux = [&](const Vec2& s) -> Vec2 {
        const MetricPointData md = metric_at(map, s);
        const Vec2 ghat = md.DF.transpose() * mp.grad_u(eval_map(map, s));
        return reg_flux_tensor(md.eig, 0.0).R * ghat;
    };
    double div = 0.0;
    for (int d = 0; d < 2; ++d) {
        // keep the whole stencil inside the reference domain
        const double room = 0.45 * std::min(x[d], 1.0 - x[d]);
        const double e = std::min(1e-4, room);
        if (e <= 0.0)
            throw invalid_input("lb_source_fd: stencil point on the domain boundary");
        Vec2 dx = Vec2::Zero();
        dx[d] = e;
        const double d1 = (flux(x + dx)[d] - flux(x - dx)[d]) / (2.0 * e);
        dx[d] = 0.5 * e;
        const double d2 = (flux(x + dx)[d] - flux(x - dx)[d]) / e;
        div += (4.0 * d2 - d1) / 3.0;
    }
    return -div / metric_at(map, x).sqrt_det;
}

/// Assembler-facing closures for a manufactured problem on a domain.
inline ProblemData problem_data(const ManufacturedProblem& mp,
                                const MultipatchDomain& dom) {
    ProblemData data;
    if (mp.f) {
        data.source = [&mp, &dom](int patch, const Vec2& xref) {
            return mp.f(eval_map(dom.patches[patch].map, xref));
        };
    } else {
        data.source = [&mp, &dom](int patch, const Vec2& xref) {
            return lb_source_fd(dom.patches[patch].map, mp, xref);
        };
    }
    data.dirichlet = [&mp](const Vec3& x) { return mp.u(x); };
    return data;
}

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

namespace detail {

template <class PointFn>
void for_each_bulk_point(const PatchDiscretization& pd, int n_quad, PointFn&& fn) {
    const BackgroundGrid& grid = pd.mesh.grid;
    const QuadRule cell_rule = gauss_quad(n_quad);
    const QuadRule tri_rule = gauss_triangle(n_quad);
    for (int e = 0; e < grid.n_elements(); ++e) {
        const ElementClass& ec = pd.mesh.elements[e];
        if (ec.cls == ElemClass::Outside) continue;
        const auto [ex, ey] = grid.elem_coords(e);
        if (ec.cls == ElemClass::Inside) {
            Vec2 lo, hi;
            grid.elem_box(e, lo, hi);
            for (std::size_t q = 0; q < cell_rule.points.size(); ++q)
                fn(grid.to_ref(lo + grid.h * cell_rule.points[q]),
                   cell_rule.weights[q] * grid.h * grid.h, ex, ey);
        } else {
            for (const auto& tri : ec.tris) {
                const Vec2 e1 = tri[1] - tri[0];
                const Vec2 e2 = tri[2] - tri[0];
                const double jac = e1.x() * e2.y() - e1.y() * e2.x();
                if (jac <= 0.0) continue;
                for (std::size_t q = 0; q < tri_rule.points.size(); ++q)
                    fn(grid.to_ref(tri[0] + tri_rule.points[q].x() * e1 +
                                   tri_rule.points[q].y() * e2),
                       tri_rule.weights[q] * jac, ex, ey);
            }
        }
    }
}

} // namespace detail

/// L2 norm and regularized H1 seminorm of (u_exact - shift) - u_h, using
/// the same per-point metric/regularization pipeline as assembly.
inline ErrorNorms compute_errors(const Discretization& disc,
                                 const ManufacturedProblem& mp, const Eigen::VectorXd& u,
                                 const AssemblyParams& params, double exact_shift = 0.0) {
    ErrorNorms err;
    const int n_quad = params.n_quad(disc.degree);
    for (std::size_t i = 0; i < disc.patches.size(); ++i) {
        const Patch& patch = disc.domain.patches[i];
        const PatchDiscretization& pd = disc.patches[i];
        const std::vector<int>& gmap = disc.dofs.global_of_local[i];
        detail::for_each_bulk_point(pd, n_quad, [&](const Vec2& xref, double w, int ex,
                                                    int ey) {
            const BasisEval bas = pd.space.eval_in_element(xref, ex, ey);
            double uh = 0.0;
            Vec2 guh = Vec2::Zero();
            for (int a = 0; a < bas.count; ++a) {
                const int g = gmap[bas.dofs[a]];
                if (g < 0) continue;
                uh += u[g] * bas.val[a];
                guh += u[g] * bas.grad[a];
            }
            const MetricPointData md = metric_at(patch.map, xref);
            const Vec3 xp = eval_map(patch.map, xref);
            const double ev = (mp.u(xp) - exact_shift) - uh;
            err.l2 += w * ev * ev * md.sqrt_det;
            const Vec2 ge = Vec2(md.DF.transpose() * mp.grad_u(xp)) - guh;
            const Mat2 R = reg_flux_tensor(md.eig, pd.delta).R;
            err.h1_semi += w * ge.dot(R * ge);
        });
    }
    err.l2 = std::sqrt(err.l2);
    err.h1_semi = std::sqrt(err.h1_semi);
    return err;
}

/// Weighted mean (1/|Omega|) ∫ u |G|^{1/2} of the exact solution, by the
/// same bulk quadrature; used to make surface comparisons mean-free.
inline double exact_mean(const Discretization& disc, const ManufacturedProblem& mp,
                         const AssemblyParams& params) {
    double integral = 0.0, area = 0.0;
    const int n_quad = params.n_quad(disc.degree);
    for (std::size_t i = 0; i < disc.patches.size(); ++i) {
        const Patch& patch = disc.domain.patches[i];
        detail::for_each_bulk_point(
            disc.patches[i], n_quad, [&](const Vec2& xref, double w, int, int) {
                const double sd = metric_at(patch.map, xref).sqrt_det;
                integral += w * mp.u(eval_map(patch.map, xref)) * sd;
                area += w * sd;
            });
    }
    return integral / area;
}

enum class MethodVariant { Regularized, RobustDelta0, Naive };

inline const char* variant_name(MethodVariant v) {
    switch (v) {
    case MethodVariant::Regularized: return "regularized";
    case MethodVariant::RobustDelta0: return "robust-delta0";
    case MethodVariant::Naive: return "naive";
    }
    return "?";
}

struct StudyConfig {
    std::string name = "study";
    std::string domain = "model8"; // model8 | ellipsoid | square1
    double gamma = 2.0;
    std::vector<int> degrees{1};
    std::vector<double> hs{0.25};
    MethodVariant variant = MethodVariant::Regularized;
    std::string delta_mode = "cusp"; // cusp | colinear | fixed | power
    double delta_fixed = 0.0;
    double delta_alpha = 0.0; // exponent for power mode
    bool trimmed = false;
    std::vector<double> rotations{0.3, 0.55};
    std::vector<double> offsets; // flattened (x, y) pairs, grid coordinates
    double eta = 0.01;
    double beta_coeff = 25.0; // beta = beta_coeff * p^2
    double kappa = 0.5;
    bool compute_cond = false;
    bool expect_failure = false;
    std::vector<double> alphas; // delta-study exponents
    std::vector<double> gammas; // delta-study gamma values; empty = {gamma}
    int gamma_min = 1, gamma_max = 6;
    double cond_h = 0.1;
    unsigned seed = 0;
    int threads = 1;
};

inline MultipatchDomain build_domain(const std::string& name, double gamma) {
    if (name == "model8") return build_model_multipatch(gamma);
    if (name == "ellipsoid") return build_ellipsoid_multipatch();
    if (name == "square1") return build_unit_square_domain();
    throw invalid_input("unknown domain: " + name);
}

inline DeltaRule delta_rule_for(const StudyConfig& cfg, int p) {
    if (cfg.variant == MethodVariant::RobustDelta0 || cfg.variant == MethodVariant::Naive)
        return DeltaRule::fixed(0.0);
    if (cfg.delta_mode == "cusp") return DeltaRule::cusp(p, cfg.gamma);
    if (cfg.delta_mode == "colinear") return DeltaRule::colinear(p);
    if (cfg.delta_mode == "fixed") return DeltaRule::fixed(cfg.delta_fixed);
    if (cfg.delta_mode == "power") return DeltaRule::power(cfg.delta_alpha);
    throw invalid_input("unknown delta mode: " + cfg.delta_mode);
}

inline AssemblyParams params_for(const StudyConfig& cfg, int p) {
    AssemblyParams params;
    params.beta = cfg.beta_coeff * p * p;
    params.eta = cfg.eta;
    params.kappa = cfg.kappa;
    params.naive_flux = cfg.variant == MethodVariant::Naive;
    return params;
}

inline MeshOptions mesh_options_for(const StudyConfig& cfg, double h) {
    MeshOptions opt;
    opt.h = h;
    if (cfg.trimmed) {
        opt.rotations = cfg.rotations;
        for (std::size_t i = 0; i + 1 < cfg.offsets.size(); i += 2)
            opt.offsets.emplace_back(cfg.offsets[i], cfg.offsets[i + 1]);
    }
    return opt;
}

struct ConvergenceRow {
    int p = 1;
    double h = 0.0;
    int dofs = 0;
    double delta = 0.0;
    double err_l2 = std::numeric_limits<double>::quiet_NaN();
    double eoc_l2 = std::numeric_limits<double>::quiet_NaN();
    double err_h1 = std::numeric_limits<double>::quiet_NaN();
    double eoc_h1 = std::numeric_limits<double>::quiet_NaN();
    double cond = std::numeric_limits<double>::quiet_NaN();
    bool cond_definite = true;
    bool solved = false;
    std::string status = "ok";
    double solution_mean = 0.0;
    long reg_points = 0;
    long collapsed_points = 0;
    int slivers = 0;
    double wall_ms = 0.0;
};

/// EOC between consecutive rows of equal degree: log(e1/e2)/log(h1/h2).
inline void fill_eoc(std::vector<ConvergenceRow>& rows) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].p != rows[i - 1].p) continue;
        const double lh = std::log(rows[i - 1].h / rows[i].h);
        if (rows[i - 1].err_l2 > 0 && rows[i].err_l2 > 0)
            rows[i].eoc_l2 = std::log(rows[i - 1].err_l2 / rows[i].err_l2) / lh;
        if (rows[i - 1].err_h1 > 0 && rows[i].err_h1 > 0)
            rows[i].eoc_h1 = std::log(rows[i - 1].err_h1 / rows[i].err_h1) / lh;
    }
}

/// Builds, assembles, solves and measures one (p, h) combination.
inline ConvergenceRow run_single(const StudyConfig& cfg, const MultipatchDomain& dom,
                                 const ManufacturedProblem& mp, int p, double h) {
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceRow row;
    row.p = p;
    row.h = h;

    const Discretization disc = discretize(dom, mesh_options_for(cfg, h), p,
                                           delta_rule_for(cfg, p));
    row.dofs = disc.dofs.n_global;
    row.delta = disc.patches.empty() ? 0.0 : disc.patches.front().delta;
    const AssemblyParams params = params_for(cfg, p);
    const ProblemData data = problem_data(mp, disc.domain);
    const AssembledSystem sys = assemble_system(disc, data, params, mp.zero_mean);
    row.reg_points = sys.diag.regularized_points;
    row.collapsed_points = sys.diag.collapsed_points;
    row.slivers = sys.diag.slivers_dropped;

    SolveReport rep = mp.zero_mean ? solve_with_constraint(sys.A, sys.b, sys.mean_weights)
                                   : solve(sys.A, sys.b);
    row.solved = rep.success;
    row.status = rep.success ? "ok" : rep.detail;

    if (rep.u.size() == static_cast<Eigen::Index>(row.dofs) && rep.u.allFinite()) {
        double shift = 0.0;
        if (mp.zero_mean) {
            shift = exact_mean(disc, mp, params);
            const double area = sys.mean_weights.sum();
            row.solution_mean = sys.mean_weights.dot(rep.u) / area;
        }
        const ErrorNorms err = compute_errors(disc, mp, rep.u, params, shift);
        row.err_l2 = err.l2;
        row.err_h1 = err.h1_semi;
    } else {
        row.err_l2 = std::numeric_limits<double>::infinity();
        row.err_h1 = std::numeric_limits<double>::infinity();
    }

    if (cfg.compute_cond) {
        const ConditionReport cr = condition_number(sys.A);
        row.cond = cr.cond;
        row.cond_definite = cr.definite;
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    return row;
}

namespace detail {

template <class Task>
void run_parallel(int threads, int n_tasks, Task&& task) {
    if (threads <= 1 || n_tasks <= 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min(threads, n_tasks);
    for (int t = 0; t < n_threads; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) task(i);
        });
    for (std::thread& th : pool) th.join();
}

} // namespace detail

/// Convergence study over all (p, h) of the config; rows ordered by degree
/// then by mesh size, with EOC columns filled per degree.
inline std::vector<ConvergenceRow> run_convergence(const StudyConfig& cfg) {
    const MultipatchDomain dom = build_domain(cfg.domain, cfg.gamma);
    const ManufacturedProblem mp =
        cfg.domain == "ellipsoid" ? manufactured_surface() : manufactured_2d();

    std::vector<std::pair<int, double>> tasks;
    for (const int p : cfg.degrees)
        for (const double h : cfg.hs) tasks.emplace_back(p, h);
    std::vector<ConvergenceRow> rows(tasks.size());
    detail::run_parallel(cfg.threads, static_cast<int>(tasks.size()), [&](int i) {
        rows[i] = run_single(cfg, dom, mp, tasks[i].first, tasks[i].second);
    });
    fill_eoc(rows);
    return rows;
}

/// Laplace-Beltrami study on the closed surface: zero-mean constrained
/// solve, mean-free errors. Same row format as run_convergence.
inline std::vector<ConvergenceRow> run_surface(const StudyConfig& cfg) {
    StudyConfig scfg = cfg;
    scfg.domain = "ellipsoid";
    return run_convergence(scfg);
}

struct ConditionRow {
    MethodVariant variant = MethodVariant::Regularized;
    double gamma = 1.0;
    int p = 2;
    double h = 0.1;
    int dofs = 0;
    double cond = std::numeric_limits<double>::quiet_NaN();
    bool definite = false;
    std::string detail;
};

/// Condition sweep over gamma for the three method variants at fixed mesh
/// size (matching meshes, p = 2).
inline std::vector<ConditionRow> run_condition_sweep(const StudyConfig& cfg) {
    std::vector<ConditionRow> rows;
    const ManufacturedProblem mp = manufactured_2d();
    for (int g = cfg.gamma_min; g <= cfg.gamma_max; ++g) {
        const MultipatchDomain dom = build_domain(cfg.domain, g);
        for (const MethodVariant v :
             {MethodVariant::Regularized, MethodVariant::RobustDelta0, MethodVariant::Naive}) {
            StudyConfig c = cfg;
            c.gamma = g;
            c.variant = v;
            const int p = c.degrees.empty() ? 2 : c.degrees.front();
            const Discretization disc = discretize(dom, mesh_options_for(c, cfg.cond_h), p,
                                                   delta_rule_for(c, p));
            const AssembledSystem sys =
                assemble_system(disc, problem_data(mp, disc.domain), params_for(c, p));
            const ConditionReport cr = condition_number(sys.A);
            ConditionRow row;
            row.variant = v;
            row.gamma = g;
            row.p = p;
            row.h = cfg.cond_h;
            row.dofs = disc.dofs.n_global;
            row.cond = cr.cond;
            row.definite = cr.definite;
            row.detail = cr.detail;
            rows.push_back(row);
        }
    }
    return rows;
}

struct DeltaStudyResult {
    double gamma = 1.0;
    int p = 1;
    std::vector<double> hs;
    std::vector<double> alphas;
    // err_*[i][j]: mesh hs[i], exponent alphas[j]
    std::vector<std::vector<double>> err_l2, err_h1;
};

/// Sweeps delta = h^alpha over a list of exponents for one (gamma, p).
inline DeltaStudyResult run_delta_study(const StudyConfig& cfg, double gamma, int p) {
    DeltaStudyResult res;
    res.gamma = gamma;
    res.p = p;
    res.hs = cfg.hs;
    res.alphas = cfg.alphas;
    res.err_l2.assign(cfg.hs.size(), std::vector<double>(cfg.alphas.size()));
    res.err_h1.assign(cfg.hs.size(), std::vector<double>(cfg.alphas.size()));

    const int n_tasks = static_cast<int>(cfg.hs.size() * cfg.alphas.size());
    const MultipatchDomain dom = build_domain(cfg.domain, gamma);
    const ManufacturedProblem mp = manufactured_2d();
    detail::run_parallel(cfg.threads, n_tasks, [&](int t) {
        const std::size_t i = t / cfg.alphas.size();
        const std::size_t j = t % cfg.alphas.size();
        StudyConfig c = cfg;
        c.gamma = gamma;
        c.delta_mode = "power";
        c.delta_alpha = cfg.alphas[j];
        const ConvergenceRow row = run_single(c, dom, mp, p, cfg.hs[i]);
        res.err_l2[i][j] = row.err_l2;
        res.err_h1[i][j] = row.err_h1;
    });
    return res;
}

} // namespace sgiga
