#pragma once

#include "sgiga/core.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <lapacke.h>

#include <limits>
#include <string>
#include <vector>

namespace sgiga {

struct SolveReport {
    Eigen::VectorXd u;
    // normwise relative residual |Au-b| / (|A| |u| + |b|)
    double residual = std::numeric_limits<double>::infinity();
    bool success = false;
    int iterations = 0; // conjugate-gradient path only
    std::string detail;
};

namespace detail {

/// Residual r = b - A u with compensated products and sums, so iterative
/// refinement keeps converging when |A| |u| dwarfs |r|.
inline Eigen::VectorXd compensated_residual(const Eigen::SparseMatrix<double>& A,
                                            const Eigen::VectorXd& u,
                                            const Eigen::VectorXd& b) {
    const Eigen::Index n = A.rows();
    Eigen::VectorXd r = b;
    Eigen::VectorXd comp = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < A.outerSize(); ++j) {
        const double uj = u[j];
        if (uj == 0.0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it) {
            const Eigen::Index i = it.row();
            const double p = -it.value() * uj;
            const double pe = std::fma(-it.value(), uj, -p);
            const double t = r[i] + p;
            const double z = t - r[i];
            comp[i] += (r[i] - (t - z)) + (p - z) + pe;
            r[i] = t;
        }
    }
    return r + comp;
}

inline double inf_norm(const Eigen::SparseMatrix<double>& A) {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(A.rows());
    for (int j = 0; j < A.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
            rowsum[it.row()] += std::abs(it.value());
    return rowsum.maxCoeff();
}

} // namespace detail

struct SolverOptions {
    int direct_limit = 200000; // above this, diagonally preconditioned CG
    double residual_tol = 1e-10;
};

/// Solves the symmetric system A u = b. Factorization failure is reported,
/// not thrown: unstabilized cut configurations are expected to produce it.
inline SolveReport solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                         const SolverOptions& opt = {}) {
    SolveReport rep;
    const Eigen::Index n = A.rows();
    if (n == 0) {
        rep.success = true;
        rep.residual = 0.0;
        rep.detail = "empty system";
        return rep;
    }
    if (n <= opt.direct_limit) {
        // symmetric Jacobi equilibration: penalty terms near singular
        // corners give the raw matrix a huge diagonal spread
        Eigen::VectorXd s(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = A.coeff(i, i);
            s[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
        }
        Eigen::SparseMatrix<double> As = s.asDiagonal() * A * s.asDiagonal();
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(As);
        if (ldlt.info() != Eigen::Success) {
            rep.detail = "LDLT factorization failed";
            return rep;
        }
        const Eigen::VectorXd bs = s.asDiagonal() * b;
        Eigen::VectorXd us = ldlt.solve(bs);
        // mixed-precision iterative refinement: the compensated residual
        // lets the correction converge to the working-precision solution
        // even when the condition number approaches 1/eps
        double unorm = us.norm();
        for (int it = 0; it < 20 && us.allFinite(); ++it) {
            const Eigen::VectorXd r = detail::compensated_residual(As, us, bs);
            const Eigen::VectorXd du = ldlt.solve(r);
            if (!du.allFinite()) break;
            us += du;
            const double dn = du.norm();
            if (dn <= 1e-16 * unorm) break;
            unorm = us.norm();
        }
        rep.u = s.asDiagonal() * us;
        rep.detail = "LDLT";
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg(A);
        cg.setTolerance(1e-12);
        cg.setMaxIterations(10 * n);
        rep.u = cg.solve(b);
        rep.iterations = static_cast<int>(cg.iterations());
        rep.detail = "CG";
    }
    if (!rep.u.allFinite()) {
        rep.detail += ", non-finite solution";
        return rep;
    }
    const double scale =
        detail::inf_norm(A) * rep.u.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
    rep.residual = scale > 0.0 ? (A * rep.u - b).cwiseAbs().maxCoeff() / scale : 0.0;
    rep.success = rep.residual <= opt.residual_tol;
    if (!rep.success) rep.detail += ", residual above tolerance";
    return rep;
}

/// Solves the bordered system [A c; c' 0][u; m] = [b; 0] that enforces the
/// single scalar constraint c'u = 0 (pure-Neumann style problems). Uses a
/// pivoting LU since the bordered matrix is symmetric indefinite.
inline SolveReport solve_with_constraint(const Eigen::SparseMatrix<double>& A,
                                         const Eigen::VectorXd& b,
                                         const Eigen::VectorXd& c) {
    const Eigen::Index n = A.rows();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(A.nonZeros()) + 2 * n);
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (c[i] == 0.0) continue;
        trips.emplace_back(static_cast<int>(i), static_cast<int>(n), c[i]);
        trips.emplace_back(static_cast<int>(n), static_cast<int>(i), c[i]);
    }
    Eigen::SparseMatrix<double> B(n + 1, n + 1);
    B.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = b;
    rhs[n] = 0.0;

    SolveReport rep;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(B);
    if (lu.info() != Eigen::Success) {
        rep.detail = "LU factorization of bordered system failed";
        return rep;
    }
    const Eigen::VectorXd full = lu.solve(rhs);
    if (!full.allFinite()) {
        rep.detail = "non-finite solution";
        return rep;
    }
    rep.u = full.head(n);
    const double rnorm = rhs.norm();
    rep.residual = (B * full - rhs).norm() / (rnorm > 0.0 ? rnorm : 1.0);
    rep.success = rep.residual <= 1e-10;
    rep.detail = "bordered LU";
    return rep;
}

struct ConditionReport {
    double cond = std::numeric_limits<double>::quiet_NaN();
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool definite = false;
    bool failed = false;
    std::string detail;
};

namespace detail {

inline ConditionReport condition_dense(const Eigen::SparseMatrix<double>& A) {
    const int n = static_cast<int>(A.rows());
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            dense[static_cast<std::size_t>(it.col()) * n + it.row()] = it.value();
    std::vector<double> w(n);
    ConditionReport rep;
    const int info =
        LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', n, dense.data(), n, w.data());
    if (info != 0) {
        rep.failed = true;
        rep.detail = "dsyev failed, info=" + std::to_string(info);
        return rep;
    }
    rep.lambda_min = w[0];
    rep.lambda_max = w[n - 1];
    double min_abs = std::numeric_limits<double>::infinity();
    for (double v : w) min_abs = std::min(min_abs, std::abs(v));
    rep.definite = rep.lambda_min > 0.0;
    rep.cond = rep.definite ? rep.lambda_max / rep.lambda_min
                            : (min_abs > 0.0 ? std::abs(rep.lambda_max) / min_abs
                                             : std::numeric_limits<double>::infinity());
    if (!rep.definite)
        rep.detail = "indefinite, lambda_min=" + std::to_string(rep.lambda_min);
    else
        rep.detail = "dense";
    return rep;
}

inline ConditionReport condition_iterative(const Eigen::SparseMatrix<double>& A,
                                           double tol) {
    const Eigen::Index n = A.rows();
    ConditionReport rep;
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    for (Eigen::Index i = 0; i < n; i += 2) v[i] = -v[i]; // break symmetry modes

    double lmax = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd w = A * v;
        const double norm = w.norm();
        if (norm == 0.0) break;
        w /= norm;
        const double est = w.dot(A * w);
        if (it > 3 && std::abs(est - lmax) <= tol * std::abs(est)) {
            lmax = est;
            break;
        }
        lmax = est;
        v = w;
    }
    rep.lambda_max = lmax;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) {
        rep.failed = true;
        rep.detail = "iterative: LDLT failed (matrix not SPD)";
        return rep;
    }
    v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    double lmin = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Eigen::VectorXd w = ldlt.solve(v);
        const double norm = w.norm();
        if (norm == 0.0) break;
        w /= norm;
        const double est = w.dot(A * w);
        if (it > 3 && std::abs(est - lmin) <= tol * std::abs(est)) {
            lmin = est;
            break;
        }
        lmin = est;
        v = w;
    }
    rep.lambda_min = lmin;
    rep.definite = lmin > 0.0;
    rep.cond = rep.definite ? lmax / lmin : std::numeric_limits<double>::infinity();
    rep.detail = "iterative";
    return rep;
}

} // namespace detail

/// Condition number of a symmetric matrix: dense eigenvalue computation at
/// desk scale, extreme-eigenvalue iteration (relative tolerance 1e-4) above.
inline ConditionReport condition_number(const Eigen::SparseMatrix<double>& A,
                                        int dense_limit = 20000) {
    if (A.rows() != A.cols()) throw invalid_input("condition_number: matrix not square");
    if (A.rows() == 0) throw invalid_input("condition_number: empty matrix");
    if (A.rows() <= dense_limit) return detail::condition_dense(A);
    return detail::condition_iterative(A, 1e-4);
}

} // namespace sgiga
