#pragma once

#include "sgiga/core.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <vector>

namespace sgiga {

/// Eigendecomposition of a symmetric PSD 2x2 matrix. Eigenvalues are
/// ascending and clamped to be non-negative; eigenvectors are the
/// corresponding orthonormal columns of `vectors`.
struct EigenDecomp2 {
    Vec2 lambda;
    Mat2 vectors;
};

struct EigenDecomp3 {
    Vec3 lambda;
    Mat3 vectors;
};

namespace detail {

inline double clamp_eigenvalue(double lambda, double trace) {
    if (lambda >= 0.0) return lambda;
    if (lambda < -1e-12 * std::max(trace, 1.0))
        throw invalid_input("sym_eig: eigenvalue grossly negative, matrix not PSD");
    return 0.0;
}

} // namespace detail

/// Closed-form eigendecomposition of a symmetric 2x2 matrix.
///
/// The small eigenvalue is recovered as det/lambda_max rather than as the
/// difference (trace/2 - disc), which would lose all relative accuracy for
/// near-singular metrics.
inline EigenDecomp2 sym_eig(const Mat2& G) {
    const double scale = std::max({1.0, std::abs(G(0, 0)), std::abs(G(1, 1))});
    if (std::abs(G(0, 1) - G(1, 0)) > 1e-12 * scale)
        throw invalid_input("sym_eig: matrix is not symmetric");

    const double a = G(0, 0), b = G(1, 1), c = 0.5 * (G(0, 1) + G(1, 0));
    const double tr = a + b;
    const double mean = 0.5 * tr;
    const double disc = std::hypot(0.5 * (a - b), c);

    EigenDecomp2 out;
    double hi = mean + disc;
    const double det = a * b - c * c;
    double lo = hi > 0.0 ? det / hi : 0.0;
    hi = detail::clamp_eigenvalue(hi, tr);
    lo = detail::clamp_eigenvalue(lo, tr);
    out.lambda = Vec2(lo, hi);

    if (disc <= 1e-12 * std::max(tr, 1e-300)) {
        out.vectors = Mat2::Identity();
        return out;
    }
    // eigenvector of the large eigenvalue; the two candidate forms are
    // picked by magnitude to avoid cancellation
    Vec2 v1(c, hi - a);
    Vec2 v2(hi - b, c);
    Vec2 v = v1.squaredNorm() >= v2.squaredNorm() ? v1 : v2;
    const double n = v.norm();
    if (n == 0.0) {
        out.vectors = Mat2::Identity();
        return out;
    }
    v /= n;
    out.vectors.col(0) = Vec2(-v.y(), v.x());
    out.vectors.col(1) = v;
    return out;
}

inline EigenDecomp3 sym_eig(const Mat3& G) {
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw invalid_input("sym_eig: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(G);
    EigenDecomp3 out;
    out.vectors = es.eigenvectors();
    const double tr = G.trace();
    for (int k = 0; k < 3; ++k)
        out.lambda[k] = detail::clamp_eigenvalue(es.eigenvalues()[k], tr);
    return out;
}

/// lambda_reg = sqrt(lambda) * max(sqrt(lambda), sqrt(delta)).
/// Equals lambda for lambda >= delta and sqrt(lambda*delta) below.
inline double regularize_eigenvalue(double lambda, double delta) {
    const double sl = std::sqrt(lambda);
    return sl * std::max(sl, std::sqrt(delta));
}

/// The regularized flux tensor R_delta = |G|^{1/2} G_delta^{-1}, accumulated
/// eigenpair-wise so the measure/inverse cancellation never appears as a
/// quotient of two separately rounded factors.
struct RegFluxTensor {
    Mat2 R = Mat2::Zero();
    double delta = 0.0;
    // directions whose term was dropped because max(sqrt(delta), sqrt(lambda))
    // vanished; with delta = 0 this happens only at exactly singular points
    int dropped_dirs = 0;
    bool fully_collapsed = false;
    bool regularized = false; // true iff min_k lambda_k < delta
};

inline RegFluxTensor reg_flux_tensor(const EigenDecomp2& eig, double delta) {
    RegFluxTensor out;
    out.delta = delta;
    const double sd = std::sqrt(delta);
    for (int k = 0; k < 2; ++k) {
        const Vec2 a = eig.vectors.col(k);
        const double denom = a.squaredNorm() * std::max(sd, std::sqrt(eig.lambda[k]));
        if (denom == 0.0) {
            ++out.dropped_dirs;
            continue;
        }
        const double num = std::sqrt(eig.lambda[1 - k]);
        out.R.noalias() += (num / denom) * (a * a.transpose());
    }
    out.fully_collapsed = out.dropped_dirs == 2;
    out.regularized = eig.lambda[0] < delta;
    return out;
}

inline RegFluxTensor reg_flux_tensor(const Mat2& G, double delta) {
    return reg_flux_tensor(sym_eig(G), delta);
}

struct RegFluxTensor3 {
    Mat3 R = Mat3::Zero();
    double delta = 0.0;
    int dropped_dirs = 0;
    bool fully_collapsed = false;
    bool regularized = false;
};

inline RegFluxTensor3 reg_flux_tensor(const Mat3& G, double delta) {
    const EigenDecomp3 eig = sym_eig(G);
    RegFluxTensor3 out;
    out.delta = delta;
    const double sd = std::sqrt(delta);
    for (int k = 0; k < 3; ++k) {
        const Vec3 a = eig.vectors.col(k);
        const double denom = a.squaredNorm() * std::max(sd, std::sqrt(eig.lambda[k]));
        if (denom == 0.0) {
            ++out.dropped_dirs;
            continue;
        }
        double num = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != k) num *= std::sqrt(eig.lambda[j]);
        out.R.noalias() += (num / denom) * (a * a.transpose());
    }
    out.fully_collapsed = out.dropped_dirs == 3;
    out.regularized = eig.lambda[0] < delta;
    return out;
}

/// Baseline computation of |G|^{1/2} G^{-1} as a product of two separately
/// rounded factors, with the inverse taken by partial-pivoting LU the way a
/// generic inv() routine does. Exists only to reproduce the failure mode of
/// treating the measure and the inverse metric independently; never used in
/// the method path. (The 2x2 adjugate form would be a positive scalar times
/// an exactly symmetric matrix and so could not lose definiteness, which
/// misses the point of the baseline.)
inline Mat2 naive_flux_tensor(const Mat2& G) {
    const bool pivot = std::abs(G(1, 0)) > std::abs(G(0, 0));
    const int r0 = pivot ? 1 : 0, r1 = 1 - r0;
    const double u11 = G(r0, 0), u12 = G(r0, 1);
    const double l21 = G(r1, 0) / u11;
    const double u22 = G(r1, 1) - l21 * u12;
    const double det = (pivot ? -1.0 : 1.0) * u11 * u22;

    Mat2 inv;
    for (int col = 0; col < 2; ++col) {
        // forward: L y = P e_col, backward: U x = y
        const double y1 = col == r0 ? 1.0 : 0.0;
        const double y2 = (col == r1 ? 1.0 : 0.0) - l21 * y1;
        inv(1, col) = y2 / u22;
        inv(0, col) = (y1 - u12 * inv(1, col)) / u11;
    }
    return std::sqrt(det) * inv;
}

/// Mesh-size driven choice of the regularization parameter.
struct DeltaRule {
    enum class Mode { Cusp, Colinear, Fixed };
    Mode mode = Mode::Cusp;
    int degree = 1;      // spline degree p
    double gamma = 1.0;  // cusp aggressiveness
    double value = 0.0;  // used by Fixed

    static DeltaRule cusp(int p, double gamma) { return {Mode::Cusp, p, gamma, 0.0}; }
    static DeltaRule colinear(int p) { return {Mode::Colinear, p, 1.0, 0.0}; }
    static DeltaRule fixed(double v) { return {Mode::Fixed, 1, 1.0, v}; }
    /// delta = h^alpha, for scaling studies around the accuracy bound
    static DeltaRule power(double alpha) { return {Mode::Cusp, 1, 0.0, alpha}; }
};

inline double delta_for_mesh(const DeltaRule& rule, double h) {
    if (h <= 0.0) throw invalid_input("delta_for_mesh: h must be positive");
    switch (rule.mode) {
    case DeltaRule::Mode::Cusp:
        if (rule.gamma == 0.0) return std::pow(h, rule.value); // explicit exponent
        return std::pow(h, 4.0 * rule.gamma * rule.degree / (rule.gamma + 1.0));
    case DeltaRule::Mode::Colinear:
        return std::pow(h, 4.0 * rule.degree / 3.0);
    case DeltaRule::Mode::Fixed:
        return rule.value;
    }
    return 0.0;
}

/// Indicator of {min_k lambda_k(G(x)) < delta} sampled at the centers of an
/// n-by-n grid over [0,1]^2; row-major, row j is the strip y in [j/n,(j+1)/n].
template <class MetricFn>
std::vector<std::uint8_t> regularization_region(MetricFn&& metric, double delta, int n) {
    std::vector<std::uint8_t> field(static_cast<std::size_t>(n) * n, 0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 x((i + 0.5) / n, (j + 0.5) / n);
            const EigenDecomp2 eig = sym_eig(Mat2(metric(x)));
            field[static_cast<std::size_t>(j) * n + i] = eig.lambda[0] < delta ? 1 : 0;
        }
    return field;
}

} // namespace sgiga
