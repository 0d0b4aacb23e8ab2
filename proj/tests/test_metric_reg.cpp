#include "sgiga/metric_reg.hpp"
#include "sgiga/geometry.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace sgiga;

namespace {

Mat2 random_spd(std::mt19937& rng, double lmin, double lmax) {
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
    const double a = angle(rng);
    Mat2 Q;
    Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    std::uniform_real_distribution<double> ld(std::log(lmin), std::log(lmax));
    Mat2 L = Mat2::Zero();
    L(0, 0) = std::exp(ld(rng));
    L(1, 1) = std::exp(ld(rng));
    return Q * L * Q.transpose();
}

/// Dense oracle |G|^{1/2} G^{-1} for well-conditioned inputs.
Mat2 dense_flux_oracle(const Mat2& G) {
    return std::sqrt(G.determinant()) * G.inverse();
}

} // namespace

TEST_CASE("sym_eig basics") {
    const EigenDecomp2 id = sym_eig(Mat2(Mat2::Identity()));
    CHECK(id.lambda[0] == Catch::Approx(1.0));
    CHECK(id.lambda[1] == Catch::Approx(1.0));

    Mat2 D;
    D << 4, 0, 0, 9;
    const EigenDecomp2 d = sym_eig(D);
    CHECK(d.lambda[0] == Catch::Approx(4.0));
    CHECK(d.lambda[1] == Catch::Approx(9.0));
    CHECK(std::abs(d.vectors.col(0).x()) == Catch::Approx(1.0)); // axis vectors
    CHECK(std::abs(d.vectors.col(1).y()) == Catch::Approx(1.0));

    // cusp metric at (0.5, 0.5), gamma = 2: product and trace identities
    const Mat2 G = metric_at(ParametricMap::cusp(2.0), Vec2(0.5, 0.5)).G;
    const EigenDecomp2 e = sym_eig(G);
    CHECK(e.lambda[0] * e.lambda[1] == Catch::Approx(0.0625).epsilon(1e-12));
    CHECK(e.lambda[0] + e.lambda[1] == Catch::Approx(1.3125).epsilon(1e-13));

    Mat2 bad;
    bad << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(sym_eig(bad), invalid_input);
}

TEST_CASE("sym_eig reconstructs the input and returns orthonormal vectors") {
    std::mt19937 rng(99);
    for (int k = 0; k < 5000; ++k) {
        const Mat2 G = random_spd(rng, 1e-14, 1e3);
        const EigenDecomp2 e = sym_eig(G);
        REQUIRE(e.lambda[0] >= 0.0);
        REQUIRE(e.lambda[0] <= e.lambda[1]);
        Mat2 R = Mat2::Zero();
        for (int i = 0; i < 2; ++i)
            R += e.lambda[i] * (e.vectors.col(i) * e.vectors.col(i).transpose());
        REQUIRE((R - G).norm() <= 1e-12 * std::max(1.0, G.norm()));
        REQUIRE(std::abs(e.vectors.col(0).norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(e.vectors.col(1).norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(e.vectors.col(0).dot(e.vectors.col(1))) < 1e-12);
    }
}

TEST_CASE("sym_eig 3x3") {
    std::mt19937 rng(3);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 200; ++k) {
        Mat3 B;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) B(i, j) = n01(rng);
        const Mat3 G = B.transpose() * B;
        const EigenDecomp3 e = sym_eig(G);
        Mat3 R = Mat3::Zero();
        for (int i = 0; i < 3; ++i)
            R += e.lambda[i] * (e.vectors.col(i) * e.vectors.col(i).transpose());
        REQUIRE((R - G).norm() <= 1e-12 * std::max(1.0, G.norm()));
        REQUIRE(e.lambda[0] >= 0.0);
        REQUIRE(e.lambda[0] <= e.lambda[2]);
    }
}

TEST_CASE("regularize_eigenvalue") {
    CHECK(regularize_eigenvalue(1.0, 0.25) == Catch::Approx(1.0));
    CHECK(regularize_eigenvalue(0.01, 0.04) == Catch::Approx(0.02));
    CHECK(regularize_eigenvalue(0.0, 0.04) == 0.0);
    // identity on lambda >= delta
    CHECK(regularize_eigenvalue(0.5, 0.5) == Catch::Approx(0.5));
    // continuity across lambda = delta
    const double d = 0.3;
    CHECK(regularize_eigenvalue(d - 1e-12, d) ==
          Catch::Approx(regularize_eigenvalue(d + 1e-12, d)).margin(1e-11));
}

TEST_CASE("regularized flux tensor examples") {
    const RegFluxTensor r1 = reg_flux_tensor(Mat2(Mat2::Identity()), 0.25);
    CHECK((r1.R - Mat2::Identity()).norm() < 1e-14);
    CHECK_FALSE(r1.regularized);

    Mat2 G2;
    G2 << 1, 0, 0, 0;
    const RegFluxTensor r2 = reg_flux_tensor(G2, 0.04);
    CHECK(r2.R(0, 0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(r2.R(1, 1) == Catch::Approx(5.0).epsilon(1e-12));
    CHECK(std::abs(r2.R(0, 1)) < 1e-12);
    CHECK(r2.R.allFinite());

    Mat2 G3;
    G3 << 1, 0, 0, 1e-4;
    const RegFluxTensor r3 = reg_flux_tensor(G3, 0.0);
    CHECK(r3.R(0, 0) == Catch::Approx(0.01).epsilon(1e-12));
    CHECK(r3.R(1, 1) == Catch::Approx(100.0).epsilon(1e-12));
    CHECK((r3.R - dense_flux_oracle(G3)).norm() < 1e-10 * r3.R.norm());

    // fully collapsed: all eigenvalues zero at delta = 0
    const RegFluxTensor r4 = reg_flux_tensor(Mat2(Mat2::Zero()), 0.0);
    CHECK(r4.fully_collapsed);
    CHECK(r4.R.norm() == 0.0);
}

TEST_CASE("oracle equivalence for inactive regularization") {
    std::mt19937 rng(10);
    const double delta = 1e-6;
    for (int k = 0; k < 100000; ++k) {
        const Mat2 G = random_spd(rng, 2e-6, 1e4);
        const RegFluxTensor r = reg_flux_tensor(G, delta);
        const Mat2 oracle = dense_flux_oracle(G);
        REQUIRE((r.R - oracle).norm() <= 1e-10 * oracle.norm());
    }
}

TEST_CASE("flux tensor spectral monotonicity and bound in delta") {
    std::mt19937 rng(11);
    for (int k = 0; k < 2000; ++k) {
        const Mat2 G = random_spd(rng, 1e-12, 10.0);
        const EigenDecomp2 e = sym_eig(G);
        double prev_lo = std::numeric_limits<double>::infinity();
        double prev_hi = std::numeric_limits<double>::infinity();
        for (double delta : {0.0, 1e-8, 1e-4, 1e-2, 1.0}) {
            const EigenDecomp2 re = sym_eig(reg_flux_tensor(G, delta).R);
            REQUIRE(re.lambda[0] <= prev_lo * (1 + 1e-12));
            REQUIRE(re.lambda[1] <= prev_hi * (1 + 1e-12));
            prev_lo = re.lambda[0];
            prev_hi = re.lambda[1];
            if (delta > 0.0) {
                const double bound = std::sqrt(e.lambda[1] / delta) + 1e-12;
                REQUIRE(re.lambda[1] <= bound * (1 + 1e-10));
            }
        }
    }
}

TEST_CASE("flux tensor invariant under eigenvector sign flips and equal-eigenvalue bases") {
    // sign flips: accumulate Algorithm-1 terms with flipped vectors by hand
    std::mt19937 rng(12);
    for (int k = 0; k < 500; ++k) {
        const Mat2 G = random_spd(rng, 1e-10, 1.0);
        const EigenDecomp2 e = sym_eig(G);
        EigenDecomp2 flipped = e;
        flipped.vectors.col(0) *= -1.0;
        const Mat2 a = reg_flux_tensor(e, 1e-4).R;
        const Mat2 b = reg_flux_tensor(flipped, 1e-4).R;
        REQUIRE((a - b).norm() == 0.0);
    }
    // degenerate pair: any orthonormal basis gives the same tensor
    const double c = 0.7;
    EigenDecomp2 basis1;
    basis1.lambda = Vec2(c, c);
    basis1.vectors = Mat2::Identity();
    EigenDecomp2 basis2;
    basis2.lambda = Vec2(c, c);
    const double ang = 0.83;
    basis2.vectors << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
    const Mat2 a = reg_flux_tensor(basis1, 0.1).R;
    const Mat2 b = reg_flux_tensor(basis2, 0.1).R;
    REQUIRE((a - b).norm() < 1e-14);
}

TEST_CASE("flux tensor 3x3 matches dense oracle away from regularization") {
    std::mt19937 rng(13);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 500; ++k) {
        Mat3 B;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) B(i, j) = n01(rng);
        const Mat3 G = B.transpose() * B + 0.1 * Mat3::Identity();
        const RegFluxTensor3 r = reg_flux_tensor(G, 1e-6);
        const Mat3 oracle = std::sqrt(G.determinant()) * G.inverse();
        REQUIRE((r.R - oracle).norm() <= 1e-9 * oracle.norm());
    }
}

TEST_CASE("naive flux tensor baseline") {
    CHECK((naive_flux_tensor(Mat2(Mat2::Identity())) - Mat2::Identity()).norm() < 1e-15);

    Mat2 D;
    D << 4, 0, 0, 1;
    const Mat2 R = naive_flux_tensor(D);
    CHECK(R(0, 0) == Catch::Approx(0.5));
    CHECK(R(1, 1) == Catch::Approx(2.0));

    // the two-factor route transits near-overflow intermediates that the
    // per-eigenpair accumulation never forms
    Mat2 tiny;
    tiny << 1, 0, 0, 1e-320;
    const Mat2 Rn = naive_flux_tensor(tiny);
    CHECK_FALSE(Rn.allFinite()); // inverse factor overflows
    const RegFluxTensor robust = reg_flux_tensor(tiny, 0.0);
    CHECK(robust.R.allFinite());
    CHECK(robust.R(1, 1) == Catch::Approx(1e160).epsilon(1e-10));

    Mat2 small;
    small << 1, 0, 0, 1e-300;
    CHECK(naive_flux_tensor(small).allFinite()); // 1e300 inverse entry, just short of overflow
    CHECK(naive_flux_tensor(small)(1, 1) == Catch::Approx(1e150).epsilon(1e-10));
}

TEST_CASE("delta rules") {
    CHECK(delta_for_mesh(DeltaRule::cusp(2, 2.0), 0.1) ==
          Catch::Approx(4.6416e-6).epsilon(1e-4));
    for (double h : {0.5, 0.25, 0.01})
        CHECK(delta_for_mesh(DeltaRule::cusp(1, 1.0), h) == Catch::Approx(h * h).epsilon(1e-14));
    CHECK(delta_for_mesh(DeltaRule::fixed(0.0), 0.25) == 0.0);
    CHECK(delta_for_mesh(DeltaRule::fixed(0.125), 1e-3) == 0.125);
    CHECK(delta_for_mesh(DeltaRule::colinear(2), 0.5) ==
          Catch::Approx(std::pow(0.5, 8.0 / 3.0)).epsilon(1e-14));
    CHECK(delta_for_mesh(DeltaRule::power(1.5), 0.25) ==
          Catch::Approx(std::pow(0.25, 1.5)).epsilon(1e-14));
    CHECK_THROWS_AS(delta_for_mesh(DeltaRule::cusp(1, 1.0), 0.0), invalid_input);
}
