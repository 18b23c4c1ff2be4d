#include <gtest/gtest.h>

#include <random>

#include "doslb/linalg.hpp"
#include "oracles.hpp"

using namespace doslb;

namespace {

Mat diag2(double a, double b) {
    Mat m(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

double max_abs_diff(const Mat& a, const Mat& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.a.size(); ++i) d = std::max(d, std::fabs(a.a[i] - b.a[i]));
    return d;
}

Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

} // namespace

TEST(SpdSqrt, DiagonalPin) {
    const SpdFactorization f = spd_sqrt(diag2(4.0, 9.0));
    EXPECT_NEAR(f.sqrt(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(f.sqrt(1, 1), 3.0, 1e-12);
    EXPECT_NEAR(f.sqrt(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(f.inv_sqrt(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(f.inv_sqrt(1, 1), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(f.eigenvalues[0], 4.0, 1e-12);
    EXPECT_NEAR(f.eigenvalues[1], 9.0, 1e-12);
}

TEST(SpdSqrt, IdentityPin) {
    const SpdFactorization f = spd_sqrt(identity(3));
    EXPECT_LT(max_abs_diff(f.sqrt, identity(3)), 1e-12);
    EXPECT_LT(max_abs_diff(f.inv_sqrt, identity(3)), 1e-12);
}

TEST(SpdSqrt, MultiplyBackOracle) {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const Mat m = testutil::random_spd(rng, n);
        const SpdFactorization f = spd_sqrt(m);
        const Mat back = matmul(f.sqrt, f.sqrt);
        EXPECT_LT(max_abs_diff(back, m), 1e-9 * (1.0 + frobenius_norm(m)));
        const Mat eye = matmul(f.inv_sqrt, f.sqrt);
        EXPECT_LT(max_abs_diff(eye, identity(n)), 1e-9);
        for (size_t i = 1; i < f.eigenvalues.size(); ++i)
            EXPECT_LE(f.eigenvalues[i - 1], f.eigenvalues[i]);
        EXPECT_GT(f.eigenvalues.front(), 0.0);
    }
}

TEST(SpdSqrt, SqrtOutputIsBitSymmetric) {
    std::mt19937_64 rng(77);
    const Mat m = testutil::random_spd(rng, 5);
    const SpdFactorization f = spd_sqrt(m);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            EXPECT_EQ(f.sqrt(i, j), f.sqrt(j, i));
            EXPECT_EQ(f.inv_sqrt(i, j), f.inv_sqrt(j, i));
        }
}

TEST(SpdSqrt, Errors) {
    Mat notsquare(2, 3);
    EXPECT_THROW(spd_sqrt(notsquare), DimensionMismatch);

    Mat asym = identity(2);
    asym(0, 1) = 0.5;
    EXPECT_THROW(spd_sqrt(asym), NotSymmetric);

    EXPECT_THROW(spd_sqrt(diag2(1.0, -1.0)), NotPositiveDefinite);

    Mat nan = identity(2);
    nan(0, 0) = std::nan("");
    EXPECT_THROW(spd_sqrt(nan), NonFiniteInput);
}

TEST(RankOneUpdate, BasisVectorPin) {
    const Mat m = rank_one_update(identity(2), Vec{1.0, 0.0});
    EXPECT_EQ(m(0, 0), 2.0);
    EXPECT_EQ(m(1, 1), 1.0);
    EXPECT_EQ(m(0, 1), 0.0);
}

TEST(RankOneUpdate, SequenceMatchesDirectSummationOracle) {
    std::mt19937_64 rng(99);
    const int n = 4;
    Mat incremental = scaled_identity(n, 2.5);
    std::vector<Vec> xs;
    for (int k = 0; k < 10; ++k) {
        Vec x(static_cast<size_t>(n));
        for (double& v : x) v = testutil::normal(rng);
        xs.push_back(x);
        incremental = rank_one_update(incremental, x);
    }
    Mat direct = scaled_identity(n, 2.5);
    for (const Vec& x : xs)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) direct(i, j) += x[i] * x[j];
    EXPECT_LT(max_abs_diff(incremental, direct), 1e-12 * (1.0 + frobenius_norm(direct)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) EXPECT_EQ(incremental(i, j), incremental(j, i));
}

TEST(WeightedNorm, Pins) {
    EXPECT_NEAR(weighted_norm(Vec{3.0, 4.0}, identity(2)), 5.0, 1e-12);
    EXPECT_EQ(weighted_norm(Vec{0.0, 0.0}, identity(2)), 0.0);
    EXPECT_NEAR(weighted_norm(Vec{1.0, 1.0}, diag2(2.0, 3.0)), std::sqrt(5.0), 1e-12);
}

TEST(WeightedNorm, AbsoluteHomogeneity) {
    std::mt19937_64 rng(5);
    const Mat m = testutil::random_spd(rng, 3);
    Vec x{0.3, -1.2, 2.0};
    const double base = weighted_norm(x, m);
    EXPECT_NEAR(weighted_norm(scaled(x, -2.5), m), 2.5 * base, 1e-12 * (1.0 + base));
}

TEST(WeightedNorm, Errors) {
    EXPECT_THROW(weighted_norm(Vec{1.0}, identity(2)), DimensionMismatch);
}

TEST(SolveSpd, DiagonalPin) {
    const Vec y = solve_spd(diag2(2.0, 4.0), Vec{2.0, 8.0});
    EXPECT_NEAR(y[0], 1.0, 1e-12);
    EXPECT_NEAR(y[1], 2.0, 1e-12);
}

TEST(SolveSpd, ResidualOracle) {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const Mat m = testutil::random_spd(rng, n);
        Vec b(static_cast<size_t>(n));
        for (double& v : b) v = testutil::normal(rng);
        const Vec y = solve_spd(m, b);
        const Vec back = matvec(m, y);
        EXPECT_LT(norm2(sub(back, b)), 1e-9 * (1.0 + norm2(b)));
    }
}

TEST(SolveSpd, SingularRejected) {
    Mat sing(2, 2);
    sing(0, 0) = 1.0;
    sing(0, 1) = 1.0;
    sing(1, 0) = 1.0;
    sing(1, 1) = 1.0;
    EXPECT_THROW(solve_spd(sing, Vec{1.0, 1.0}), NotPositiveDefinite);
}

TEST(LogDet, Pins) {
    EXPECT_NEAR(log_det(identity(3)), 0.0, 1e-12);
    EXPECT_NEAR(log_det(diag2(2.0, 3.0)), std::log(6.0), 1e-12);
}

TEST(LogDet, EigenvalueProductOracle) {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 5);
        const Mat m = testutil::random_spd(rng, n);
        const SpdFactorization f = spd_sqrt(m);
        double from_eigen = 0.0;
        for (double w : f.eigenvalues) from_eigen += std::log(w);
        EXPECT_NEAR(log_det(m), from_eigen, 1e-9 * (1.0 + std::fabs(from_eigen)));
    }
}

TEST(Determinism, IdenticalInputsIdenticalOutputs) {
    std::mt19937_64 rng(1);
    const Mat m = testutil::random_spd(rng, 4);
    const SpdFactorization f1 = spd_sqrt(m);
    const SpdFactorization f2 = spd_sqrt(m);
    EXPECT_TRUE(f1.sqrt == f2.sqrt);
    EXPECT_TRUE(f1.inv_sqrt == f2.inv_sqrt);
    EXPECT_TRUE(f1.eigenvalues == f2.eigenvalues);
}
