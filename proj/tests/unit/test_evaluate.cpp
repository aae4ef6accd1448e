#include <gtest/gtest.h>

#include "mktgen/evaluate.hpp"
#include "support/oracles.hpp"

using namespace mktgen;

namespace {

Vector random_vector(RngStream& rng, Index n)
{
    Vector v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST(Summary, InterpolatedPercentiles)
{
    Matrix m(5, 1);
    m << 1, 2, 3, 4, 5;
    const auto s = summary(SeriesFrame::from_matrix(m));
    EXPECT_DOUBLE_EQ(s.mean(0), 3.0);
    EXPECT_NEAR(s.p1(0), 1.04, 1e-12);
    EXPECT_NEAR(s.p99(0), 4.96, 1e-12);
    EXPECT_NEAR(s.std(0), std::sqrt(2.5), 1e-12);
}

TEST(Summary, ConstantColumn)
{
    const auto s = summary(SeriesFrame::from_matrix(Matrix::Constant(7, 1, 3.5)));
    EXPECT_EQ(s.std(0), 0.0);
    EXPECT_EQ(s.p1(0), 3.5);
    EXPECT_EQ(s.p99(0), 3.5);
}

TEST(Summary, NormalUpperPercentile)
{
    RngStream rng(12);
    const Matrix m = 2.0 * rng.normal_matrix(10000, 1);
    const auto s = summary(SeriesFrame::from_matrix(m));
    EXPECT_NEAR(s.p99(0), 2.0 * oracle::inv_phi(0.99), 0.15);
    EXPECT_NEAR(2.0 * oracle::inv_phi(0.99), 4.6527, 1e-4);
}

TEST(Summary, TooFewRows)
{
    try {
        summary(SeriesFrame::from_matrix(Matrix::Ones(1, 2)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
    }
}

TEST(Summary, Replications)
{
    Matrix a(3, 1), b(3, 1);
    a << 0, 1, 2;
    b << 2, 3, 4;
    const auto s = summary(std::vector<SeriesFrame>{SeriesFrame::from_matrix(a), SeriesFrame::from_matrix(b)});
    EXPECT_EQ(s.replications, 2);
    EXPECT_DOUBLE_EQ(s.mean(0), 2.0);
    ASSERT_TRUE(s.mean_sd.has_value());
    EXPECT_NEAR((*s.mean_sd)(0), std::sqrt(2.0), 1e-12);
    EXPECT_NEAR((*s.std_sd)(0), 0.0, 1e-12);
}

TEST(Summary, PercentilesMonotoneInLevel)
{
    RngStream rng(2);
    const auto sorted = sorted_copy(random_vector(rng, 101));
    double prev = -1e300;
    for (double p = 0.0; p <= 1.0; p += 0.01) {
        const double q = percentile_sorted(sorted, p);
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(Corr, SelfAndNegation)
{
    RngStream rng(5);
    Matrix m(50, 2);
    m.col(0) = random_vector(rng, 50);
    m.col(1) = -m.col(0);
    const Matrix c = corr_matrix(m);
    EXPECT_NEAR(c(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(c(0, 1), -1.0, 1e-12);
    EXPECT_EQ(c(0, 1), c(1, 0));
}

TEST(Corr, AffineInvariance)
{
    RngStream rng(6);
    const Matrix m = rng.normal_matrix(200, 3);
    Matrix scaled = m;
    scaled.col(0) = 3.0 * m.col(0).array() + 7.0;
    scaled.col(2) = 0.01 * m.col(2).array() - 2.0;
    EXPECT_LT((corr_matrix(m) - corr_matrix(scaled)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Corr, Errors)
{
    Matrix m = Matrix::Ones(10, 2);
    m(3, 0) = 2.0;
    try {
        corr_matrix(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConstantColumn);
    }
    EXPECT_THROW(corr_matrix(Matrix::Random(2, 2)), Error);
}

TEST(Acf, WhiteNoise)
{
    RngStream rng(8);
    const auto r = acf(random_vector(rng, 5000), 5);
    EXPECT_LE(std::abs(r.estimate(0)), 0.05);
    EXPECT_NEAR(r.band, 2.0 / std::sqrt(5000.0), 1e-15);
    EXPECT_EQ(r.lags.front(), 1);
    EXPECT_EQ(r.lags.back(), 5);
    EXPECT_LE(r.estimate.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Acf, Ar1)
{
    RngStream rng(9);
    Vector x(5000);
    x(0) = rng.normal() / std::sqrt(0.75);
    for (Index t = 1; t < x.size(); ++t)
        x(t) = 0.5 * x(t - 1) + rng.normal();
    EXPECT_NEAR(acf(x, 3).estimate(0), 0.5, 0.05);
    EXPECT_DOUBLE_EQ(acf_at(x, 0), 1.0);
}

TEST(Acf, HandComputed)
{
    Vector x(4);
    x << 1, 2, 3, 4;
    // centered: -1.5 -0.5 0.5 1.5; sum sq = 5; lag-1 products = 0.75 - 0.25 + 0.75
    EXPECT_NEAR(acf_at(x, 1), 1.25 / 5.0, 1e-15);
}

TEST(Acf, ReversalInvariant)
{
    RngStream rng(10);
    const Vector x = random_vector(rng, 300);
    const Vector y = x.reverse();
    const auto a = acf(x, 10), b = acf(y, 10);
    EXPECT_LT((a.estimate - b.estimate).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Acf, Errors)
{
    EXPECT_THROW(acf(Vector::Constant(20, 1.0), 2), Error);
    EXPECT_THROW(acf(Vector::LinSpaced(5, 0, 1), 3), Error);
}

TEST(Wasserstein, Basics)
{
    Vector x(1), y(1);
    x << 0;
    y << 1;
    EXPECT_DOUBLE_EQ(wasserstein1_1d(x, y), 1.0);
    RngStream rng(1);
    const Vector z = random_vector(rng, 20);
    EXPECT_EQ(wasserstein1_1d(z, z), 0.0);
    EXPECT_THROW(wasserstein1_1d(Vector(0), z), Error);
}

TEST(Wasserstein, MatchesBruteForceAssignment)
{
    RngStream rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(rng, 6), y = random_vector(rng, 6);
        EXPECT_NEAR(wasserstein1_1d(x, y), oracle::brute_force_w1(to_std(x), to_std(y)), 1e-12);
    }
}

TEST(Wasserstein, MetricAxioms)
{
    RngStream rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector x = random_vector(rng, 15), y = random_vector(rng, 15), z = random_vector(rng, 15);
        EXPECT_EQ(wasserstein1_1d(x, y), wasserstein1_1d(y, x));
        EXPECT_LE(wasserstein1_1d(x, z), wasserstein1_1d(x, y) + wasserstein1_1d(y, z) + 1e-12);
        EXPECT_GE(wasserstein1_1d(x, y), 0.0);
    }
}

TEST(Wasserstein, UnequalSizesUseQuantileFunctions)
{
    // Replicating every point k times leaves the empirical measure unchanged.
    RngStream rng(33);
    const Vector x = random_vector(rng, 4), y = random_vector(rng, 6);
    Vector x3(12);
    for (Index i = 0; i < 12; ++i)
        x3(i) = x(i % 4);
    Vector y2(12);
    for (Index i = 0; i < 12; ++i)
        y2(i) = y(i % 6);
    EXPECT_NEAR(wasserstein1_1d(x, y), wasserstein1_1d(x3, y2), 1e-12);
    // Against a point mass W1 is the mean absolute deviation.
    Vector c(1);
    c << 0.25;
    EXPECT_NEAR(wasserstein1_1d(y, c), (y.array() - 0.25).abs().mean(), 1e-12);
}

TEST(Kl, Cases)
{
    Vector p(2), q(2);
    p << 1, 0;
    q << 0.5, 0.5;
    EXPECT_NEAR(kl_discrete(p, q), std::log(2.0), 1e-15);
    EXPECT_EQ(kl_discrete(q, q), 0.0);
    try {
        kl_discrete(q, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SupportError);
    }
}

TEST(Kl, GibbsInequality)
{
    RngStream rng(40);
    for (int trial = 0; trial < 1000; ++trial) {
        Vector p(5), q(5);
        for (Index i = 0; i < 5; ++i) {
            p(i) = rng.uniform() + 1e-3;
            q(i) = rng.uniform() + 1e-3;
        }
        p /= p.sum();
        q /= q.sum();
        EXPECT_GE(kl_discrete(p, q), 0.0);
    }
}

TEST(Qq, DiagonalSlopeAndMonotone)
{
    RngStream rng(41);
    const Vector a = random_vector(rng, 500);
    const Matrix same = qq_points(a, a, 20);
    EXPECT_EQ(same.col(0), same.col(1));
    const Matrix doubled = qq_points(a, 2.0 * a, 20);
    EXPECT_LT((doubled.col(1) - 2.0 * doubled.col(0)).cwiseAbs().maxCoeff(), 1e-12);
    for (Index i = 1; i < 20; ++i) {
        EXPECT_GE(doubled(i, 0), doubled(i - 1, 0));
        EXPECT_GE(doubled(i, 1), doubled(i - 1, 1));
    }
    EXPECT_THROW(qq_points(a, a, 1), Error);
    EXPECT_THROW(qq_points(Vector(0), a, 5), Error);
}
