#include <gtest/gtest.h>

#include <algorithm>

#include "mktgen/datagen.hpp"
#include "mktgen/evaluate.hpp"
#include "support/oracles.hpp"

using namespace mktgen;

TEST(Marginal, NormalMedian)
{
    EXPECT_NEAR(marginal_quantile(MarginalSpec::normal(0.0, 2.0), 0.5), 0.0, 1e-12);
    EXPECT_NEAR(marginal_quantile(MarginalSpec::normal(1.0, 2.0), oracle::phi(1.0)), 3.0, 1e-9);
}

TEST(Marginal, StudentT4CriticalValue)
{
    // Invert the t4 CDF obtained by integrating the density numerically.
    const auto cdf = [](double x) { return 0.5 + oracle::simpson([](double s) { return oracle::t_pdf(s, 4.0); }, 0.0, x, 2000); };
    const double expected = oracle::bisect(cdf, 0.975, 0.0, 10.0);
    const double q = marginal_quantile(MarginalSpec::student_t(4.0), 0.975);
    EXPECT_NEAR(q, expected, 1e-6);
    EXPECT_NEAR(q, 2.7764, 5e-4);
}

TEST(Marginal, StudentCdfMatchesIntegral)
{
    for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
        const double integral = 0.5 + oracle::simpson([](double s) { return oracle::t_pdf(s, 4.0); }, 0.0, x, 2000);
        EXPECT_NEAR(marginal_cdf(MarginalSpec::student_t(4.0), x), integral, 1e-9);
    }
}

TEST(Marginal, MixtureRoundTrip)
{
    const auto mix = MarginalSpec::mixture({0.5, 0.5}, {-1.5, 2.0}, {2.0, 1.0});
    for (double u = 0.001; u < 1.0; u += 0.0371)
        EXPECT_NEAR(marginal_cdf(mix, marginal_quantile(mix, u)), u, 1e-9);
    EXPECT_NEAR(marginal_cdf(mix, marginal_quantile(mix, 1e-8)), 1e-8, 1e-12);
}

TEST(Marginal, DomainAndValidation)
{
    const auto t = MarginalSpec::student_t(4.0);
    EXPECT_THROW(marginal_quantile(t, 0.0), Error);
    EXPECT_THROW(marginal_quantile(t, 1.0), Error);
    EXPECT_THROW(MarginalSpec::student_t(2.0), Error);
    EXPECT_THROW(MarginalSpec::normal(0.0, 0.0), Error);
    EXPECT_THROW(MarginalSpec::mixture({0.5, 0.4}, {0.0, 1.0}, {1.0, 1.0}), Error);
}

TEST(Copula, IdentityGivesIndependentNormals)
{
    CopulaSpec spec;
    spec.d = 3;
    spec.R = Matrix::Identity(3, 3);
    spec.marginals.assign(3, MarginalSpec::normal(0.0, 1.0));
    RngStream rng(7);
    const auto x = sample_copula(spec, 10000, rng);
    const Matrix c = corr_matrix(x);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j)
            if (i != j)
                EXPECT_LT(std::abs(c(i, j)), 0.03);
    for (Index j = 0; j < 3; ++j) {
        EXPECT_NEAR(x.data.col(j).mean(), 0.0, 0.04);
        EXPECT_NEAR(sample_std(x.data.col(j)), 1.0, 0.03);
    }
}

TEST(Copula, BenchmarkMoments)
{
    RngStream rng(2024);
    const auto x = sample_copula(paper_copula_spec(), 10000, rng);
    const Matrix c = corr_matrix(x);
    EXPECT_NEAR(c(0, 1), -0.57, 0.04);
    EXPECT_GT(c(2, 3), 0.0);
    EXPECT_GT(c(0, 3), 0.0);
    EXPECT_LT(c(1, 3), 0.0);
    EXPECT_NEAR(sample_std(x.data.col(0)), 2.36, 0.1);
    EXPECT_NEAR(sample_std(x.data.col(1)), 1.41, 0.1);
    EXPECT_NEAR(sample_std(x.data.col(2)), 2.0, 0.1);
    EXPECT_NEAR(sample_std(x.data.col(3)), 2.0, 0.1);
}

TEST(Copula, StdReadingMatchesClosedForm)
{
    // Mixture variance = sum w (s^2 + m^2) - (sum w m)^2; t4 variance = nu / (nu - 2).
    const double mean = 0.5 * -1.5 + 0.5 * 2.0;
    const double var = 0.5 * (4.0 + 2.25) + 0.5 * (1.0 + 4.0) - mean * mean;
    EXPECT_NEAR(std::sqrt(var), 2.359, 1e-3);
    EXPECT_NEAR(std::sqrt(4.0 / 2.0), 1.414, 1e-3);
}

TEST(Copula, MarginalRanksAreUniform)
{
    const auto spec = paper_copula_spec();
    RngStream rng(99);
    const Index n = 10000;
    const auto x = sample_copula(spec, n, rng);
    for (Index j = 0; j < spec.d; ++j) {
        std::vector<double> u;
        for (Index i = 0; i < n; ++i)
            u.push_back(marginal_cdf(spec.marginals[static_cast<std::size_t>(j)], x.data(i, j)));
        std::sort(u.begin(), u.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double k = static_cast<double>(i);
            ks = std::max({ks, std::abs(u[i] - k / n), std::abs(u[i] - (k + 1) / n)});
        }
        EXPECT_LE(ks, 1.63 / std::sqrt(static_cast<double>(n))) << "column " << j;
    }
}

TEST(Copula, DependsOnRThroughCholesky)
{
    auto a = paper_copula_spec();
    auto b = a;
    b.R(0, 1) = b.R(1, 0) = -0.60 + 1e-16;
    RngStream r1(5), r2(5);
    EXPECT_LT((sample_copula(a, 200, r1).data - sample_copula(b, 200, r2).data).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Copula, RejectsIndefiniteR)
{
    auto spec = paper_copula_spec();
    spec.R(0, 1) = spec.R(1, 0) = 0.99;
    spec.R(0, 3) = spec.R(3, 0) = -0.99;
    spec.R(1, 3) = spec.R(3, 1) = 0.99;
    RngStream rng(1);
    try {
        sample_copula(spec, 10, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
}

TEST(Copula, Determinism)
{
    RngStream a(11, 3), b(11, 3);
    EXPECT_EQ(sample_copula(paper_copula_spec(), 100, a).data, sample_copula(paper_copula_spec(), 100, b).data);
}

TEST(Rng, DistinctStreams)
{
    RngStream a(42, 0), b(42, 1);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        same += a.uniform() == b.uniform();
    EXPECT_LT(same, 100);
}

TEST(Ar1, WhiteNoiseWhenPhiZero)
{
    RngStream rng(3);
    const Matrix corr = Matrix::Identity(2, 2);
    const auto r = ar1_ewma_process(2, 0.0, corr, 5000, 1, rng);
    EXPECT_EQ(r.rows(), 5000);
    for (Index j = 0; j < 2; ++j)
        EXPECT_LE(std::abs(acf_at(r.data.col(j), 1)), 0.05);
}

TEST(Ar1, RawAcfMatchesPhi)
{
    RngStream rng(4);
    Matrix corr(2, 2);
    corr << 1.0, 0.5, 0.5, 1.0;
    const Matrix r = ar1_returns(corr, 0.5, 5000, rng);
    for (Index j = 0; j < 2; ++j)
        EXPECT_NEAR(acf_at(r.col(j), 1), 0.5, 0.05);
    EXPECT_NEAR(corr_matrix(r)(0, 1), 0.5, 0.05);
}

TEST(Ar1, SmoothingKeepsPositiveAcf)
{
    RngStream rng(6);
    const auto r = ar1_ewma_process(2, 0.2, Matrix::Identity(2, 2), 5000, 5, rng);
    for (Index j = 0; j < 2; ++j)
        EXPECT_GT(acf_at(r.data.col(j), 1), 0.2);
}

TEST(Ar1, Errors)
{
    RngStream rng(1);
    EXPECT_THROW(ar1_returns(Matrix::Identity(2, 2), 1.0, 10, rng), Error);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(ar1_ewma_process(2, 0.1, bad, 10, 3, rng), Error);
}

TEST(Ar1, Determinism)
{
    RngStream a(8), b(8);
    EXPECT_EQ(ar1_ewma_process(2, 0.3, Matrix::Identity(2, 2), 300, 4, a).data,
              ar1_ewma_process(2, 0.3, Matrix::Identity(2, 2), 300, 4, b).data);
}
