#include <gtest/gtest.h>

#include "mktgen/backtest.hpp"
#include "mktgen/datagen.hpp"

using namespace mktgen;

namespace {

Matrix random_returns(RngStream& rng, Index T, Index d)
{
    Matrix r = 0.01 * rng.normal_matrix(T, d);
    for (Index j = 0; j < d; ++j)
        r.col(j) *= 1.0 + j;
    return r;
}

} // namespace

TEST(Weights, EqualVolsGiveEqualWeights)
{
    Matrix w(4, 2);
    w << 1, 1, -1, 1, 1, -1, -1, -1;
    const auto rp = risk_parity_weights(w, {});
    EXPECT_NEAR(rp.weights(0), 0.5, 1e-15);
    EXPECT_NEAR(rp.weights(1), 0.5, 1e-15);
}

TEST(Weights, InverseVolatility)
{
    Matrix w(4, 2);
    w << 1, 2, -1, 2, 1, -2, -1, -2;
    const auto rp = risk_parity_weights(w, {});
    EXPECT_NEAR(rp.weights(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(rp.weights(1), 1.0 / 3.0, 1e-15);
}

TEST(Weights, LeverageHitsTarget)
{
    RngStream rng(1);
    const Matrix w = random_returns(rng, 60, 4);
    RiskParityConfig cfg;
    const auto rp = risk_parity_weights(w, cfg);
    const Matrix centered = w.rowwise() - w.colwise().mean();
    const Matrix cov = centered.transpose() * centered / 59.0;
    const Vector lw = rp.leverage * rp.weights;
    EXPECT_NEAR(std::sqrt(lw.dot(cov * lw) * 252.0), cfg.target_vol, 1e-12);
    EXPECT_NEAR(rp.weights.sum(), 1.0, 1e-15);
    EXPECT_GT(rp.weights.minCoeff(), 0.0);
}

TEST(Weights, ZeroVarianceAsset)
{
    Matrix w = Matrix::Ones(10, 2);
    w(2, 0) = 3.0;
    try {
        risk_parity_weights(w, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConstantColumn);
    }
}

TEST(Stats, TableIdentities)
{
    const auto s = BacktestStats::from(0.0530, 0.0354, 0.0940);
    EXPECT_NEAR(s.sharpe, 1.50, 0.01);
    EXPECT_NEAR(s.xi, 2.65, 0.01);
}

TEST(Stats, DrawdownExample)
{
    Vector r(3);
    r << 0.10, -0.10, 0.05;
    EXPECT_NEAR(max_drawdown(r), 0.10, 1e-15);
}

TEST(Stats, PositiveReturnsHaveNoDrawdown)
{
    Vector r = Vector::LinSpaced(20, 0.001, 0.02);
    EXPECT_EQ(max_drawdown(r), 0.0);
}

TEST(Stats, DrawdownHomogeneityAndShift)
{
    RngStream rng(3);
    const Vector r = 0.01 * rng.normal_matrix(200, 1).col(0);
    EXPECT_NEAR(max_drawdown(3.0 * r), 3.0 * max_drawdown(r), 1e-12);
    // A constant added to the equity curve shifts the first increment only after C_0; drawdowns compare levels.
    Vector equity(r.size());
    double c = 0.0;
    for (Index t = 0; t < r.size(); ++t)
        equity(t) = c += r(t);
    double peak = equity(0) + 5.0, mdd = 0.0;
    for (Index t = 0; t < r.size(); ++t) {
        peak = std::max(peak, equity(t) + 5.0);
        mdd = std::max(mdd, peak - (equity(t) + 5.0));
    }
    EXPECT_NEAR(mdd, max_drawdown(r), 1e-12);
}

TEST(Stats, IdentitiesStoredExactly)
{
    RngStream rng(4);
    const auto bt = run_backtest(random_returns(rng, 300, 3), {});
    EXPECT_EQ(bt.stats.sharpe, bt.stats.mu / bt.stats.sigma);
    EXPECT_EQ(bt.stats.xi, bt.stats.mdd / bt.stats.sigma);
    EXPECT_GE(bt.stats.mdd, 0.0);
    EXPECT_EQ(bt.strategy_returns.size(), 240);
}

TEST(Backtest, HandComputedStep)
{
    RngStream rng(5);
    const Matrix r = random_returns(rng, 70, 2);
    RiskParityConfig cfg;
    const auto bt = run_backtest(r, cfg);
    const auto rp = risk_parity_weights(r.middleRows(5, 60), cfg);
    EXPECT_NEAR(bt.strategy_returns(5), rp.leverage * r.row(65).dot(rp.weights.transpose()), 1e-15);
}

TEST(Backtest, ScaleInvariance)
{
    RngStream rng(6);
    const Matrix r = random_returns(rng, 400, 3);
    const auto a = run_backtest(r, {});
    const auto b = run_backtest(Matrix(7.5 * r), {});
    EXPECT_LT((a.strategy_returns - b.strategy_returns).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(a.stats.mu, b.stats.mu, 1e-10);
    EXPECT_NEAR(a.stats.sigma, b.stats.sigma, 1e-10);
    EXPECT_NEAR(a.stats.sharpe, b.stats.sharpe, 1e-10);
    EXPECT_NEAR(a.stats.mdd, b.stats.mdd, 1e-10);
    EXPECT_NEAR(a.stats.xi, b.stats.xi, 1e-10);
}

TEST(Backtest, NoLookAhead)
{
    RngStream rng(7);
    Matrix r = random_returns(rng, 300, 3);
    const auto full = run_backtest(r, {});
    for (Index cut : {100, 181, 250}) {
        const auto part = run_backtest(Matrix(r.topRows(cut)), {});
        EXPECT_LT((part.strategy_returns - full.strategy_returns.head(cut - 60)).cwiseAbs().maxCoeff(), 1e-15);
    }
    // Perturbing the future leaves the past untouched.
    r.bottomRows(50).array() *= -3.0;
    const auto perturbed = run_backtest(r, {});
    EXPECT_EQ(perturbed.strategy_returns.head(190), full.strategy_returns.head(190));
}

TEST(Backtest, Rebalancing)
{
    RngStream rng(8);
    const Matrix r = random_returns(rng, 100, 2);
    RiskParityConfig cfg;
    cfg.rebalance_every = 10;
    const auto bt = run_backtest(r, cfg);
    const auto rp = risk_parity_weights(r.middleRows(10, 60), cfg);
    for (Index t = 70; t < 80; ++t)
        EXPECT_NEAR(bt.strategy_returns(t - 60), rp.leverage * r.row(t).dot(rp.weights.transpose()), 1e-15);
}

TEST(Backtest, TooFewRows)
{
    try {
        run_backtest(Matrix::Ones(60, 2), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
    }
}

TEST(Bootstrap, SingleRowSource)
{
    Matrix one(1, 2);
    one << 0.3, -0.1;
    RngStream rng(9);
    const auto out = bootstrap_resample(SeriesFrame::from_matrix(one), 50, rng);
    EXPECT_EQ(out.rows(), 50);
    for (Index t = 0; t < 50; ++t)
        EXPECT_EQ(out.data.row(t), one.row(0));
    EXPECT_THROW(bootstrap_resample(SeriesFrame::from_matrix(Matrix(0, 2)), 5, rng), Error);
}

TEST(Bootstrap, KeepsCrossSectionDropsSerialDependence)
{
    RngStream gen(10);
    Matrix corr(2, 2);
    corr << 1.0, 0.6, 0.6, 1.0;
    const auto source = ar1_ewma_process(2, 0.2, corr, 5000, 1, gen);
    ASSERT_GT(acf_at(source.data.col(0), 1), 0.15);
    RngStream rng(11);
    const auto out = bootstrap_resample(source, 5000, rng);
    EXPECT_NEAR(corr_matrix(out)(0, 1), corr_matrix(source)(0, 1), 0.05);
    for (Index j = 0; j < 2; ++j)
        EXPECT_LE(std::abs(acf_at(out.data.col(j), 1)), 0.05);
}

TEST(Quantile, RankArithmetic)
{
    const StatDistribution d("x", {5.0, 1.0, 3.0, 2.0, 4.0});
    EXPECT_EQ(d.values.front(), 1.0);
    EXPECT_EQ(quantile_of(d, 0.0), 0.0);
    EXPECT_EQ(quantile_of(d, 9.0), 1.0);
    EXPECT_NEAR(quantile_of(d, 3.0), 0.5, 1.0 / 10.0);
    EXPECT_EQ(quantile_of(d, 3.5), 0.6);
    EXPECT_EQ(d.quantile(0.5), 3.0);
    EXPECT_THROW(quantile_of(StatDistribution("y", {}), 1.0), Error);
}

TEST(MonteCarlo, SingleReplication)
{
    RngStream rng(12);
    const auto frame = SeriesFrame::from_matrix(random_returns(rng, 200, 2));
    const auto mc = mc_distribution([&](Index) { return frame; }, 1, {});
    const auto bt = run_backtest(frame, {});
    for (const auto& name : stat_names()) {
        ASSERT_EQ(mc.distributions.at(name).size(), 1u);
        EXPECT_EQ(mc.distributions.at(name).values[0], stat_value(bt.stats, name));
    }
}

TEST(MonteCarlo, IdenticalSourceZeroWidth)
{
    RngStream rng(13);
    const auto frame = SeriesFrame::from_matrix(random_returns(rng, 200, 2));
    const auto mc = mc_distribution([&](Index) { return frame; }, 4, {});
    for (const auto& [name, dist] : mc.distributions)
        EXPECT_EQ(dist.values.front(), dist.values.back()) << name;
}

TEST(MonteCarlo, DeterministicBootstrap)
{
    RngStream gen(14);
    const auto source = SeriesFrame::from_matrix(random_returns(gen, 300, 3));
    const auto run = [&] {
        return mc_distribution(
            [&](Index r) {
                RngStream rng(77, static_cast<std::uint64_t>(r));
                return bootstrap_resample(source, 250, rng);
            },
            5, {});
    };
    const auto a = run(), b = run();
    for (const auto& name : stat_names())
        EXPECT_EQ(a.distributions.at(name).values, b.distributions.at(name).values);
    EXPECT_GT(a.distributions.at("sharpe").values.back(), a.distributions.at("sharpe").values.front());
}

TEST(MonteCarlo, FailureNamesReplication)
{
    try {
        mc_distribution([](Index r) { return SeriesFrame::from_matrix(Matrix::Ones(r == 2 ? 10 : 100, 1) + Matrix::Random(r == 2 ? 10 : 100, 1)); },
                        4, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
        EXPECT_NE(std::string(e.what()).find("replication 2"), std::string::npos);
    }
}
