#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/evaluate.hpp"
#include "mktgen/frame.hpp"

namespace mktgen {

struct RiskParityConfig {
    Index vol_window = 60;
    double target_vol = 0.03; // annualized
    Index rebalance_every = 1;
    int trading_days_per_year = 252;

    void validate() const
    {
        require(vol_window >= 2, ErrorCode::ConfigError, "vol_window must be >= 2");
        require(target_vol > 0.0, ErrorCode::ConfigError, "target_vol must be > 0");
        require(rebalance_every >= 1, ErrorCode::ConfigError, "rebalance_every must be >= 1");
        require(trading_days_per_year >= 1, ErrorCode::ConfigError, "trading_days_per_year must be >= 1");
    }
};

struct BacktestStats {
    double mu = 0.0;     // annualized mean return
    double sigma = 0.0;  // annualized volatility
    double sharpe = 0.0; // mu / sigma
    double mdd = 0.0;    // maximum drawdown of the arithmetic equity curve
    double xi = 0.0;     // mdd / sigma

    static BacktestStats from(double mu, double sigma, double mdd)
    {
        require(sigma > 0.0, ErrorCode::ConstantColumn, "strategy returns have zero volatility");
        return {mu, sigma, mu / sigma, mdd, mdd / sigma};
    }
};

inline const std::array<std::string, 5>& stat_names()
{
    static const std::array<std::string, 5> names{"mu", "sigma", "sharpe", "mdd", "xi"};
    return names;
}

inline double stat_value(const BacktestStats& s, const std::string& name)
{
    if (name == "mu")
        return s.mu;
    if (name == "sigma")
        return s.sigma;
    if (name == "sharpe")
        return s.sharpe;
    if (name == "mdd")
        return s.mdd;
    if (name == "xi")
        return s.xi;
    fail(ErrorCode::UsageError, "unknown statistic '" + name + "'");
}

/// max_t (max_{s <= t} C_s - C_t) with C_t the running sum of `returns`.
inline double max_drawdown(const Eigen::Ref<const Vector>& returns)
{
    double equity = 0.0, peak = 0.0, mdd = 0.0;
    for (Index t = 0; t < returns.size(); ++t) {
        equity += returns(t);
        peak = t == 0 ? equity : std::max(peak, equity);
        mdd = std::max(mdd, peak - equity);
    }
    return mdd;
}

inline BacktestStats backtest_stats(const Eigen::Ref<const Vector>& returns, int days_per_year = 252)
{
    require(returns.size() >= 2, ErrorCode::TooFewRows, "statistics need at least two strategy returns");
    return BacktestStats::from(returns.mean() * days_per_year,
                               sample_std(returns) * std::sqrt(static_cast<double>(days_per_year)), max_drawdown(returns));
}

// --- risk parity ----------------------------------------------------------

struct RiskParityWeights {
    Vector weights;  // inverse-volatility, sum 1
    double leverage; // target_vol / ex-ante annualized portfolio vol
};

/// Inverse-volatility weights and volatility-targeting leverage estimated on
/// the whole window (sample covariance, divisor W - 1).
inline RiskParityWeights risk_parity_weights(const Eigen::Ref<const Matrix>& window, const RiskParityConfig& config)
{
    require(window.rows() >= 2, ErrorCode::TooFewRows, "risk parity window needs at least two rows");
    const Matrix centered = window.rowwise() - window.colwise().mean();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(window.rows() - 1);
    const Vector vol = cov.diagonal().cwiseSqrt();
    for (Index j = 0; j < vol.size(); ++j)
        require(vol(j) > 0.0, ErrorCode::ConstantColumn, "asset " + std::to_string(j) + " has zero variance in window");
    RiskParityWeights out;
    out.weights = vol.cwiseInverse();
    out.weights /= out.weights.sum();
    const double port_vol =
        std::sqrt(out.weights.dot(cov * out.weights)) * std::sqrt(static_cast<double>(config.trading_days_per_year));
    out.leverage = config.target_vol / port_vol;
    return out;
}

struct BacktestResult {
    Vector strategy_returns; // one entry per date from vol_window on
    BacktestStats stats;
};

/// Daily risk-parity backtest. The weights used on date t come from the
/// vol_window rows ending at t - 1 and are refreshed every rebalance_every days.
inline BacktestResult run_backtest(const Eigen::Ref<const Matrix>& returns, const RiskParityConfig& config)
{
    config.validate();
    require(returns.allFinite(), ErrorCode::InvalidValue, "returns must be finite");
    require(returns.rows() > config.vol_window, ErrorCode::TooFewRows,
            "backtest needs more than vol_window = " + std::to_string(config.vol_window) + " rows");
    const Index T = returns.rows();
    BacktestResult result;
    result.strategy_returns.resize(T - config.vol_window);
    RiskParityWeights rp;
    for (Index t = config.vol_window; t < T; ++t) {
        if ((t - config.vol_window) % config.rebalance_every == 0)
            rp = risk_parity_weights(returns.middleRows(t - config.vol_window, config.vol_window), config);
        result.strategy_returns(t - config.vol_window) = rp.leverage * returns.row(t).dot(rp.weights.transpose());
    }
    result.stats = backtest_stats(result.strategy_returns, config.trading_days_per_year);
    return result;
}

inline BacktestResult run_backtest(const SeriesFrame& returns, const RiskParityConfig& config)
{
    return run_backtest(returns.data, config);
}

// --- resampling and Monte Carlo -------------------------------------------

/// T_out whole rows drawn uniformly with replacement.
inline SeriesFrame bootstrap_resample(const SeriesFrame& returns, Index T_out, RngStream& rng)
{
    require(returns.rows() > 0, ErrorCode::EmptyInput, "bootstrap source is empty");
    Matrix out(T_out, returns.cols());
    for (Index t = 0; t < T_out; ++t)
        out.row(t) = returns.data.row(static_cast<Index>(rng.below(static_cast<std::size_t>(returns.rows()))));
    return SeriesFrame(returns.columns, std::move(out));
}

/// Monte-Carlo sample of one statistic, kept sorted ascending.
struct StatDistribution {
    std::string name;
    std::vector<double> values;

    StatDistribution() = default;
    StatDistribution(std::string stat, std::vector<double> sample) : name(std::move(stat)), values(std::move(sample))
    {
        std::sort(values.begin(), values.end());
    }

    std::size_t size() const noexcept { return values.size(); }

    /// Linear-interpolation quantile at level p.
    double quantile(double p) const { return percentile_sorted(values, p); }
};

/// Fraction of the sample below `value`, counting ties as one half.
inline double quantile_of(const StatDistribution& dist, double value)
{
    require(!dist.values.empty(), ErrorCode::EmptyInput, "quantile_of an empty distribution");
    const auto lo = std::lower_bound(dist.values.begin(), dist.values.end(), value);
    const auto hi = std::upper_bound(dist.values.begin(), dist.values.end(), value);
    const auto below = static_cast<double>(lo - dist.values.begin());
    const auto equal = static_cast<double>(hi - lo);
    return (below + 0.5 * equal) / static_cast<double>(dist.values.size());
}

struct McResult {
    std::vector<BacktestStats> replications; // in replication order
    std::map<std::string, StatDistribution> distributions;
    std::vector<double> strategy_acf1; // lag-1 ACF of each replication's strategy returns
};

/// Runs the backtest on source(r) for r = 0..n_reps-1 and collects each statistic.
inline McResult mc_distribution(const std::function<SeriesFrame(Index)>& source, Index n_reps,
                                const RiskParityConfig& config)
{
    require(n_reps >= 1, ErrorCode::DomainError, "n_reps must be >= 1");
    McResult out;
    for (Index r = 0; r < n_reps; ++r) {
        try {
            const auto bt = run_backtest(source(r), config);
            out.replications.push_back(bt.stats);
            out.strategy_acf1.push_back(acf_at(bt.strategy_returns, 1));
        } catch (const Error& e) {
            fail(e.code(), "replication " + std::to_string(r) + ": " + e.what());
        }
    }
    for (const auto& name : stat_names()) {
        std::vector<double> vals;
        for (const auto& s : out.replications)
            vals.push_back(stat_value(s, name));
        out.distributions.emplace(name, StatDistribution(name, std::move(vals)));
    }
    return out;
}

} // namespace mktgen
