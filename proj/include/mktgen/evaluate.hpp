#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/frame.hpp"

namespace mktgen {

// --- order statistics -----------------------------------------------------

inline std::vector<double> sorted_copy(const Eigen::Ref<const Vector>& x)
{
    std::vector<double> v(x.data(), x.data() + x.size());
    std::sort(v.begin(), v.end());
    return v;
}

/// Linear interpolation of the order statistics at 1-based position 1 + p (T - 1).
inline double percentile_sorted(const std::vector<double>& sorted, double p)
{
    require(!sorted.empty(), ErrorCode::EmptyInput, "percentile of an empty sample");
    require(p >= 0.0 && p <= 1.0, ErrorCode::DomainError, "percentile level must be in [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= sorted.size())
        return sorted.back();
    const double frac = pos - static_cast<double>(k);
    return sorted[k] + frac * (sorted[k + 1] - sorted[k]);
}

inline double percentile(const Eigen::Ref<const Vector>& x, double p)
{
    return percentile_sorted(sorted_copy(x), p);
}

/// Sample standard deviation (divisor T - 1).
inline double sample_std(const Eigen::Ref<const Vector>& x)
{
    require(x.size() >= 2, ErrorCode::TooFewRows, "standard deviation needs at least two values");
    const double mean = x.mean();
    return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
}

// --- summary --------------------------------------------------------------

/// Per-column mean, std, 1st and 99th percentile. In replication mode each
/// field is the mean across replications and the *_sd fields hold the
/// standard deviation across replications.
struct SampleSummary {
    std::vector<std::string> columns;
    Vector mean, std, p1, p99;
    std::optional<Vector> mean_sd, std_sd, p1_sd, p99_sd;
    Index replications = 1;
};

inline SampleSummary summary(const SeriesFrame& frame)
{
    require(frame.rows() >= 2, ErrorCode::TooFewRows, "summary needs at least two rows");
    SampleSummary s;
    s.columns = frame.columns;
    const Index d = frame.cols();
    s.mean.resize(d);
    s.std.resize(d);
    s.p1.resize(d);
    s.p99.resize(d);
    for (Index j = 0; j < d; ++j) {
        const auto sorted = sorted_copy(frame.data.col(j));
        s.mean(j) = frame.data.col(j).mean();
        s.std(j) = sample_std(frame.data.col(j));
        s.p1(j) = percentile_sorted(sorted, 0.01);
        s.p99(j) = percentile_sorted(sorted, 0.99);
    }
    return s;
}

inline SampleSummary summary(const std::vector<SeriesFrame>& reps)
{
    require(!reps.empty(), ErrorCode::EmptyInput, "summary needs at least one replication");
    std::vector<SampleSummary> each;
    for (const auto& frame : reps) {
        require(frame.cols() == reps.front().cols(), ErrorCode::ShapeError, "replications differ in width");
        each.push_back(summary(frame));
    }
    const auto R = static_cast<Index>(each.size());
    const Index d = reps.front().cols();
    auto aggregate = [&](auto field, Vector& mean, std::optional<Vector>& sd) {
        Matrix vals(R, d);
        for (Index r = 0; r < R; ++r)
            vals.row(r) = (each[static_cast<std::size_t>(r)].*field).transpose();
        mean = vals.colwise().mean().transpose();
        Vector s(d);
        for (Index j = 0; j < d; ++j)
            s(j) = R >= 2 ? sample_std(vals.col(j)) : 0.0;
        sd = s;
    };
    SampleSummary out;
    out.columns = reps.front().columns;
    out.replications = R;
    aggregate(&SampleSummary::mean, out.mean, out.mean_sd);
    aggregate(&SampleSummary::std, out.std, out.std_sd);
    aggregate(&SampleSummary::p1, out.p1, out.p1_sd);
    aggregate(&SampleSummary::p99, out.p99, out.p99_sd);
    return out;
}

// --- dependence -----------------------------------------------------------

/// Pearson correlation matrix.
inline Matrix corr_matrix(const Eigen::Ref<const Matrix>& data)
{
    require(data.rows() >= 3, ErrorCode::TooFewRows, "correlation needs at least three rows");
    const Matrix centered = data.rowwise() - data.colwise().mean();
    const Vector norms = centered.colwise().norm().transpose();
    for (Index j = 0; j < norms.size(); ++j)
        require(norms(j) > 0.0, ErrorCode::ConstantColumn, "column " + std::to_string(j) + " is constant");
    Matrix c = centered.transpose() * centered;
    c = norms.cwiseInverse().asDiagonal() * c * norms.cwiseInverse().asDiagonal();
    c.diagonal().setOnes();
    return c;
}

inline Matrix corr_matrix(const SeriesFrame& frame) { return corr_matrix(frame.data); }

/// rho(k) = sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2
inline double acf_at(const Eigen::Ref<const Vector>& x, Index k)
{
    const Index T = x.size();
    require(k >= 0 && k < T, ErrorCode::DomainError, "lag out of range");
    const Vector c = x.array() - x.mean();
    const double denom = c.squaredNorm();
    require(denom > 0.0, ErrorCode::ConstantColumn, "autocorrelation of a constant series");
    return c.head(T - k).dot(c.tail(T - k)) / denom;
}

struct AcfResult {
    std::vector<Index> lags; // 1..L
    Vector estimate;
    double band = 0.0; // 2 / sqrt(T)
};

inline AcfResult acf(const Eigen::Ref<const Vector>& x, Index max_lag)
{
    require(max_lag >= 1, ErrorCode::DomainError, "max_lag must be >= 1");
    require(x.size() > max_lag + 2, ErrorCode::TooFewRows, "series too short for the requested lags");
    AcfResult out;
    out.estimate.resize(max_lag);
    for (Index k = 1; k <= max_lag; ++k) {
        out.lags.push_back(k);
        out.estimate(k - 1) = acf_at(x, k);
    }
    out.band = 2.0 / std::sqrt(static_cast<double>(x.size()));
    return out;
}

// --- distances ------------------------------------------------------------

/// 1-Wasserstein distance between two empirical measures on the line:
/// integral over u of |F_x^-1(u) - F_y^-1(u)|, which for equal sizes is the
/// mean absolute difference of sorted samples.
inline double wasserstein1_1d(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y)
{
    require(x.size() > 0 && y.size() > 0, ErrorCode::EmptyInput, "Wasserstein distance of an empty sample");
    const auto xs = sorted_copy(x);
    const auto ys = sorted_copy(y);
    const auto n = xs.size();
    const auto m = ys.size();
    if (n == m) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += std::abs(xs[i] - ys[i]);
        return s / static_cast<double>(n);
    }
    // Walk the merged breakpoints i/n and j/m of both step quantile functions.
    double total = 0.0, u = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const double next_x = static_cast<double>(i + 1) / static_cast<double>(n);
        const double next_y = static_cast<double>(j + 1) / static_cast<double>(m);
        const double next = std::min(next_x, next_y);
        total += (next - u) * std::abs(xs[i] - ys[j]);
        u = next;
        if (next_x <= next)
            ++i;
        if (next_y <= next)
            ++j;
    }
    return total;
}

/// sum p log(p / q) with 0 log 0 = 0.
inline double kl_discrete(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q)
{
    require(p.size() == q.size() && p.size() > 0, ErrorCode::ShapeError, "distributions differ in length");
    require((p.array() >= 0.0).all() && (q.array() >= 0.0).all(), ErrorCode::InvalidValue,
            "probabilities must be nonnegative");
    require(std::abs(p.sum() - 1.0) <= 1e-9 && std::abs(q.sum() - 1.0) <= 1e-9, ErrorCode::InvalidValue,
            "probabilities must sum to 1");
    double kl = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) == 0.0)
            continue;
        require(q(i) > 0.0, ErrorCode::SupportError, "q vanishes where p is positive (index " + std::to_string(i) + ")");
        kl += p(i) * std::log(p(i) / q(i));
    }
    return std::max(kl, 0.0);
}

/// k x 2 matrix of matched quantiles of a and b at levels (i - 0.5) / k.
inline Matrix qq_points(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, Index k)
{
    require(k >= 2, ErrorCode::DomainError, "qq_points needs k >= 2");
    require(a.size() > 0 && b.size() > 0, ErrorCode::EmptyInput, "qq_points of an empty sample");
    const auto as = sorted_copy(a);
    const auto bs = sorted_copy(b);
    Matrix out(k, 2);
    for (Index i = 1; i <= k; ++i) {
        const double level = (static_cast<double>(i) - 0.5) / static_cast<double>(k);
        out(i - 1, 0) = percentile_sorted(as, level);
        out(i - 1, 1) = percentile_sorted(bs, level);
    }
    return out;
}

} // namespace mktgen
