#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/frame.hpp"
#include "mktgen/math.hpp"

namespace mktgen {

enum class TransformKind { minmax, zscore, normal_score, binarize16 };

inline const char* to_string(TransformKind kind) noexcept
{
    switch (kind) {
    case TransformKind::minmax: return "minmax";
    case TransformKind::zscore: return "zscore";
    case TransformKind::normal_score: return "normal_score";
    case TransformKind::binarize16: return "binarize16";
    }
    return "unknown";
}

/// Fitted, invertible preprocessing state.
///
/// Which fields are populated depends on `kind`:
///   minmax       lower = column min, upper = column max
///   zscore       mean, stdev (population convention, divisor T)
///   normal_score reference = ascending order statistics per column
///   binarize16   lower = x_min, upper = x_max (epsilon already applied)
struct TransformSpec {
    TransformKind kind = TransformKind::minmax;
    Vector lower;
    Vector upper;
    Vector mean;
    Vector stdev;
    double epsilon = 0.0;
    std::vector<std::vector<double>> reference;

    Index width() const
    {
        switch (kind) {
        case TransformKind::minmax:
        case TransformKind::binarize16: return lower.size();
        case TransformKind::zscore: return mean.size();
        case TransformKind::normal_score: return static_cast<Index>(reference.size());
        }
        return 0;
    }
};

namespace detail {

inline void require_width(const SeriesFrame& frame, const TransformSpec& spec)
{
    require(frame.cols() == spec.width(), ErrorCode::ShapeError,
            std::string(to_string(spec.kind)) + " fitted on " + std::to_string(spec.width()) + " columns, got " +
                std::to_string(frame.cols()));
}

inline void require_finite(const Eigen::Ref<const Matrix>& m)
{
    require(m.allFinite(), ErrorCode::InvalidValue, "non-finite input value");
}

} // namespace detail

// --- minmax ---------------------------------------------------------------

inline TransformSpec fit_minmax(const SeriesFrame& frame)
{
    detail::require_finite(frame.data);
    require(frame.rows() > 0, ErrorCode::EmptyInput, "cannot fit minmax on an empty frame");
    TransformSpec spec;
    spec.kind = TransformKind::minmax;
    spec.lower = frame.data.colwise().minCoeff().transpose();
    spec.upper = frame.data.colwise().maxCoeff().transpose();
    for (Index j = 0; j < spec.lower.size(); ++j)
        require(spec.upper(j) > spec.lower(j), ErrorCode::ConstantColumn,
                "column '" + frame.columns[static_cast<std::size_t>(j)] + "' is constant");
    return spec;
}

inline SeriesFrame minmax(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    Matrix out = frame.data;
    for (Index j = 0; j < out.cols(); ++j)
        out.col(j) = (out.col(j).array() - spec.lower(j)) / (spec.upper(j) - spec.lower(j));
    return frame.with_data(std::move(out));
}

inline SeriesFrame inverse_minmax(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    Matrix out = frame.data;
    for (Index j = 0; j < out.cols(); ++j)
        out.col(j) = out.col(j).array() * (spec.upper(j) - spec.lower(j)) + spec.lower(j);
    return frame.with_data(std::move(out));
}

// --- zscore ---------------------------------------------------------------

/// Standardization with the population standard deviation (divisor T).
inline TransformSpec fit_zscore(const SeriesFrame& frame)
{
    detail::require_finite(frame.data);
    require(frame.rows() > 0, ErrorCode::EmptyInput, "cannot fit zscore on an empty frame");
    TransformSpec spec;
    spec.kind = TransformKind::zscore;
    spec.mean = frame.data.colwise().mean().transpose();
    spec.stdev.resize(frame.cols());
    for (Index j = 0; j < frame.cols(); ++j) {
        const double var = (frame.data.col(j).array() - spec.mean(j)).square().mean();
        spec.stdev(j) = std::sqrt(var);
        require(spec.stdev(j) > 0.0, ErrorCode::ConstantColumn,
                "column '" + frame.columns[static_cast<std::size_t>(j)] + "' has zero variance");
    }
    return spec;
}

inline SeriesFrame zscore(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    Matrix out = frame.data;
    for (Index j = 0; j < out.cols(); ++j)
        out.col(j) = (out.col(j).array() - spec.mean(j)) / spec.stdev(j);
    return frame.with_data(std::move(out));
}

inline SeriesFrame inverse_zscore(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    Matrix out = frame.data;
    for (Index j = 0; j < out.cols(); ++j)
        out.col(j) = out.col(j).array() * spec.stdev(j) + spec.mean(j);
    return frame.with_data(std::move(out));
}

// --- normal score ---------------------------------------------------------

inline TransformSpec fit_normal_score(const SeriesFrame& frame)
{
    detail::require_finite(frame.data);
    TransformSpec spec;
    spec.kind = TransformKind::normal_score;
    for (Index j = 0; j < frame.cols(); ++j) {
        std::vector<double> col(frame.data.col(j).data(), frame.data.col(j).data() + frame.rows());
        std::sort(col.begin(), col.end());
        require(col.size() >= 2 && col.front() < col.back(), ErrorCode::ConstantColumn,
                "normal score needs two distinct values in column '" + frame.columns[static_cast<std::size_t>(j)] +
                    "'");
        spec.reference.push_back(std::move(col));
    }
    return spec;
}

/// Rank-based scores of a frame against itself: Phi^-1((rank - 0.5) / T),
/// ties ranked by first occurrence.
inline Matrix rank_normal_scores(const Eigen::Ref<const Matrix>& data)
{
    detail::require_finite(data);
    const Index T = data.rows();
    Matrix out(T, data.cols());
    std::vector<Index> order(static_cast<std::size_t>(T));
    for (Index j = 0; j < data.cols(); ++j) {
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return data(l, j) < data(r, j); });
        for (Index r = 0; r < T; ++r)
            out(order[static_cast<std::size_t>(r)], j) = inv_norm_cdf((static_cast<double>(r) + 0.5) / static_cast<double>(T));
    }
    return out;
}

/// Fits on `frame` and returns its own rank scores in one pass.
inline std::pair<TransformSpec, SeriesFrame> fit_transform_normal_score(const SeriesFrame& frame)
{
    auto spec = fit_normal_score(frame);
    return {std::move(spec), frame.with_data(rank_normal_scores(frame.data))};
}

/// Scores arbitrary values against the fitted reference.
///
/// A value is located in the reference by linear interpolation of the order
/// statistics; its fractional rank p gives u = (p - 0.5) / T. On the fit data
/// with distinct values this reproduces the rank scores exactly.
inline SeriesFrame normal_score(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    detail::require_finite(frame.data);
    Matrix out(frame.rows(), frame.cols());
    for (Index j = 0; j < frame.cols(); ++j) {
        const auto& ref = spec.reference[static_cast<std::size_t>(j)];
        const auto T = static_cast<double>(ref.size());
        for (Index i = 0; i < frame.rows(); ++i) {
            const double x = frame.data(i, j);
            double p;
            if (x <= ref.front()) {
                p = 1.0;
            } else if (x >= ref.back()) {
                p = T;
            } else {
                const auto hi = std::upper_bound(ref.begin(), ref.end(), x);
                const auto k = static_cast<double>(hi - ref.begin()); // 1-based rank of *(hi - 1)
                const double lo_val = *(hi - 1);
                p = k + (x - lo_val) / (*hi - lo_val);
            }
            out(i, j) = inv_norm_cdf((p - 0.5) / T);
        }
    }
    return frame.with_data(std::move(out));
}

/// Maps scores back to data units: u = Phi(z), then linear interpolation of
/// the reference order statistics, clamped to the reference range.
inline SeriesFrame inverse_normal_score(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    detail::require_finite(frame.data);
    Matrix out(frame.rows(), frame.cols());
    for (Index j = 0; j < frame.cols(); ++j) {
        const auto& ref = spec.reference[static_cast<std::size_t>(j)];
        const auto T = static_cast<double>(ref.size());
        for (Index i = 0; i < frame.rows(); ++i) {
            const double p = std::clamp(norm_cdf(frame.data(i, j)) * T + 0.5, 1.0, T);
            const auto k = static_cast<std::size_t>(std::floor(p));
            const double frac = p - static_cast<double>(k);
            out(i, j) = k >= ref.size() ? ref.back() : ref[k - 1] + frac * (ref[k] - ref[k - 1]);
        }
    }
    return frame.with_data(std::move(out));
}

// --- 16-bit binarization --------------------------------------------------

inline constexpr int kBitsPerValue = 16;
inline constexpr double kBinaryLevels = 65535.0;

/// Bounds from data widened by epsilon; default epsilon is 1e-6 of each column's range.
inline TransformSpec fit_binarize16(const SeriesFrame& frame, std::optional<double> epsilon = std::nullopt)
{
    detail::require_finite(frame.data);
    require(frame.rows() > 0, ErrorCode::EmptyInput, "cannot fit binarize16 on an empty frame");
    TransformSpec spec;
    spec.kind = TransformKind::binarize16;
    spec.lower = frame.data.colwise().minCoeff().transpose();
    spec.upper = frame.data.colwise().maxCoeff().transpose();
    double eps_used = 0.0;
    for (Index j = 0; j < spec.lower.size(); ++j) {
        const double range = spec.upper(j) - spec.lower(j);
        require(range > 0.0, ErrorCode::ConstantColumn,
                "column '" + frame.columns[static_cast<std::size_t>(j)] + "' is constant");
        const double eps = epsilon.value_or(1e-6 * range);
        require(eps >= 0.0, ErrorCode::DomainError, "epsilon must be >= 0");
        spec.lower(j) -= eps;
        spec.upper(j) += eps;
        eps_used = std::max(eps_used, eps);
    }
    spec.epsilon = eps_used;
    return spec;
}

/// Bounds supplied by the caller; epsilon is 0.
inline TransformSpec make_binarize16(Vector x_min, Vector x_max)
{
    require(x_min.size() == x_max.size(), ErrorCode::ShapeError, "bound vectors differ in length");
    for (Index j = 0; j < x_min.size(); ++j)
        require(x_max(j) > x_min(j), ErrorCode::ConstantColumn, "x_max must exceed x_min");
    TransformSpec spec;
    spec.kind = TransformKind::binarize16;
    spec.lower = std::move(x_min);
    spec.upper = std::move(x_max);
    return spec;
}

/// Integer stage: int(65535 (x - x_min) / (x_max - x_min)).
inline std::uint16_t quantize16(double x, double x_min, double x_max)
{
    require(x >= x_min && x <= x_max, ErrorCode::OutOfBounds,
            "value " + format_double(x) + " outside [" + format_double(x_min) + ", " + format_double(x_max) + "]");
    const double scaled = kBinaryLevels * (x - x_min) / (x_max - x_min);
    return static_cast<std::uint16_t>(std::min(scaled, kBinaryLevels));
}

inline double dequantize16(std::uint16_t level, double x_min, double x_max)
{
    return x_min + static_cast<double>(level) * (x_max - x_min) / kBinaryLevels;
}

/// T x 16d matrix of 0/1 entries; each value contributes 16 big-endian bits.
inline Matrix binarize16(const SeriesFrame& frame, const TransformSpec& spec)
{
    detail::require_width(frame, spec);
    detail::require_finite(frame.data);
    Matrix bits(frame.rows(), kBitsPerValue * frame.cols());
    for (Index i = 0; i < frame.rows(); ++i)
        for (Index j = 0; j < frame.cols(); ++j) {
            const std::uint16_t level = quantize16(frame.data(i, j), spec.lower(j), spec.upper(j));
            for (int b = 0; b < kBitsPerValue; ++b)
                bits(i, kBitsPerValue * j + b) = (level >> (kBitsPerValue - 1 - b)) & 1u ? 1.0 : 0.0;
        }
    return bits;
}

inline SeriesFrame debinarize16(const Eigen::Ref<const Matrix>& bits, const TransformSpec& spec,
                                std::vector<std::string> columns = {})
{
    const Index d = spec.width();
    require(bits.cols() == kBitsPerValue * d, ErrorCode::ShapeError,
            "bit matrix width " + std::to_string(bits.cols()) + " != 16 x " + std::to_string(d));
    Matrix out(bits.rows(), d);
    for (Index i = 0; i < bits.rows(); ++i)
        for (Index j = 0; j < d; ++j) {
            std::uint32_t level = 0;
            for (int b = 0; b < kBitsPerValue; ++b) {
                const double bit = bits(i, kBitsPerValue * j + b);
                require(bit == 0.0 || bit == 1.0, ErrorCode::InvalidValue, "bit matrix entries must be 0 or 1");
                level = (level << 1) | (bit == 1.0 ? 1u : 0u);
            }
            out(i, j) = dequantize16(static_cast<std::uint16_t>(level), spec.lower(j), spec.upper(j));
        }
    if (columns.empty())
        return SeriesFrame::from_matrix(std::move(out));
    return SeriesFrame(std::move(columns), std::move(out));
}

// --- generic dispatch -----------------------------------------------------

/// Applies a frame-to-frame transform (binarize16 changes shape; use binarize16()).
inline SeriesFrame apply_transform(const SeriesFrame& frame, const TransformSpec& spec)
{
    switch (spec.kind) {
    case TransformKind::minmax: return minmax(frame, spec);
    case TransformKind::zscore: return zscore(frame, spec);
    case TransformKind::normal_score: return normal_score(frame, spec);
    case TransformKind::binarize16: break;
    }
    fail(ErrorCode::UsageError, "binarize16 is not a frame-to-frame transform");
}

inline SeriesFrame invert_transform(const SeriesFrame& frame, const TransformSpec& spec)
{
    switch (spec.kind) {
    case TransformKind::minmax: return inverse_minmax(frame, spec);
    case TransformKind::zscore: return inverse_zscore(frame, spec);
    case TransformKind::normal_score: return inverse_normal_score(frame, spec);
    case TransformKind::binarize16: break;
    }
    fail(ErrorCode::UsageError, "binarize16 is not a frame-to-frame transform");
}

/// Fits a transform of the given kind and applies it to the same data.
inline std::pair<TransformSpec, SeriesFrame> fit_apply(TransformKind kind, const SeriesFrame& frame)
{
    switch (kind) {
    case TransformKind::minmax: {
        auto spec = fit_minmax(frame);
        auto out = minmax(frame, spec);
        return {std::move(spec), std::move(out)};
    }
    case TransformKind::zscore: {
        auto spec = fit_zscore(frame);
        auto out = zscore(frame, spec);
        return {std::move(spec), std::move(out)};
    }
    case TransformKind::normal_score: return fit_transform_normal_score(frame);
    case TransformKind::binarize16: break;
    }
    fail(ErrorCode::UsageError, "binarize16 is not a frame-to-frame transform");
}

// --- prices and returns ---------------------------------------------------

/// s_1 = p_1, s_t = lambda p_t + (1 - lambda) s_{t-1} with lambda = 2 / (span + 1).
inline SeriesFrame ewma_prices(const SeriesFrame& prices, int span_days)
{
    require(span_days >= 1, ErrorCode::DomainError, "span_days must be >= 1");
    require(prices.rows() >= 1, ErrorCode::TooFewRows, "ewma needs at least one row");
    const double lambda = 2.0 / (static_cast<double>(span_days) + 1.0);
    Matrix out = prices.data;
    for (Index t = 1; t < out.rows(); ++t)
        out.row(t) = lambda * prices.data.row(t) + (1.0 - lambda) * out.row(t - 1);
    return prices.with_data(std::move(out));
}

/// r_t = p_t / p_{t-1} - 1; output has T - 1 rows (index keeps the later dates).
inline SeriesFrame returns_from_prices(const SeriesFrame& prices)
{
    require((prices.data.array() > 0.0).all(), ErrorCode::InvalidValue, "prices must be strictly positive");
    require(prices.rows() >= 1, ErrorCode::TooFewRows, "need at least one price row");
    const Index T = prices.rows();
    Matrix r = prices.data.bottomRows(T - 1).array() / prices.data.topRows(T - 1).array() - 1.0;
    std::vector<std::string> dates;
    if (prices.has_index())
        dates.assign(prices.index.begin() + 1, prices.index.end());
    return SeriesFrame(prices.columns, std::move(r), std::move(dates));
}

/// Inverse of returns_from_prices: prepends p0 and compounds.
inline SeriesFrame prices_from_returns(const SeriesFrame& returns, const Eigen::Ref<const Vector>& p0)
{
    require(p0.size() == returns.cols(), ErrorCode::ShapeError, "p0 length differs from column count");
    require((p0.array() > 0.0).all(), ErrorCode::InvalidValue, "initial prices must be strictly positive");
    Matrix prices(returns.rows() + 1, returns.cols());
    prices.row(0) = p0.transpose();
    for (Index t = 0; t < returns.rows(); ++t)
        prices.row(t + 1) = prices.row(t).array() * (1.0 + returns.data.row(t).array());
    require((prices.array() > 0.0).all(), ErrorCode::InvalidValue, "returns drive a price non-positive");
    return SeriesFrame(returns.columns, std::move(prices));
}

} // namespace mktgen
