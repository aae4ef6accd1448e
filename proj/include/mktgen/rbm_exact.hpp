#pragma once

// Exact enumeration routines for small Bernoulli RBMs. They are exponential
// in the number of units and exist to check samplers and gradient estimators.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mktgen/rbm.hpp"

namespace mktgen::rbm {

inline constexpr Index kMaxEnumeratedUnits = 20;

/// Binary vector of `width` entries with entry i = bit i of `state`.
inline Vector state_bits(std::uint64_t state, Index width)
{
    Vector v(width);
    for (Index i = 0; i < width; ++i)
        v(i) = static_cast<double>((state >> i) & 1u);
    return v;
}

namespace detail {

inline void require_enumerable(const RbmModel& model)
{
    require(model.kind == RbmKind::bernoulli, ErrorCode::ShapeError, "exact routines need a bernoulli RBM");
    require(model.m + model.n <= kMaxEnumeratedUnits, ErrorCode::TooLarge,
            "m + n = " + std::to_string(model.m + model.n) + " exceeds enumeration cap " +
                std::to_string(kMaxEnumeratedUnits));
}

inline double log_sum_exp(const std::vector<double>& xs)
{
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs)
        hi = std::max(hi, x);
    double s = 0.0;
    for (double x : xs)
        s += std::exp(x - hi);
    return hi + std::log(s);
}

/// log sum_h exp(-E(v, h)), enumerating all 2^n hidden states.
inline double log_unnormalized_marginal(const RbmModel& model, const Vector& v)
{
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << model.n);
    for (std::uint64_t hs = 0; hs < (std::uint64_t{1} << model.n); ++hs)
        terms.push_back(-energy_bernoulli(model, v, state_bits(hs, model.n)));
    return log_sum_exp(terms);
}

} // namespace detail

/// log Z by full enumeration of the 2^(m+n) joint states.
inline double log_partition(const RbmModel& model)
{
    detail::require_enumerable(model);
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << (model.m + model.n));
    for (std::uint64_t vs = 0; vs < (std::uint64_t{1} << model.m); ++vs) {
        const Vector v = state_bits(vs, model.m);
        for (std::uint64_t hs = 0; hs < (std::uint64_t{1} << model.n); ++hs)
            terms.push_back(-energy_bernoulli(model, v, state_bits(hs, model.n)));
    }
    return detail::log_sum_exp(terms);
}

/// Exact P(v) for all 2^m visible states, indexed as in state_bits.
inline Vector marginal_distribution(const RbmModel& model)
{
    detail::require_enumerable(model);
    const double log_z = log_partition(model);
    Vector p(Index{1} << model.m);
    for (std::uint64_t vs = 0; vs < (std::uint64_t{1} << model.m); ++vs)
        p(static_cast<Index>(vs)) = std::exp(detail::log_unnormalized_marginal(model, state_bits(vs, model.m)) - log_z);
    return p;
}

/// Sum over rows of log P(v).
inline double exact_loglik(const RbmModel& model, const Eigen::Ref<const Matrix>& data)
{
    detail::require_enumerable(model);
    require(data.cols() == model.m, ErrorCode::ShapeError, "data width != m");
    const double log_z = log_partition(model);
    double total = 0.0;
    for (Index r = 0; r < data.rows(); ++r)
        total += detail::log_unnormalized_marginal(model, data.row(r).transpose()) - log_z;
    return total;
}

/// Gradient of exact_loglik (ascent direction) from the closed forms
///   d/da_i  = v_i - E_model[v_i]
///   d/db_j  = P(h_j=1|v) - E_model[P(h_j=1|v')]
///   d/dw_ij = P(h_j=1|v) v_i - E_model[P(h_j=1|v') v'_i]
/// summed over rows, with the model expectation taken under exact P(v').
inline CdGradient exact_loglik_gradient(const RbmModel& model, const Eigen::Ref<const Matrix>& data)
{
    detail::require_enumerable(model);
    require(data.cols() == model.m, ErrorCode::ShapeError, "data width != m");
    const Vector pv = marginal_distribution(model);

    Vector ev = Vector::Zero(model.m);
    Vector eh = Vector::Zero(model.n);
    Matrix evh = Matrix::Zero(model.m, model.n);
    for (std::uint64_t vs = 0; vs < (std::uint64_t{1} << model.m); ++vs) {
        const Vector v = state_bits(vs, model.m);
        const Vector ph = prob_h_given_v(model, v);
        const double w = pv(static_cast<Index>(vs));
        ev += w * v;
        eh += w * ph;
        evh += w * v * ph.transpose();
    }

    const auto N = static_cast<double>(data.rows());
    const Matrix ph_data = hidden_probs(model, data);
    CdGradient g;
    g.da = data.colwise().sum().transpose() - N * ev;
    g.db = ph_data.colwise().sum().transpose() - N * eh;
    g.dW = data.transpose() * ph_data - N * evh;
    return g;
}

} // namespace mktgen::rbm
