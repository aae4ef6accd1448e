#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "mktgen/core.hpp"
#include "mktgen/frame.hpp"
#include "mktgen/math.hpp"
#include "mktgen/preprocess.hpp"

namespace mktgen {

// --- marginals ------------------------------------------------------------

enum class MarginalKind { normal, student_t, gaussian_mixture };

/// One-dimensional marginal law. Normal parameters are mean and standard
/// deviation; mixtures list weights, means and standard deviations.
struct MarginalSpec {
    MarginalKind kind = MarginalKind::normal;
    double mu = 0.0;
    double sigma = 1.0;
    double nu = 4.0;
    std::vector<double> weights;
    std::vector<double> mus;
    std::vector<double> sigmas;

    static MarginalSpec normal(double mu, double sigma)
    {
        MarginalSpec s;
        s.kind = MarginalKind::normal;
        s.mu = mu;
        s.sigma = sigma;
        s.validate();
        return s;
    }

    static MarginalSpec student_t(double nu)
    {
        MarginalSpec s;
        s.kind = MarginalKind::student_t;
        s.nu = nu;
        s.validate();
        return s;
    }

    static MarginalSpec mixture(std::vector<double> weights, std::vector<double> mus, std::vector<double> sigmas)
    {
        MarginalSpec s;
        s.kind = MarginalKind::gaussian_mixture;
        s.weights = std::move(weights);
        s.mus = std::move(mus);
        s.sigmas = std::move(sigmas);
        s.validate();
        return s;
    }

    void validate() const
    {
        switch (kind) {
        case MarginalKind::normal:
            require(sigma > 0.0 && std::isfinite(mu), ErrorCode::ConfigError, "normal marginal needs sigma > 0");
            break;
        case MarginalKind::student_t:
            require(nu > 2.0, ErrorCode::ConfigError, "student_t marginal needs nu > 2");
            break;
        case MarginalKind::gaussian_mixture: {
            require(!weights.empty() && weights.size() == mus.size() && weights.size() == sigmas.size(),
                    ErrorCode::ConfigError, "mixture weights, means and sigmas must have equal nonzero length");
            double total = 0.0;
            for (std::size_t k = 0; k < weights.size(); ++k) {
                require(weights[k] >= 0.0 && sigmas[k] > 0.0, ErrorCode::ConfigError,
                        "mixture weights must be >= 0 and sigmas > 0");
                total += weights[k];
            }
            require(std::abs(total - 1.0) <= 1e-9, ErrorCode::ConfigError, "mixture weights must sum to 1");
            break;
        }
        }
    }
};

inline double marginal_cdf(const MarginalSpec& spec, double x)
{
    switch (spec.kind) {
    case MarginalKind::normal: return norm_cdf((x - spec.mu) / spec.sigma);
    case MarginalKind::student_t: return student_t_cdf(x, spec.nu);
    case MarginalKind::gaussian_mixture: {
        double p = 0.0;
        for (std::size_t k = 0; k < spec.weights.size(); ++k)
            p += spec.weights[k] * norm_cdf((x - spec.mus[k]) / spec.sigmas[k]);
        return p;
    }
    }
    return 0.0;
}

/// F^-1(u): closed form for the normal, bisection on the CDF otherwise,
/// stopped once |F(x) - u| <= 1e-12 or the bracket stops shrinking.
inline double marginal_quantile(const MarginalSpec& spec, double u)
{
    require(u > 0.0 && u < 1.0, ErrorCode::DomainError, "marginal_quantile requires 0 < u < 1");
    if (spec.kind == MarginalKind::normal)
        return spec.mu + spec.sigma * inv_norm_cdf(u);

    double lo = -1.0, hi = 1.0;
    while (marginal_cdf(spec, lo) > u)
        lo *= 2.0;
    while (marginal_cdf(spec, hi) < u)
        hi *= 2.0;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        x = 0.5 * (lo + hi);
        const double f = marginal_cdf(spec, x);
        if (std::abs(f - u) <= 1e-12 || x == lo || x == hi)
            break;
        (f < u ? lo : hi) = x;
    }
    return x;
}

// --- Gaussian copula ------------------------------------------------------

struct CopulaSpec {
    Index d = 0;
    Matrix R;
    std::vector<MarginalSpec> marginals;

    void validate() const
    {
        require(R.rows() == d && R.cols() == d, ErrorCode::ShapeError, "correlation matrix must be d x d");
        require(static_cast<Index>(marginals.size()) == d, ErrorCode::ShapeError, "need one marginal per dimension");
        require(R.allFinite() && (R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-12, ErrorCode::InvalidValue,
                "correlation matrix must be symmetric");
        require((R.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12, ErrorCode::InvalidValue,
                "correlation matrix must have a unit diagonal");
        for (const auto& m : marginals)
            m.validate();
    }
};

/// Lower Cholesky factor; NotPositiveDefinite if the factorization fails.
inline Matrix cholesky_factor(const Matrix& R)
{
    Eigen::LLT<Matrix> llt(R);
    require(llt.info() == Eigen::Success, ErrorCode::NotPositiveDefinite, "correlation matrix is not positive definite");
    Matrix L = llt.matrixL();
    require(L.allFinite() && (L.diagonal().array() > 0.0).all(), ErrorCode::NotPositiveDefinite,
            "correlation matrix is not positive definite");
    return L;
}

/// n rows X_i = F_i^-1(Phi(Z_i)) with Z ~ N(0, R).
inline SeriesFrame sample_copula(const CopulaSpec& spec, Index n, RngStream& rng)
{
    spec.validate();
    const Matrix L = cholesky_factor(spec.R);
    const Matrix Z = rng.normal_matrix(n, spec.d) * L.transpose();
    constexpr double u_lo = std::numeric_limits<double>::min();
    const double u_hi = std::nextafter(1.0, 0.0);
    Matrix X(n, spec.d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < spec.d; ++j) {
            const double u = std::clamp(norm_cdf(Z(i, j)), u_lo, u_hi);
            X(i, j) = marginal_quantile(spec.marginals[static_cast<std::size_t>(j)], u);
        }
    return SeriesFrame::from_matrix(std::move(X), "x");
}

/// Four-dimensional benchmark: a bimodal mixture, a t4, and two N(0, 2)
/// marginals joined by a Gaussian copula with
/// rho12 = -0.60, rho34 = 0.50, rho14 = 0.30, rho24 = -0.20.
inline CopulaSpec paper_copula_spec()
{
    CopulaSpec spec;
    spec.d = 4;
    spec.R = Matrix::Identity(4, 4);
    const auto set = [&](Index i, Index j, double r) { spec.R(i, j) = spec.R(j, i) = r; };
    set(0, 1, -0.60);
    set(2, 3, 0.50);
    set(0, 3, 0.30);
    set(1, 3, -0.20);
    spec.marginals = {MarginalSpec::mixture({0.5, 0.5}, {-1.5, 2.0}, {2.0, 1.0}), MarginalSpec::student_t(4.0),
                      MarginalSpec::normal(0.0, 2.0), MarginalSpec::normal(0.0, 2.0)};
    return spec;
}

// --- autocorrelated processes ---------------------------------------------

/// r_t = phi r_{t-1} + scale * e_t with e_t ~ N(0, corr), started from the
/// stationary distribution. T rows.
inline Matrix ar1_returns(const Matrix& corr, double phi, Index T, RngStream& rng, double scale = 0.01)
{
    require(std::abs(phi) < 1.0, ErrorCode::DomainError, "AR(1) coefficient must satisfy |phi| < 1");
    require(corr.rows() == corr.cols() && corr.rows() >= 1, ErrorCode::ShapeError, "corr must be square");
    const Matrix L = cholesky_factor(corr);
    const Index d = corr.rows();
    Matrix r(T, d);
    if (T == 0)
        return r;
    const Matrix e = rng.normal_matrix(T, d) * L.transpose() * scale;
    r.row(0) = e.row(0) / std::sqrt(1.0 - phi * phi);
    for (Index t = 1; t < T; ++t)
        r.row(t) = phi * r.row(t - 1) + e.row(t);
    return r;
}

/// AR(1) returns compounded into prices from 100, smoothed by an EWMA of
/// the given span, then converted back to T rows of returns.
inline SeriesFrame ar1_ewma_process(Index d, double phi, const Matrix& corr, Index T, int ewma_span, RngStream& rng,
                                   double scale = 0.01)
{
    require(corr.rows() == d, ErrorCode::ShapeError, "corr must be d x d");
    require(T >= 1, ErrorCode::TooFewRows, "T must be >= 1");
    const Matrix r = ar1_returns(corr, phi, T, rng, scale);
    const auto prices = prices_from_returns(SeriesFrame::from_matrix(r, "r"), Vector::Constant(d, 100.0));
    return returns_from_prices(ewma_prices(prices, ewma_span));
}

} // namespace mktgen
