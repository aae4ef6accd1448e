#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/math.hpp"

namespace mktgen::rbm {

enum class RbmKind { bernoulli, gaussian, conditional };

inline const char* to_string(RbmKind kind) noexcept
{
    switch (kind) {
    case RbmKind::bernoulli: return "bernoulli";
    case RbmKind::gaussian: return "gaussian";
    case RbmKind::conditional: return "conditional";
    }
    return "unknown";
}

/// Parameters of a Bernoulli, Gaussian-Bernoulli or conditional RBM.
///
/// Shapes: a (m), b (n), W (m x n), sigma (m), and for the conditional kind
/// Q (d*m x m) and P (d*m x n). The history vector c_t stacks the d previous
/// observations newest first: c_t = (v_{t-1}, ..., v_{t-d}).
struct RbmModel {
    RbmKind kind = RbmKind::bernoulli;
    Index m = 0;
    Index n = 0;
    Index d = 0;
    Vector a;
    Vector b;
    Matrix W;
    Vector sigma;
    Matrix P;
    Matrix Q;

    Index cond_width() const noexcept { return d * m; }
    bool is_real_valued() const noexcept { return kind != RbmKind::bernoulli; }

    static RbmModel zeros(RbmKind kind, Index m, Index n, Index d = 0)
    {
        require(m >= 1 && n >= 1, ErrorCode::ShapeError, "RBM needs m >= 1 and n >= 1");
        require(kind == RbmKind::conditional ? d >= 1 : d == 0, ErrorCode::ShapeError,
                "lag count d must be >= 1 for conditional RBMs and 0 otherwise");
        RbmModel model;
        model.kind = kind;
        model.m = m;
        model.n = n;
        model.d = d;
        model.a = Vector::Zero(m);
        model.b = Vector::Zero(n);
        model.W = Matrix::Zero(m, n);
        model.sigma = Vector::Ones(m);
        model.P = Matrix::Zero(d * m, n);
        model.Q = Matrix::Zero(d * m, m);
        return model;
    }

    /// W ~ N(0, weight_std^2), biases 0, sigma 1. P and Q start at zero.
    static RbmModel initialize(RbmKind kind, Index m, Index n, Index d, RngStream& rng, double weight_std = 0.01)
    {
        auto model = zeros(kind, m, n, d);
        model.W = weight_std * rng.normal_matrix(m, n);
        return model;
    }

    void validate() const
    {
        require(a.size() == m && b.size() == n && W.rows() == m && W.cols() == n && sigma.size() == m,
                ErrorCode::ShapeError, "RBM parameter shapes inconsistent with (m, n)");
        require(P.rows() == d * m && P.cols() == n && Q.rows() == d * m && Q.cols() == m, ErrorCode::ShapeError,
                "conditional weight shapes inconsistent with (d, m, n)");
        require(a.allFinite() && b.allFinite() && W.allFinite() && sigma.allFinite() && P.allFinite() &&
                    Q.allFinite(),
                ErrorCode::InvalidValue, "RBM parameters must be finite");
        require((sigma.array() > 0.0).all(), ErrorCode::InvalidValue, "sigma must be positive");
    }
};

struct TrainConfig {
    double learning_rate = 0.01;
    Index batch_size = 500;
    int epochs = 1;
    int cd_k = 1;
    std::uint64_t seed = 0;
    bool linear_decay = false; // eta_t = eta (1 - epoch / epochs)
    bool train_sigma = false;

    void validate() const
    {
        require(learning_rate > 0.0, ErrorCode::ConfigError, "learning_rate must be > 0");
        require(batch_size >= 1, ErrorCode::ConfigError, "batch_size must be >= 1");
        require(cd_k >= 1, ErrorCode::ConfigError, "cd_k must be >= 1");
        require(epochs >= 0, ErrorCode::ConfigError, "epochs must be >= 0");
    }
};

/// Derivatives of the CD objective (descent direction: theta -= eta * grad).
/// The same layout carries exact log-likelihood gradients (ascent direction).
struct CdGradient {
    Vector da;
    Vector db;
    Matrix dW;
    Vector dsigma; // empty unless requested
    Matrix dP;     // conditional only
    Matrix dQ;     // conditional only
    double reconstruction_error = 0.0;

    double squared_norm() const
    {
        double s = da.squaredNorm() + db.squaredNorm() + dW.squaredNorm();
        s += dsigma.squaredNorm() + dP.squaredNorm() + dQ.squaredNorm();
        return s;
    }
};

/// Optional per-row history matrix (rows = samples, cols = d*m).
using History = std::optional<Eigen::Ref<const Matrix>>;

namespace detail {

inline void check_visible(const RbmModel& model, Index cols)
{
    require(cols == model.m, ErrorCode::ShapeError,
            "visible width " + std::to_string(cols) + " != m = " + std::to_string(model.m));
}

inline void check_history(const RbmModel& model, const History& C, Index rows)
{
    if (model.kind != RbmKind::conditional) {
        require(!C.has_value(), ErrorCode::ShapeError, "history supplied to a non-conditional RBM");
        return;
    }
    if (!C.has_value())
        return; // treated as c_t = 0
    require(C->rows() == rows && C->cols() == model.cond_width(), ErrorCode::ShapeError,
            "history must be rows x d*m");
}

inline Matrix sigmoid(const Matrix& x)
{
    return x.unaryExpr([](double z) { return mktgen::sigmoid(z); });
}

inline Matrix bernoulli_sample(const Matrix& probs, RngStream& rng)
{
    Matrix out(probs.rows(), probs.cols());
    for (Index j = 0; j < probs.cols(); ++j)
        for (Index i = 0; i < probs.rows(); ++i)
            out(i, j) = rng.uniform() < probs(i, j) ? 1.0 : 0.0;
    return out;
}

inline Vector inv_var(const RbmModel& model)
{
    return model.sigma.array().square().inverse();
}

} // namespace detail

// --- conditionals ---------------------------------------------------------

/// Dynamic biases (a + Q^T c, b + P^T c) for one history vector.
inline std::pair<Vector, Vector> dynamic_biases(const RbmModel& model, const Eigen::Ref<const Vector>& c)
{
    require(model.kind == RbmKind::conditional, ErrorCode::ShapeError, "dynamic biases need a conditional RBM");
    require(c.size() == model.cond_width(), ErrorCode::ShapeError, "history vector must have d*m entries");
    return {model.a + model.Q.transpose() * c, model.b + model.P.transpose() * c};
}

/// P(h_j = 1 | v) for each row of V. Real-valued kinds divide v by sigma^2.
inline Matrix hidden_probs(const RbmModel& model, const Eigen::Ref<const Matrix>& V, const History& C = std::nullopt)
{
    detail::check_visible(model, V.cols());
    detail::check_history(model, C, V.rows());
    Matrix act;
    if (model.is_real_valued())
        act = (V * detail::inv_var(model).asDiagonal()) * model.W;
    else
        act = V * model.W;
    act.rowwise() += model.b.transpose();
    if (C.has_value())
        act.noalias() += *C * model.P;
    return detail::sigmoid(act);
}

/// Mean of v given h: sigmoid(a + W h) (bernoulli) or a~ + W h (real-valued).
inline Matrix visible_means(const RbmModel& model, const Eigen::Ref<const Matrix>& H, const History& C = std::nullopt)
{
    require(H.cols() == model.n, ErrorCode::ShapeError, "hidden width != n");
    detail::check_history(model, C, H.rows());
    Matrix act = H * model.W.transpose();
    act.rowwise() += model.a.transpose();
    if (C.has_value())
        act.noalias() += *C * model.Q;
    return model.is_real_valued() ? act : detail::sigmoid(act);
}

inline Matrix sample_hidden(const RbmModel& model, const Eigen::Ref<const Matrix>& V, RngStream& rng,
                            const History& C = std::nullopt)
{
    return detail::bernoulli_sample(hidden_probs(model, V, C), rng);
}

inline Matrix sample_visible(const RbmModel& model, const Eigen::Ref<const Matrix>& H, RngStream& rng,
                             const History& C = std::nullopt)
{
    Matrix mean = visible_means(model, H, C);
    if (!model.is_real_valued())
        return detail::bernoulli_sample(mean, rng);
    for (Index j = 0; j < mean.cols(); ++j)
        for (Index i = 0; i < mean.rows(); ++i)
            mean(i, j) += model.sigma(j) * rng.normal();
    return mean;
}

/// E(v, h) = -a.v - b.h - v.W.h for a Bernoulli RBM.
inline double energy_bernoulli(const RbmModel& model, const Eigen::Ref<const Vector>& v,
                               const Eigen::Ref<const Vector>& h)
{
    require(model.kind == RbmKind::bernoulli, ErrorCode::ShapeError, "energy_bernoulli needs a bernoulli RBM");
    require(v.size() == model.m && h.size() == model.n, ErrorCode::ShapeError, "state shapes do not match model");
    return -model.a.dot(v) - model.b.dot(h) - v.dot(model.W * h);
}

inline Vector prob_h_given_v(const RbmModel& model, const Eigen::Ref<const Vector>& v,
                             const std::optional<Vector>& c = std::nullopt)
{
    History C;
    Matrix c_row;
    if (c) {
        c_row = c->transpose();
        C.emplace(c_row);
    }
    return hidden_probs(model, v.transpose(), C).row(0).transpose();
}

/// P(v_i = 1 | h) for a Bernoulli RBM.
inline Vector prob_v_given_h(const RbmModel& model, const Eigen::Ref<const Vector>& h)
{
    require(model.kind == RbmKind::bernoulli, ErrorCode::ShapeError, "prob_v_given_h needs a bernoulli RBM");
    return visible_means(model, h.transpose()).row(0).transpose();
}

/// One draw of v given h (Bernoulli or Gaussian according to the kind).
inline Vector sample_v_given_h(const RbmModel& model, const Eigen::Ref<const Vector>& h, RngStream& rng,
                               const std::optional<Vector>& c = std::nullopt)
{
    History C;
    Matrix c_row;
    if (c) {
        c_row = c->transpose();
        C.emplace(c_row);
    }
    return sample_visible(model, h.transpose(), rng, C).row(0).transpose();
}

// --- Gibbs sampling -------------------------------------------------------

struct GibbsState {
    Matrix v;  // final visible states
    Matrix h;  // final sampled hidden states
    Matrix ph; // P(h = 1 | final v)
};

/// k block-Gibbs alternations h ~ P(h | v), v ~ P(v | h), run row-wise in parallel chains.
inline GibbsState gibbs_chain(const RbmModel& model, const Eigen::Ref<const Matrix>& V0, int k, RngStream& rng,
                              const History& C = std::nullopt)
{
    require(k >= 1, ErrorCode::DomainError, "Gibbs chain needs k >= 1");
    GibbsState state;
    state.v = V0;
    for (int t = 0; t < k; ++t) {
        state.h = sample_hidden(model, state.v, rng, C);
        state.v = sample_visible(model, state.h, rng, C);
    }
    state.ph = hidden_probs(model, state.v, C);
    return state;
}

// --- free energy and CD ---------------------------------------------------

/// F(v) = -log sum_h exp(-E(v, h)) for each row.
inline Vector free_energy(const RbmModel& model, const Eigen::Ref<const Matrix>& V, const History& C = std::nullopt)
{
    detail::check_visible(model, V.cols());
    detail::check_history(model, C, V.rows());
    Matrix act;
    Vector out(V.rows());
    if (model.is_real_valued()) {
        const Vector iv = detail::inv_var(model);
        act = (V * iv.asDiagonal()) * model.W;
        Matrix abias = Matrix::Zero(V.rows(), model.m);
        abias.rowwise() += model.a.transpose();
        if (C.has_value())
            abias.noalias() += *C * model.Q;
        out = 0.5 * ((V - abias).array().square().matrix() * iv).array();
    } else {
        act = V * model.W;
        out = -(V * model.a);
    }
    act.rowwise() += model.b.transpose();
    if (C.has_value())
        act.noalias() += *C * model.P;
    for (Index i = 0; i < V.rows(); ++i)
        for (Index j = 0; j < model.n; ++j)
            out(i) -= softplus(act(i, j));
    return out;
}

/// Mean over rows of -dF/dtheta (the data-dependent part of the log-likelihood
/// gradient), given PH = P(h | v) for the same rows.
inline CdGradient free_energy_gradient(const RbmModel& model, const Eigen::Ref<const Matrix>& V,
                                       const Eigen::Ref<const Matrix>& PH, const History& C = std::nullopt,
                                       bool with_sigma = false)
{
    const auto N = static_cast<double>(V.rows());
    CdGradient g;
    if (model.is_real_valued()) {
        const Vector iv = detail::inv_var(model);
        const Matrix Vs = V * iv.asDiagonal();
        Matrix abias = Matrix::Zero(V.rows(), model.m);
        abias.rowwise() += model.a.transpose();
        if (C.has_value())
            abias.noalias() += *C * model.Q;
        const Matrix resid = (V - abias) * iv.asDiagonal(); // (v - a~) / sigma^2
        g.da = resid.colwise().sum().transpose() / N;
        g.dW = Vs.transpose() * PH / N;
        if (model.kind == RbmKind::conditional && C.has_value()) {
            g.dQ = C->transpose() * resid / N;
            g.dP = C->transpose() * PH / N;
        } else if (model.kind == RbmKind::conditional) {
            g.dQ = Matrix::Zero(model.cond_width(), model.m);
            g.dP = Matrix::Zero(model.cond_width(), model.n);
        }
        if (with_sigma) {
            // -dE/dsigma_i = (v_i - a~_i)^2 / sigma^3 - 2 v_i (W p_h)_i / sigma^3
            const Vector inv_cube = model.sigma.array().cube().inverse();
            const Matrix sq = (V - abias).array().square();
            const Matrix cross = (V.array() * (PH * model.W.transpose()).array()).matrix();
            g.dsigma = ((sq - 2.0 * cross).colwise().sum().transpose().array() * inv_cube.array()).matrix() / N;
        }
    } else {
        g.da = V.colwise().sum().transpose() / N;
        g.dW = V.transpose() * PH / N;
    }
    g.db = PH.colwise().sum().transpose() / N;
    return g;
}

inline CdGradient operator-(const CdGradient& lhs, const CdGradient& rhs)
{
    CdGradient out;
    out.da = lhs.da - rhs.da;
    out.db = lhs.db - rhs.db;
    out.dW = lhs.dW - rhs.dW;
    if (lhs.dsigma.size())
        out.dsigma = lhs.dsigma - rhs.dsigma;
    if (lhs.dP.size()) {
        out.dP = lhs.dP - rhs.dP;
        out.dQ = lhs.dQ - rhs.dQ;
    }
    return out;
}

/// k-step contrastive-divergence estimate of dCD/dtheta over a mini-batch.
///
/// Each row of `batch` starts a chain; the gradient averages
/// (statistics at v^(k)) - (statistics at v^(0)), using P(h | v) rather than
/// sampled hidden states. `reconstruction_error` is the mean squared
/// difference between v^(0) and the one-step visible mean.
inline CdGradient cd_k_gradient(const RbmModel& model, const Eigen::Ref<const Matrix>& batch, int k, RngStream& rng,
                                const History& C = std::nullopt, bool with_sigma = false)
{
    require(batch.rows() > 0, ErrorCode::EmptyBatch, "contrastive divergence needs a non-empty batch");
    require(k >= 1, ErrorCode::DomainError, "cd_k must be >= 1");
    detail::check_visible(model, batch.cols());
    detail::check_history(model, C, batch.rows());

    const Matrix ph0 = hidden_probs(model, batch, C);
    Matrix h = detail::bernoulli_sample(ph0, rng);
    Matrix v = visible_means(model, h, C);
    const double recon = (v - batch).squaredNorm() / static_cast<double>(batch.size());
    if (model.is_real_valued()) {
        for (Index j = 0; j < v.cols(); ++j)
            for (Index i = 0; i < v.rows(); ++i)
                v(i, j) += model.sigma(j) * rng.normal();
    } else {
        v = detail::bernoulli_sample(v, rng);
    }
    for (int t = 1; t < k; ++t) {
        h = sample_hidden(model, v, rng, C);
        v = sample_visible(model, h, rng, C);
    }
    const Matrix phk = hidden_probs(model, v, C);

    CdGradient g = free_energy_gradient(model, v, phk, C, with_sigma) - free_energy_gradient(model, batch, ph0, C, with_sigma);
    g.reconstruction_error = recon;
    return g;
}

/// theta <- theta - eta * grad (sigma kept strictly positive).
inline void apply_update(RbmModel& model, const CdGradient& g, double eta)
{
    model.a -= eta * g.da;
    model.b -= eta * g.db;
    model.W -= eta * g.dW;
    if (g.dsigma.size())
        model.sigma = (model.sigma - eta * g.dsigma).cwiseMax(1e-3);
    if (model.kind == RbmKind::conditional && g.dP.size()) {
        model.P -= eta * g.dP;
        model.Q -= eta * g.dQ;
    }
}

// --- conditional data layout ----------------------------------------------

/// Stacks d lagged rows newest first: c_t = (v_{t-1}, ..., v_{t-d}).
inline Vector history_vector(const Eigen::Ref<const Matrix>& window_oldest_first)
{
    const Index d = window_oldest_first.rows();
    const Index m = window_oldest_first.cols();
    Vector c(d * m);
    for (Index k = 0; k < d; ++k)
        c.segment(k * m, m) = window_oldest_first.row(d - 1 - k).transpose();
    return c;
}

struct ConditionalPairs {
    Matrix visible; // (T - d) x m, rows v_t
    Matrix history; // (T - d) x d*m, rows c_t
};

inline ConditionalPairs conditional_pairs(const Eigen::Ref<const Matrix>& series, Index d)
{
    require(d >= 1, ErrorCode::DomainError, "lag count must be >= 1");
    require(series.rows() > d, ErrorCode::TooFewRows, "series needs more than d rows");
    const Index T = series.rows();
    const Index m = series.cols();
    ConditionalPairs out{series.bottomRows(T - d), Matrix(T - d, d * m)};
    for (Index t = d; t < T; ++t)
        out.history.row(t - d) = history_vector(series.middleRows(t - d, d)).transpose();
    return out;
}

// --- training -------------------------------------------------------------

struct TrainResult {
    RbmModel model;
    std::vector<double> trace; // per-epoch mean reconstruction error
};

/// Mini-batch CD-k training. Rows are shuffled each epoch with the config
/// seed, so the result is a pure function of (model, data, config).
inline TrainResult train(RbmModel model, const Eigen::Ref<const Matrix>& data, const TrainConfig& config,
                         const History& C = std::nullopt)
{
    config.validate();
    model.validate();
    detail::check_visible(model, data.cols());
    require(model.kind != RbmKind::conditional || C.has_value(), ErrorCode::ShapeError,
            "conditional RBM training needs a history matrix");
    detail::check_history(model, C, data.rows());
    require(data.allFinite(), ErrorCode::InvalidValue, "training data must be finite");

    TrainResult result;
    RngStream rng(config.seed, 0);
    const Index N = data.rows();
    std::vector<Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    const bool with_sigma = config.train_sigma && model.is_real_valued();

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        const double eta = config.linear_decay
                               ? config.learning_rate * (1.0 - static_cast<double>(epoch) / config.epochs)
                               : config.learning_rate;
        double recon = 0.0;
        Index n_batches = 0;
        for (Index start = 0; start < N; start += config.batch_size) {
            const Index len = std::min(config.batch_size, N - start);
            std::vector<Index> idx(order.begin() + start, order.begin() + start + len);
            const Matrix batch = data(idx, Eigen::all);
            CdGradient g;
            if (C.has_value()) {
                const Matrix hist = (*C)(idx, Eigen::all);
                g = cd_k_gradient(model, batch, config.cd_k, rng, History(hist), with_sigma);
            } else {
                g = cd_k_gradient(model, batch, config.cd_k, rng, std::nullopt, with_sigma);
            }
            apply_update(model, g, eta);
            recon += g.reconstruction_error;
            ++n_batches;
        }
        const bool finite = model.a.allFinite() && model.b.allFinite() && model.W.allFinite() &&
                            model.P.allFinite() && model.Q.allFinite() && model.sigma.allFinite();
        if (!finite)
            fail(ErrorCode::Diverged, "non-finite RBM parameter at epoch " + std::to_string(epoch));
        result.trace.push_back(recon / static_cast<double>(std::max<Index>(n_batches, 1)));
    }
    result.model = std::move(model);
    return result;
}

// --- generation -----------------------------------------------------------

/// What a generated observation is once the chain stops. Real-valued
/// visibles report E[v | h] of the last alternation (`mean`) or a draw from
/// P(v | h) (`sampled`, the default); Bernoulli visibles are always sampled
/// bits.
enum class Readout { sampled, mean };

/// Runs `gibbs_steps` alternations from N(0,1) noise (thresholded at 0 for
/// Bernoulli kinds) and returns the final visible layer, one row per sample.
inline Matrix sample(const RbmModel& model, Index n_samples, int gibbs_steps, RngStream& rng,
                     const History& C = std::nullopt, Readout readout = Readout::sampled)
{
    Matrix v0 = rng.normal_matrix(n_samples, model.m);
    if (!model.is_real_valued())
        v0 = (v0.array() > 0.0).cast<double>();
    if (n_samples == 0)
        return v0;
    if (readout == Readout::sampled || !model.is_real_valued())
        return gibbs_chain(model, v0, gibbs_steps, rng, C).v;
    require(gibbs_steps >= 1, ErrorCode::DomainError, "Gibbs chain needs k >= 1");
    const Matrix v = gibbs_steps > 1 ? gibbs_chain(model, v0, gibbs_steps - 1, rng, C).v : v0;
    return visible_means(model, sample_hidden(model, v, rng, C), C);
}

/// Iterative market generator for a conditional RBM.
///
/// `seed_window` holds d rows ordered oldest to newest. Each step builds c_t
/// from the window, Gibbs-samples one new observation from noise, appends
/// it and slides the window.
inline Matrix generate_series(const RbmModel& model, const Eigen::Ref<const Matrix>& seed_window, Index horizon,
                              int gibbs_steps, RngStream& rng, Readout readout = Readout::sampled)
{
    require(model.kind == RbmKind::conditional, ErrorCode::ShapeError, "generate_series needs a conditional RBM");
    require(seed_window.rows() == model.d && seed_window.cols() == model.m, ErrorCode::ShapeError,
            "seed window must be d x m");
    require(gibbs_steps >= 1, ErrorCode::DomainError, "gibbs_steps must be >= 1");
    Matrix out(std::max<Index>(horizon, 0), model.m);
    Matrix window = seed_window;
    for (Index t = 0; t < horizon; ++t) {
        const Matrix c = history_vector(window).transpose();
        const Matrix v = sample(model, 1, gibbs_steps, rng, History(c), readout);
        out.row(t) = v.row(0);
        if (model.d > 1)
            window.topRows(model.d - 1) = window.bottomRows(model.d - 1).eval();
        window.row(model.d - 1) = v.row(0);
    }
    return out;
}

} // namespace mktgen::rbm
