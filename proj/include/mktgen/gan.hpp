#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/frame.hpp"
#include "mktgen/nn.hpp"

namespace mktgen::gan {

using nn::Activation;
using nn::LayerStack;

enum class GanMode { minimax, wgan_gp, wgan_clip };

inline const char* to_string(GanMode mode) noexcept
{
    switch (mode) {
    case GanMode::minimax: return "minimax";
    case GanMode::wgan_gp: return "wgan_gp";
    case GanMode::wgan_clip: return "wgan_clip";
    }
    return "unknown";
}

/// Training hyperparameters. `epochs` counts generator updates; each one is
/// preceded by `n_critic` critic updates.
struct GanConfig {
    GanMode mode = GanMode::wgan_gp;
    Index noise_dim = 100;
    double lambda_gp = 10.0;
    double clip_c = 0.01;
    int n_critic = 5;
    double learning_rate = 1e-4;
    Index batch_size = 500;
    int epochs = 1;
    std::uint64_t seed = 0;
    bool non_saturating = true; // minimax generator loss -log D(fake) instead of log(1 - D(fake))

    /// Defaults for a mode: one critic step per generator step in minimax mode.
    static GanConfig defaults(GanMode mode)
    {
        GanConfig c;
        c.mode = mode;
        c.n_critic = mode == GanMode::minimax ? 1 : 5;
        return c;
    }

    void validate() const
    {
        require(noise_dim >= 1, ErrorCode::ConfigError, "noise_dim must be >= 1");
        require(mode != GanMode::wgan_gp || lambda_gp > 0.0, ErrorCode::ConfigError, "lambda_gp must be > 0");
        require(mode != GanMode::wgan_clip || clip_c > 0.0, ErrorCode::ConfigError, "clip_c must be > 0");
        require(n_critic >= 1, ErrorCode::ConfigError, "n_critic must be >= 1");
        require(learning_rate > 0.0, ErrorCode::ConfigError, "learning_rate must be > 0");
        require(batch_size >= 1, ErrorCode::ConfigError, "batch_size must be >= 1");
        require(epochs >= 0, ErrorCode::ConfigError, "epochs must be >= 0");
    }
};

enum class ConditionKind { none, label_vector, history_window };

/// How conditioning information enters both networks. Generator input is
/// (noise, condition); critic input is (condition, sample). History windows
/// are flattened time-major, so the critic sees history followed by the
/// generated window as one (n_h + n_t) x n_x sequence.
struct ConditionSpec {
    ConditionKind kind = ConditionKind::none;
    Index label_dim = 0;
    Index n_h = 0; // history length
    Index n_t = 0; // generated window length
    Index n_x = 0; // series count

    static ConditionSpec none() { return {}; }

    static ConditionSpec labels(Index dim) { return {ConditionKind::label_vector, dim, 0, 0, 0}; }

    static ConditionSpec history(Index n_h, Index n_t, Index n_x)
    {
        return {ConditionKind::history_window, 0, n_h, n_t, n_x};
    }

    Index width() const noexcept
    {
        switch (kind) {
        case ConditionKind::none: return 0;
        case ConditionKind::label_vector: return label_dim;
        case ConditionKind::history_window: return n_h * n_x;
        }
        return 0;
    }
};

// --- losses ---------------------------------------------------------------

struct Losses {
    double loss_d = 0.0;
    double loss_g = 0.0;
};

/// loss_d = -mean log D(x1) - mean log(1 - D(x0));
/// loss_g = mean log(1 - D(x0)), or -mean log D(x0) when non-saturating.
inline Losses minimax_losses(const Eigen::Ref<const Vector>& d_real, const Eigen::Ref<const Vector>& d_fake,
                             bool non_saturating = false)
{
    require(d_real.size() > 0 && d_fake.size() > 0, ErrorCode::EmptyBatch, "losses need nonempty batches");
    const auto in_unit = [](const Eigen::Ref<const Vector>& v) { return (v.array() > 0.0).all() && (v.array() < 1.0).all(); };
    require(in_unit(d_real) && in_unit(d_fake), ErrorCode::DomainError, "minimax critic outputs must lie in (0, 1)");
    Losses l;
    l.loss_d = -d_real.array().log().mean() - (1.0 - d_fake.array()).log().mean();
    l.loss_g = non_saturating ? -d_fake.array().log().mean() : (1.0 - d_fake.array()).log().mean();
    return l;
}

/// loss_d = mean D(x0) - mean D(x1); loss_g = -mean D(x0).
inline Losses wgan_losses(const Eigen::Ref<const Vector>& d_real, const Eigen::Ref<const Vector>& d_fake)
{
    require(d_real.size() > 0 && d_fake.size() > 0, ErrorCode::EmptyBatch, "losses need nonempty batches");
    return {d_fake.mean() - d_real.mean(), -d_fake.mean()};
}

struct GpResult {
    double value = 0.0; // lambda * mean (||grad D(x2)|| - 1)^2
    nn::StackGradient params;
    Index degenerate = 0;
};

/// Gradient penalty at x2 = alpha x_real + (1 - alpha) x_fake with one
/// alpha ~ U[0, 1] per column. Batches are critic inputs, one per column.
inline GpResult gp_term(const LayerStack& critic, const Matrix& x_real, const Matrix& x_fake, RngStream& rng,
                        double lambda = 10.0)
{
    require(x_real.rows() == x_fake.rows() && x_real.cols() == x_fake.cols(), ErrorCode::ShapeError,
            "real and fake batches differ in shape");
    Matrix x2(x_real.rows(), x_real.cols());
    for (Index b = 0; b < x_real.cols(); ++b) {
        const double alpha = rng.uniform();
        x2.col(b) = alpha * x_real.col(b) + (1.0 - alpha) * x_fake.col(b);
    }
    auto pen = nn::grad_norm_penalty(critic, x2);
    pen.params *= lambda;
    return {lambda * pen.value, std::move(pen.params), pen.degenerate};
}

// --- model ----------------------------------------------------------------

struct GanModel {
    LayerStack generator;
    LayerStack critic;
    ConditionSpec condition;
    GanMode mode = GanMode::wgan_gp;

    Index noise_dim() const noexcept { return generator.input_size() - condition.width(); }
    Index sample_dim() const noexcept { return generator.output_size(); }

    void validate() const
    {
        require(noise_dim() >= 1, ErrorCode::ShapeError, "generator input leaves no room for noise");
        require(critic.input_size() == condition.width() + sample_dim(), ErrorCode::ShapeError,
                "critic input must equal condition width plus generator output");
        require(critic.output_size() == 1, ErrorCode::ShapeError, "critic must output one value per sample");
        if (condition.kind == ConditionKind::history_window)
            require(sample_dim() == condition.n_t * condition.n_x, ErrorCode::ShapeError,
                    "generator output must be n_t x n_x");
    }
};

struct GanTrace {
    std::vector<double> critic_loss;    // per critic step (without penalty)
    std::vector<double> penalty;        // per critic step, gp mode
    std::vector<double> generator_loss; // per generator step
    Index degenerate_penalties = 0;

    /// Wasserstein estimate -loss_d per critic step.
    std::vector<double> wasserstein() const
    {
        std::vector<double> w;
        for (double l : critic_loss)
            w.push_back(-l);
        return w;
    }
};

struct GanResult {
    GanModel model;
    GanTrace trace;
};

/// Training examples as columns: samples X (p x N) and conditions C (q x N).
struct GanDataset {
    Matrix samples;
    Matrix conditions;

    Index size() const noexcept { return samples.cols(); }
};

/// Row-major flatten of rows [start, start + len) of a T x n_x series.
inline Vector flatten_rows(const Eigen::Ref<const Matrix>& series, Index start, Index len)
{
    const Matrix block = series.middleRows(start, len).transpose();
    return Eigen::Map<const Vector>(block.data(), block.size());
}

/// Sliding (history, window) pairs from a T x n_x series.
inline GanDataset history_pairs(const Eigen::Ref<const Matrix>& series, const ConditionSpec& cond)
{
    require(cond.kind == ConditionKind::history_window, ErrorCode::UsageError, "history_pairs needs a history condition");
    require(series.cols() == cond.n_x, ErrorCode::ShapeError, "series width differs from n_x");
    require(series.rows() >= cond.n_h + cond.n_t, ErrorCode::TooFewRows,
            "need at least n_h + n_t = " + std::to_string(cond.n_h + cond.n_t) + " rows");
    const Index N = series.rows() - cond.n_h - cond.n_t + 1;
    GanDataset ds{Matrix(cond.n_t * cond.n_x, N), Matrix(cond.n_h * cond.n_x, N)};
    for (Index i = 0; i < N; ++i) {
        ds.conditions.col(i) = flatten_rows(series, i, cond.n_h);
        ds.samples.col(i) = flatten_rows(series, i + cond.n_h, cond.n_t);
    }
    return ds;
}

namespace detail {

inline constexpr double kTiny = 1e-12;

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom)
{
    if (top.rows() == 0)
        return bottom;
    Matrix out(top.rows() + bottom.rows(), bottom.cols());
    out << top, bottom;
    return out;
}

inline std::vector<Index> draw_batch(Index N, Index B, RngStream& rng)
{
    std::vector<Index> idx(static_cast<std::size_t>(B));
    for (auto& i : idx)
        i = static_cast<Index>(rng.below(static_cast<std::size_t>(N)));
    return idx;
}

inline void check_finite(double value, const char* what, Index iteration)
{
    if (!std::isfinite(value))
        fail(ErrorCode::Diverged, std::string("non-finite ") + what + " at iteration " + std::to_string(iteration));
}

} // namespace detail

struct LossGradient {
    double loss = 0.0;
    nn::StackGradient params;
};

/// Critic loss on one batch of critic inputs (one per column) and its
/// gradient with respect to the critic parameters. Minimax outputs are
/// clamped to [1e-12, 1 - 1e-12] before taking logs.
inline LossGradient critic_loss_gradient(const LayerStack& critic, const Matrix& real, const Matrix& fake, GanMode mode)
{
    const auto cache_real = nn::forward(critic, real);
    const auto cache_fake = nn::forward(critic, fake);
    const Vector d_real = cache_real.output.row(0).transpose();
    const Vector d_fake = cache_fake.output.row(0).transpose();
    const auto Br = static_cast<double>(real.cols());
    const auto Bf = static_cast<double>(fake.cols());
    Matrix g_real, g_fake;
    double loss;
    if (mode == GanMode::minimax) {
        const Vector dr = d_real.cwiseMax(detail::kTiny).cwiseMin(1.0 - detail::kTiny);
        const Vector df = d_fake.cwiseMax(detail::kTiny).cwiseMin(1.0 - detail::kTiny);
        loss = -dr.array().log().mean() - (1.0 - df.array()).log().mean();
        g_real = (-1.0 / Br) * dr.cwiseInverse().transpose();
        g_fake = ((1.0 / Bf) * (1.0 - df.array()).inverse()).matrix().transpose();
    } else {
        loss = wgan_losses(d_real, d_fake).loss_d;
        g_real = Matrix::Constant(1, real.cols(), -1.0 / Br);
        g_fake = Matrix::Constant(1, fake.cols(), 1.0 / Bf);
    }
    auto grads = nn::backward(critic, cache_real, g_real).params;
    grads += nn::backward(critic, cache_fake, g_fake).params;
    return {loss, std::move(grads)};
}

/// Generator loss for generator inputs `gen_input` (noise stacked over
/// conditions) and its gradient with respect to the generator parameters.
inline LossGradient generator_loss_gradient(const GanModel& model, const Matrix& gen_input, const Matrix& cond,
                                            GanMode mode, bool non_saturating)
{
    const auto B = static_cast<double>(gen_input.cols());
    const auto g_cache = nn::forward(model.generator, gen_input);
    const auto d_cache = nn::forward(model.critic, detail::stack_rows(cond, g_cache.output));
    const Vector d_fake = d_cache.output.row(0).transpose();
    Matrix g_out;
    double loss;
    if (mode == GanMode::minimax) {
        const Vector df = d_fake.cwiseMax(detail::kTiny).cwiseMin(1.0 - detail::kTiny);
        if (non_saturating) {
            loss = -df.array().log().mean();
            g_out = (-1.0 / B) * df.cwiseInverse().transpose();
        } else {
            loss = (1.0 - df.array()).log().mean();
            g_out = ((-1.0 / B) * (1.0 - df.array()).inverse()).matrix().transpose();
        }
    } else {
        loss = -d_fake.mean();
        g_out = Matrix::Constant(1, gen_input.cols(), -1.0 / B);
    }
    const Matrix grad_in = nn::backward(model.critic, d_cache, g_out).grad_input;
    return {loss, nn::backward(model.generator, g_cache, grad_in.bottomRows(model.sample_dim())).params};
}

/// Alternating critic / generator optimization.
///
/// Minimax mode uses plain SGD on the cross-entropy losses. The WGAN modes
/// use RMSProp on the Wasserstein losses, with either the gradient penalty
/// or weight clipping after every critic step.
inline GanResult train_gan(GanModel model, const GanDataset& data, const GanConfig& config)
{
    config.validate();
    model.validate();
    require(data.samples.rows() == model.sample_dim(), ErrorCode::ShapeError, "sample width differs from generator output");
    require(data.conditions.rows() == model.condition.width() && data.conditions.cols() == data.size(),
            ErrorCode::ShapeError, "condition matrix does not match the condition spec");
    require(data.size() > 0, ErrorCode::EmptyBatch, "no training examples");
    require(data.samples.allFinite() && data.conditions.allFinite(), ErrorCode::InvalidValue, "training data must be finite");
    require(model.noise_dim() == config.noise_dim, ErrorCode::ShapeError, "generator input does not match noise_dim");

    RngStream rng(config.seed, 0);
    const Index B = config.batch_size;
    const bool minimax = config.mode == GanMode::minimax;
    nn::RmsPropState g_opt, d_opt;
    g_opt.learning_rate = d_opt.learning_rate = config.learning_rate;
    GanTrace trace;
    for (int it = 0; it < config.epochs; ++it) {
        for (int c = 0; c < config.n_critic; ++c) {
            const auto idx = detail::draw_batch(data.size(), B, rng);
            const Matrix cond = data.conditions(Eigen::all, idx);
            const Matrix real = detail::stack_rows(cond, data.samples(Eigen::all, idx));
            const Matrix noise = rng.normal_matrix(config.noise_dim, B);
            const Matrix fake = detail::stack_rows(cond, nn::predict(model.generator, detail::stack_rows(noise, cond)));

            const auto step = critic_loss_gradient(model.critic, real, fake, config.mode);
            const double loss = step.loss;
            auto grads = step.params;
            double penalty = 0.0;
            if (config.mode == GanMode::wgan_gp) {
                auto gp = gp_term(model.critic, real, fake, rng, config.lambda_gp);
                grads += gp.params;
                penalty = gp.value;
                trace.degenerate_penalties += gp.degenerate;
            }
            detail::check_finite(loss + penalty, "critic loss", it);
            if (minimax)
                nn::sgd_step(model.critic, grads, config.learning_rate);
            else
                nn::rmsprop_step(d_opt, model.critic, grads);
            if (config.mode == GanMode::wgan_clip)
                nn::clip_parameters(model.critic, config.clip_c);
            trace.critic_loss.push_back(loss);
            trace.penalty.push_back(penalty);
        }

        const auto idx = detail::draw_batch(data.size(), B, rng);
        const Matrix cond = data.conditions(Eigen::all, idx);
        const Matrix noise = rng.normal_matrix(config.noise_dim, B);
        const auto step = generator_loss_gradient(model, detail::stack_rows(noise, cond), cond, config.mode,
                                                  config.non_saturating);
        const double loss = step.loss;
        detail::check_finite(loss, "generator loss", it);
        const auto& g_grads = step.params;
        if (minimax)
            nn::sgd_step(model.generator, g_grads, config.learning_rate);
        else
            nn::rmsprop_step(g_opt, model.generator, g_grads);
        trace.generator_loss.push_back(loss);
    }
    require(model.generator.all_finite() && model.critic.all_finite(), ErrorCode::Diverged,
            "non-finite network parameter after training");
    return {std::move(model), std::move(trace)};
}

/// Unconditional or label-conditioned training on the rows of `rows`.
inline GanResult train_gan(GanModel model, const Eigen::Ref<const Matrix>& rows, const GanConfig& config,
                           const std::optional<Matrix>& labels = std::nullopt)
{
    GanDataset ds;
    ds.samples = rows.transpose();
    if (model.condition.kind == ConditionKind::history_window)
        return train_gan(std::move(model), history_pairs(rows, model.condition), config);
    if (model.condition.kind == ConditionKind::label_vector) {
        require(labels.has_value() && labels->rows() == rows.rows(), ErrorCode::UsageError,
                "label conditioning needs one label row per sample");
        ds.conditions = labels->transpose();
    } else {
        ds.conditions = Matrix(0, rows.rows());
    }
    return train_gan(std::move(model), ds, config);
}

inline GanResult train_gan(GanModel model, const SeriesFrame& data, const GanConfig& config,
                           const std::optional<Matrix>& labels = std::nullopt)
{
    return train_gan(std::move(model), data.data, config, labels);
}

// --- architectures --------------------------------------------------------

struct MlpSpec {
    std::vector<Index> generator_layers{200, 100, 50, 25, 4};
    std::vector<Index> critic_layers{100, 50, 10, 1};
    double alpha = 0.5;
    Index noise_dim = 100;
};

/// Dense generator (leaky hidden layers, sigmoid head) and dense critic
/// (leaky hidden layers; identity head, or tanh head in clip mode, or
/// sigmoid head in minimax mode).
inline GanModel build_mlp_gan(const MlpSpec& spec, GanMode mode, RngStream& rng,
                              const ConditionSpec& condition = ConditionSpec::none())
{
    require(!spec.generator_layers.empty() && !spec.critic_layers.empty() && spec.critic_layers.back() == 1,
            ErrorCode::ConfigError, "critic must end in one unit");
    GanModel model;
    model.mode = mode;
    model.condition = condition;
    model.generator = LayerStack(spec.noise_dim + condition.width(), 1);
    for (std::size_t l = 0; l < spec.generator_layers.size(); ++l) {
        const bool last = l + 1 == spec.generator_layers.size();
        model.generator.add_dense(spec.generator_layers[l], last ? Activation::sigmoid() : Activation::leaky_relu(spec.alpha));
    }
    model.critic = LayerStack(condition.width() + spec.generator_layers.back(), 1);
    const Activation head = mode == GanMode::minimax     ? Activation::sigmoid()
                            : mode == GanMode::wgan_clip ? Activation::tanh()
                                                         : Activation::identity();
    for (std::size_t l = 0; l < spec.critic_layers.size(); ++l) {
        const bool last = l + 1 == spec.critic_layers.size();
        model.critic.add_dense(spec.critic_layers[l], last ? head : Activation::leaky_relu(spec.alpha));
    }
    model.generator.initialize(rng);
    model.critic.initialize(rng);
    model.validate();
    return model;
}

struct CdcwganSpec {
    Index n_x = 2;
    Index n_t = 5;
    Index n_h = 20;
    Index noise_dim = 100;
    double alpha = 0.5;
    std::vector<Index> critic_filters{16, 32, 64, 128};
    Index critic_kernel = 3;
    Index critic_stride = 2;
    Index critic_padding = 1;
    Index dense_channels = 256;
    std::vector<Index> generator_filters{256, 64};
    Index generator_kernel = 3;
};

/// Conditional convolutional WGAN.
///
/// Critic: (n_h + n_t) x n_x sequence -> strided convs -> Dense(1).
/// Generator: noise + flattened history -> Dense(n_t * 256), viewed as
/// n_t x 256 -> stride-1 same-padded convs -> n_x output channels (sigmoid).
inline GanModel build_cdcwgan(const CdcwganSpec& spec, GanMode mode, RngStream& rng)
{
    require(spec.generator_kernel % 2 == 1, ErrorCode::ConfigError, "generator kernel must be odd for same padding");
    GanModel model;
    model.mode = mode;
    model.condition = ConditionSpec::history(spec.n_h, spec.n_t, spec.n_x);
    const Activation leaky = Activation::leaky_relu(spec.alpha);

    model.critic = LayerStack(spec.n_x, spec.n_h + spec.n_t);
    for (Index f : spec.critic_filters)
        model.critic.add_conv1d(f, spec.critic_kernel, spec.critic_stride, spec.critic_padding, leaky);
    model.critic.add_dense(1, mode == GanMode::wgan_clip ? Activation::tanh() : Activation::identity());

    const Index pad = (spec.generator_kernel - 1) / 2;
    model.generator = LayerStack(spec.noise_dim + spec.n_h * spec.n_x, 1);
    model.generator.add_dense(spec.n_t * spec.dense_channels, leaky);
    model.generator.reshape(spec.dense_channels, spec.n_t);
    for (Index f : spec.generator_filters)
        model.generator.add_conv1d(f, spec.generator_kernel, 1, pad, leaky);
    model.generator.add_conv1d(spec.n_x, spec.generator_kernel, 1, pad, Activation::sigmoid());

    model.generator.initialize(rng);
    model.critic.initialize(rng);
    model.validate();
    return model;
}

/// Builds the convolutional pair (initialized from stream 1 of the config
/// seed) and trains it on a T x n_x series.
inline GanResult train_cdcwgan(const Eigen::Ref<const Matrix>& series, const CdcwganSpec& spec, const GanConfig& config)
{
    require(series.rows() >= spec.n_h + spec.n_t, ErrorCode::TooFewRows,
            "CDCWGAN needs at least n_h + n_t = " + std::to_string(spec.n_h + spec.n_t) + " rows");
    require(config.mode != GanMode::minimax, ErrorCode::ConfigError, "CDCWGAN trains in a Wasserstein mode");
    RngStream init(config.seed, 1);
    auto model = build_cdcwgan(spec, config.mode, init);
    return train_gan(std::move(model), history_pairs(series, model.condition), config);
}

// --- generation -----------------------------------------------------------

/// n samples as rows. `conditions` holds one row per sample, or a single row
/// reused for all samples; it must be present exactly when the model is
/// conditional.
inline Matrix generate(const GanModel& model, Index n, RngStream& rng,
                       const std::optional<Matrix>& conditions = std::nullopt)
{
    const Index q = model.condition.width();
    require(q == 0 || conditions.has_value(), ErrorCode::UsageError, "conditional generator needs conditions");
    Matrix cond(q, n);
    if (q > 0) {
        require(conditions->cols() == q && (conditions->rows() == n || conditions->rows() == 1), ErrorCode::ShapeError,
                "conditions must have one row (or n rows) of width " + std::to_string(q));
        for (Index i = 0; i < n; ++i)
            cond.col(i) = conditions->row(conditions->rows() == 1 ? 0 : i).transpose();
    }
    const Matrix noise = rng.normal_matrix(model.noise_dim(), n);
    return nn::predict(model.generator, detail::stack_rows(noise, cond)).transpose();
}

/// Market-generator loop: each generator call emits n_t rows conditioned on
/// the last n_h rows; the window slides by n_t until `horizon` rows exist.
inline Matrix generate_series_gan(const GanModel& model, const Eigen::Ref<const Matrix>& seed_window, Index horizon,
                                  RngStream& rng)
{
    const auto& c = model.condition;
    require(c.kind == ConditionKind::history_window, ErrorCode::UsageError, "series generation needs a history-conditioned model");
    require(seed_window.rows() == c.n_h && seed_window.cols() == c.n_x, ErrorCode::ShapeError, "seed window must be n_h x n_x");
    Matrix out(std::max<Index>(horizon, 0), c.n_x);
    Matrix window = seed_window;
    Index filled = 0;
    while (filled < horizon) {
        const Matrix cond = flatten_rows(window, 0, c.n_h).transpose();
        const Vector step = generate(model, 1, rng, cond).row(0).transpose();
        const Matrix rows = Eigen::Map<const Matrix>(step.data(), c.n_x, c.n_t).transpose();
        const Index take = std::min(c.n_t, horizon - filled);
        out.middleRows(filled, take) = rows.topRows(take);
        filled += take;
        Matrix joined(c.n_h + c.n_t, c.n_x);
        joined << window, rows;
        window = joined.bottomRows(c.n_h);
    }
    return out;
}

} // namespace mktgen::gan
