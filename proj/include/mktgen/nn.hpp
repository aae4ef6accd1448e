#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mktgen/core.hpp"
#include "mktgen/math.hpp"

namespace mktgen::nn {

// Batches are column-major: one sample per column. A sample with c channels
// over L time steps is flattened time-major, entry (t, ch) at t * c + ch.

// --- shape algebra --------------------------------------------------------

/// floor((n_t - n_k + 2 n_p) / n_s) + 1
inline Index conv1d_out_len(Index n_t, Index n_k, Index n_p, Index n_s)
{
    require(n_s >= 1 && n_k >= 1 && n_p >= 0 && n_t >= 1, ErrorCode::ShapeError, "invalid conv geometry");
    require(n_k <= n_t + 2 * n_p, ErrorCode::ShapeError,
            "kernel " + std::to_string(n_k) + " longer than padded input " + std::to_string(n_t + 2 * n_p));
    return (n_t - n_k + 2 * n_p) / n_s + 1;
}

/// n_s (n_t - 1) + n_k - 2 n_p
inline Index tconv1d_out_len(Index n_t, Index n_k, Index n_p, Index n_s)
{
    require(n_s >= 1 && n_k >= 1 && n_p >= 0 && n_t >= 1, ErrorCode::ShapeError, "invalid conv geometry");
    const Index len = n_s * (n_t - 1) + n_k - 2 * n_p;
    require(len > 0, ErrorCode::ShapeError, "transpose convolution output length is not positive");
    return len;
}

// --- activations ----------------------------------------------------------

enum class ActivationKind { identity, leaky_relu, sigmoid, tanh };

struct Activation {
    ActivationKind kind = ActivationKind::identity;
    double alpha = 0.0; // leaky_relu negative slope

    static Activation identity() { return {ActivationKind::identity, 0.0}; }
    static Activation leaky_relu(double alpha) { return {ActivationKind::leaky_relu, alpha}; }
    static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
    static Activation tanh() { return {ActivationKind::tanh, 0.0}; }

    double value(double x) const noexcept
    {
        switch (kind) {
        case ActivationKind::identity: return x;
        case ActivationKind::leaky_relu: return x < 0.0 ? alpha * x : x;
        case ActivationKind::sigmoid: return mktgen::sigmoid(x);
        case ActivationKind::tanh: return std::tanh(x);
        }
        return x;
    }

    double slope(double x) const noexcept
    {
        switch (kind) {
        case ActivationKind::identity: return 1.0;
        case ActivationKind::leaky_relu: return x < 0.0 ? alpha : 1.0;
        case ActivationKind::sigmoid: {
            const double s = mktgen::sigmoid(x);
            return s * (1.0 - s);
        }
        case ActivationKind::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        }
        return 1.0;
    }

    double curvature(double x) const noexcept
    {
        switch (kind) {
        case ActivationKind::identity:
        case ActivationKind::leaky_relu: return 0.0;
        case ActivationKind::sigmoid: {
            const double s = mktgen::sigmoid(x);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case ActivationKind::tanh: {
            const double t = std::tanh(x);
            return -2.0 * t * (1.0 - t * t);
        }
        }
        return 0.0;
    }
};

inline const char* to_string(ActivationKind kind) noexcept
{
    switch (kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    }
    return "unknown";
}

// --- im2col ---------------------------------------------------------------

namespace detail {

/// Gathers kernel windows: result(k * c + ch, b * positions + t) = X(ch + c * (t*s - p + k), b).
inline Matrix im2col(const Matrix& X, Index c, Index L, Index kernel, Index stride, Index pad, Index positions)
{
    const Index B = X.cols();
    Matrix cols = Matrix::Zero(kernel * c, positions * B);
    for (Index b = 0; b < B; ++b)
        for (Index t = 0; t < positions; ++t)
            for (Index k = 0; k < kernel; ++k) {
                const Index src = t * stride - pad + k;
                if (src >= 0 && src < L)
                    cols.block(k * c, b * positions + t, c, 1) = X.block(src * c, b, c, 1);
            }
    return cols;
}

/// Adjoint of im2col: scatter-adds windows back into a (c * L) x B batch.
inline Matrix col2im(const Matrix& cols, Index c, Index L, Index kernel, Index stride, Index pad, Index positions,
                     Index B)
{
    Matrix X = Matrix::Zero(c * L, B);
    for (Index b = 0; b < B; ++b)
        for (Index t = 0; t < positions; ++t)
            for (Index k = 0; k < kernel; ++k) {
                const Index src = t * stride - pad + k;
                if (src >= 0 && src < L)
                    X.block(src * c, b, c, 1) += cols.block(k * c, b * positions + t, c, 1);
            }
    return X;
}

/// Views a (c * L) x B batch as c x (L * B), column b * L + t holding time step t of sample b.
inline Eigen::Map<const Matrix> channel_view(const Matrix& X, Index c)
{
    return {X.data(), c, X.size() / c};
}

inline Matrix batch_view(const Matrix& Y, Index features)
{
    return Eigen::Map<const Matrix>(Y.data(), features, Y.size() / features);
}

inline Matrix apply_elementwise(const Matrix& Z, const auto& fn)
{
    return Z.unaryExpr(fn);
}

inline std::uint64_t next_stack_id()
{
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

} // namespace detail

// --- layers ---------------------------------------------------------------

enum class LayerKind { dense, conv1d, tconv1d };

inline const char* to_string(LayerKind kind) noexcept
{
    switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::tconv1d: return "tconv1d";
    }
    return "unknown";
}

/// One affine layer followed by an elementwise activation.
///
/// Weight layout:
///   dense    out x in
///   conv1d   n_f x (n_k * c_in), column k * c_in + ch
///   tconv1d  c_in x (n_k * c_out), column k * c_out + ch (the kernel of the
///            convolution it is the adjoint of)
/// Biases are per output unit (dense) or per output channel (convolutions).
struct Layer {
    LayerKind kind = LayerKind::dense;
    Activation activation;
    Index in_channels = 0;
    Index in_length = 1;
    Index out_channels = 0;
    Index out_length = 1;
    Index kernel = 1;
    Index stride = 1;
    Index padding = 0;
    Matrix weight;
    Vector bias;

    Index input_size() const noexcept { return in_channels * in_length; }
    Index output_size() const noexcept { return out_channels * out_length; }

    static Layer dense(Index n_in, Index n_out, Activation act)
    {
        require(n_in >= 1 && n_out >= 1, ErrorCode::ShapeError, "dense layer sizes must be positive");
        Layer layer;
        layer.kind = LayerKind::dense;
        layer.activation = act;
        layer.in_channels = n_in;
        layer.out_channels = n_out;
        layer.weight = Matrix::Zero(n_out, n_in);
        layer.bias = Vector::Zero(n_out);
        return layer;
    }

    static Layer conv1d(Index c_in, Index length, Index n_filters, Index n_k, Index n_s, Index n_p, Activation act)
    {
        Layer layer;
        layer.kind = LayerKind::conv1d;
        layer.activation = act;
        layer.in_channels = c_in;
        layer.in_length = length;
        layer.out_channels = n_filters;
        layer.out_length = conv1d_out_len(length, n_k, n_p, n_s);
        layer.kernel = n_k;
        layer.stride = n_s;
        layer.padding = n_p;
        layer.weight = Matrix::Zero(n_filters, n_k * c_in);
        layer.bias = Vector::Zero(n_filters);
        return layer;
    }

    static Layer tconv1d(Index c_in, Index length, Index c_out, Index n_k, Index n_s, Index n_p, Activation act)
    {
        Layer layer;
        layer.kind = LayerKind::tconv1d;
        layer.activation = act;
        layer.in_channels = c_in;
        layer.in_length = length;
        layer.out_channels = c_out;
        layer.out_length = tconv1d_out_len(length, n_k, n_p, n_s);
        layer.kernel = n_k;
        layer.stride = n_s;
        layer.padding = n_p;
        layer.weight = Matrix::Zero(c_in, n_k * c_out);
        layer.bias = Vector::Zero(c_out);
        return layer;
    }

    Index fan_in() const noexcept
    {
        return kind == LayerKind::dense ? in_channels : in_channels * kernel;
    }

    Index fan_out() const noexcept
    {
        return kind == LayerKind::dense ? out_channels : out_channels * kernel;
    }

    /// Linear part without bias.
    Matrix linear(const Matrix& X) const
    {
        switch (kind) {
        case LayerKind::dense: return weight * X;
        case LayerKind::conv1d: {
            const Matrix cols = detail::im2col(X, in_channels, in_length, kernel, stride, padding, out_length);
            const Matrix Y = weight * cols;
            return detail::batch_view(Y, output_size());
        }
        case LayerKind::tconv1d: {
            const Matrix cols = weight.transpose() * detail::channel_view(X, in_channels);
            return detail::col2im(cols, out_channels, out_length, kernel, stride, padding, in_length, X.cols());
        }
        }
        return {};
    }

    /// Transpose of the linear part (maps output-space gradients to input space).
    Matrix adjoint(const Matrix& G) const
    {
        switch (kind) {
        case LayerKind::dense: return weight.transpose() * G;
        case LayerKind::conv1d: {
            const Matrix cols = weight.transpose() * detail::channel_view(G, out_channels);
            return detail::col2im(cols, in_channels, in_length, kernel, stride, padding, out_length, G.cols());
        }
        case LayerKind::tconv1d: {
            const Matrix cols = detail::im2col(G, out_channels, out_length, kernel, stride, padding, in_length);
            const Matrix Y = weight * cols;
            return detail::batch_view(Y, input_size());
        }
        }
        return {};
    }

    /// d(sum G . linear(X)) / d weight.
    Matrix weight_gradient(const Matrix& X, const Matrix& G) const
    {
        switch (kind) {
        case LayerKind::dense: return G * X.transpose();
        case LayerKind::conv1d: {
            const Matrix cols = detail::im2col(X, in_channels, in_length, kernel, stride, padding, out_length);
            return detail::channel_view(G, out_channels) * cols.transpose();
        }
        case LayerKind::tconv1d: {
            const Matrix cols = detail::im2col(G, out_channels, out_length, kernel, stride, padding, in_length);
            return detail::channel_view(X, in_channels) * cols.transpose();
        }
        }
        return {};
    }

    Vector bias_gradient(const Matrix& G) const
    {
        if (kind == LayerKind::dense)
            return G.rowwise().sum();
        return detail::channel_view(G, out_channels).rowwise().sum();
    }

    void add_bias(Matrix& Z) const
    {
        if (kind == LayerKind::dense) {
            Z.colwise() += bias;
            return;
        }
        Eigen::Map<Matrix> view(Z.data(), out_channels, Z.size() / out_channels);
        view.colwise() += bias;
    }
};

// --- stack ----------------------------------------------------------------

/// Ordered layers whose shapes compose. Mutating parameters goes through
/// mutable_layers(), which invalidates outstanding forward caches.
class LayerStack {
public:
    LayerStack() = default;

    /// Starts an empty stack whose input is `channels` x `length`.
    LayerStack(Index channels, Index length) : channels_(channels), length_(length), input_size_(channels * length)
    {
        require(channels >= 1 && length >= 1, ErrorCode::ShapeError, "input geometry must be positive");
    }

    LayerStack(const LayerStack& other)
        : layers_(other.layers_), channels_(other.channels_), length_(other.length_), input_size_(other.input_size_),
          id_(detail::next_stack_id())
    {
    }

    LayerStack& operator=(const LayerStack& other)
    {
        if (this != &other) {
            layers_ = other.layers_;
            channels_ = other.channels_;
            length_ = other.length_;
            input_size_ = other.input_size_;
            ++version_;
        }
        return *this;
    }

    LayerStack(LayerStack&&) noexcept = default;
    LayerStack& operator=(LayerStack&&) noexcept = default;

    LayerStack& add_dense(Index n_out, Activation act)
    {
        layers_.push_back(Layer::dense(channels_ * length_, n_out, act));
        channels_ = n_out;
        length_ = 1;
        ++version_;
        return *this;
    }

    LayerStack& add_conv1d(Index n_filters, Index n_k, Index n_s, Index n_p, Activation act)
    {
        layers_.push_back(Layer::conv1d(channels_, length_, n_filters, n_k, n_s, n_p, act));
        channels_ = n_filters;
        length_ = layers_.back().out_length;
        ++version_;
        return *this;
    }

    LayerStack& add_tconv1d(Index c_out, Index n_k, Index n_s, Index n_p, Activation act)
    {
        layers_.push_back(Layer::tconv1d(channels_, length_, c_out, n_k, n_s, n_p, act));
        channels_ = c_out;
        length_ = layers_.back().out_length;
        ++version_;
        return *this;
    }

    /// Reinterprets the current output as `channels` x `length` (same size).
    LayerStack& reshape(Index channels, Index length)
    {
        require(channels * length == channels_ * length_, ErrorCode::ShapeError, "reshape must preserve size");
        channels_ = channels;
        length_ = length;
        return *this;
    }

    /// Appends a fully built layer (used when loading).
    LayerStack& push(Layer layer)
    {
        require(layer.input_size() == output_size(), ErrorCode::ShapeError,
                "layer input " + std::to_string(layer.input_size()) + " does not match stack output " +
                    std::to_string(output_size()));
        channels_ = layer.out_channels;
        length_ = layer.out_length;
        layers_.push_back(std::move(layer));
        ++version_;
        return *this;
    }

    /// Weights ~ N(0, 2 / (fan_in + fan_out)), biases 0.
    void initialize(RngStream& rng)
    {
        for (auto& layer : layers_) {
            const double sd = std::sqrt(2.0 / static_cast<double>(layer.fan_in() + layer.fan_out()));
            layer.weight = sd * rng.normal_matrix(layer.weight.rows(), layer.weight.cols());
            layer.bias.setZero();
        }
        ++version_;
    }

    const std::vector<Layer>& layers() const noexcept { return layers_; }

    std::vector<Layer>& mutable_layers() noexcept
    {
        ++version_;
        return layers_;
    }

    std::size_t size() const noexcept { return layers_.size(); }
    Index input_size() const noexcept { return input_size_; }
    Index output_size() const noexcept { return layers_.empty() ? input_size_ : layers_.back().output_size(); }
    Index output_channels() const noexcept { return channels_; }
    Index output_length() const noexcept { return length_; }
    std::uint64_t id() const noexcept { return id_; }
    std::uint64_t version() const noexcept { return version_; }

    Index parameter_count() const
    {
        Index n = 0;
        for (const auto& layer : layers_)
            n += layer.weight.size() + layer.bias.size();
        return n;
    }

    bool all_finite() const
    {
        for (const auto& layer : layers_)
            if (!layer.weight.allFinite() || !layer.bias.allFinite())
                return false;
        return true;
    }

private:
    std::vector<Layer> layers_;
    Index channels_ = 0;
    Index length_ = 0;
    Index input_size_ = 0;
    std::uint64_t id_ = detail::next_stack_id();
    std::uint64_t version_ = 0;
};

// --- gradients ------------------------------------------------------------

struct StackGradient {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    static StackGradient zeros_like(const LayerStack& stack)
    {
        StackGradient g;
        for (const auto& layer : stack.layers()) {
            g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
            g.bias.push_back(Vector::Zero(layer.bias.size()));
        }
        return g;
    }

    StackGradient& operator+=(const StackGradient& other)
    {
        for (std::size_t l = 0; l < weight.size(); ++l) {
            weight[l] += other.weight[l];
            bias[l] += other.bias[l];
        }
        return *this;
    }

    StackGradient& operator*=(double s)
    {
        for (std::size_t l = 0; l < weight.size(); ++l) {
            weight[l] *= s;
            bias[l] *= s;
        }
        return *this;
    }

    double squared_norm() const
    {
        double s = 0.0;
        for (std::size_t l = 0; l < weight.size(); ++l)
            s += weight[l].squaredNorm() + bias[l].squaredNorm();
        return s;
    }

    bool all_finite() const
    {
        for (std::size_t l = 0; l < weight.size(); ++l)
            if (!weight[l].allFinite() || !bias[l].allFinite())
                return false;
        return true;
    }
};

// --- forward / backward ---------------------------------------------------

struct ForwardCache {
    std::vector<Matrix> inputs;         // a_{l-1}
    std::vector<Matrix> preactivations; // z_l
    Matrix output;
    std::uint64_t stack_id = 0;
    std::uint64_t stack_version = 0;
};

inline ForwardCache forward(const LayerStack& stack, const Matrix& X)
{
    require(X.rows() == stack.input_size(), ErrorCode::ShapeError,
            "input has " + std::to_string(X.rows()) + " features, stack expects " + std::to_string(stack.input_size()));
    ForwardCache cache;
    cache.stack_id = stack.id();
    cache.stack_version = stack.version();
    Matrix a = X;
    for (const auto& layer : stack.layers()) {
        Matrix z = layer.linear(a);
        layer.add_bias(z);
        Matrix next = z.unaryExpr([&](double v) { return layer.activation.value(v); });
        cache.inputs.push_back(std::move(a));
        cache.preactivations.push_back(std::move(z));
        a = std::move(next);
    }
    cache.output = std::move(a);
    return cache;
}

inline Matrix predict(const LayerStack& stack, const Matrix& X)
{
    return forward(stack, X).output;
}

struct BackwardResult {
    StackGradient params;
    Matrix grad_input;
};

inline void require_fresh(const LayerStack& stack, const ForwardCache& cache)
{
    require(cache.stack_id == stack.id() && cache.stack_version == stack.version() &&
                cache.preactivations.size() == stack.size(),
            ErrorCode::CacheError, "forward cache does not belong to the current stack parameters");
}

/// Reverse-mode gradients of sum(grad_output .* output) w.r.t. parameters and input.
inline BackwardResult backward(const LayerStack& stack, const ForwardCache& cache, const Matrix& grad_output)
{
    require_fresh(stack, cache);
    require(grad_output.rows() == cache.output.rows() && grad_output.cols() == cache.output.cols(),
            ErrorCode::ShapeError, "grad_output shape differs from forward output");
    BackwardResult result;
    result.params = StackGradient::zeros_like(stack);
    Matrix g = grad_output;
    for (std::size_t l = stack.size(); l-- > 0;) {
        const auto& layer = stack.layers()[l];
        const Matrix& z = cache.preactivations[l];
        const Matrix dz = g.cwiseProduct(z.unaryExpr([&](double v) { return layer.activation.slope(v); }));
        result.params.weight[l] = layer.weight_gradient(cache.inputs[l], dz);
        result.params.bias[l] = layer.bias_gradient(dz);
        g = layer.adjoint(dz);
    }
    result.grad_input = std::move(g);
    return result;
}

// --- gradient penalty (double backprop) -----------------------------------

struct PenaltyResult {
    double value = 0.0;     // mean over samples of (||grad_x D|| - 1)^2
    StackGradient params;   // gradient of `value`
    Vector gradient_norms;  // ||grad_x D(x_b)|| per sample
    Index degenerate = 0;   // samples with ||grad_x D|| == 0 (penalty 1, no parameter gradient)
};

/// Parameter gradient of sum_b u_b . grad_x D(x_b) with the directions U held fixed.
///
/// Forward-over-reverse: a tangent pass carries U through the linearized
/// network, then a reverse pass over both the value and tangent computations
/// accumulates parameter adjoints. Exact for every activation, including the
/// curvature terms of sigmoid and tanh.
inline StackGradient directional_input_gradient_params(const LayerStack& stack, const ForwardCache& cache,
                                                       const Matrix& U)
{
    require_fresh(stack, cache);
    const std::size_t L = stack.size();
    std::vector<Matrix> tangent_in(L);   // da_{l-1}
    std::vector<Matrix> tangent_pre(L);  // dz_l
    Matrix t = U;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = stack.layers()[l];
        tangent_in[l] = t;
        tangent_pre[l] = layer.linear(t);
        t = tangent_pre[l].cwiseProduct(
            cache.preactivations[l].unaryExpr([&](double v) { return layer.activation.slope(v); }));
    }

    StackGradient grads = StackGradient::zeros_like(stack);
    Matrix value_adj = Matrix::Zero(cache.output.rows(), cache.output.cols());
    Matrix tangent_adj = Matrix::Ones(cache.output.rows(), cache.output.cols());
    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = stack.layers()[l];
        const Matrix& z = cache.preactivations[l];
        const Matrix slope = z.unaryExpr([&](double v) { return layer.activation.slope(v); });
        const Matrix curv = z.unaryExpr([&](double v) { return layer.activation.curvature(v); });
        const Matrix dz_tangent = slope.cwiseProduct(tangent_adj);
        const Matrix dz_value =
            curv.cwiseProduct(tangent_pre[l]).cwiseProduct(tangent_adj) + slope.cwiseProduct(value_adj);
        grads.weight[l] = layer.weight_gradient(cache.inputs[l], dz_value) + layer.weight_gradient(tangent_in[l], dz_tangent);
        grads.bias[l] = layer.bias_gradient(dz_value);
        value_adj = layer.adjoint(dz_value);
        tangent_adj = layer.adjoint(dz_tangent);
    }
    return grads;
}

/// Gradient-norm penalty (||grad_x D(x)||_2 - 1)^2 averaged over the batch
/// columns of X, with its parameter gradient by double backprop. The stack
/// must produce one scalar per sample.
inline PenaltyResult grad_norm_penalty(const LayerStack& stack, const Matrix& X)
{
    require(stack.output_size() == 1, ErrorCode::ShapeError, "gradient penalty needs a scalar-output critic");
    const ForwardCache cache = forward(stack, X);
    const Index B = X.cols();
    const Matrix g = backward(stack, cache, Matrix::Ones(1, B)).grad_input;

    PenaltyResult result;
    result.gradient_norms = g.colwise().norm().transpose();
    Matrix U = Matrix::Zero(g.rows(), B);
    double total = 0.0;
    for (Index b = 0; b < B; ++b) {
        const double norm = result.gradient_norms(b);
        total += (norm - 1.0) * (norm - 1.0);
        if (norm == 0.0) {
            ++result.degenerate;
            continue;
        }
        U.col(b) = (2.0 * (norm - 1.0) / norm / static_cast<double>(B)) * g.col(b);
    }
    result.value = total / static_cast<double>(B);
    result.params = directional_input_gradient_params(stack, cache, U);
    return result;
}

// --- optimizers -----------------------------------------------------------

struct RmsPropState {
    double learning_rate = 1e-4;
    double rho = 0.9;
    double epsilon = 1e-8;
    std::vector<Matrix> weight_acc;
    std::vector<Vector> bias_acc;
};

/// acc <- rho acc + (1 - rho) g^2;  theta <- theta - eta g / (sqrt(acc) + eps).
inline void rmsprop_step(RmsPropState& state, LayerStack& stack, const StackGradient& grads)
{
    require(grads.weight.size() == stack.size(), ErrorCode::ShapeError, "gradient does not match stack");
    if (state.weight_acc.empty()) {
        for (const auto& layer : stack.layers()) {
            state.weight_acc.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
            state.bias_acc.push_back(Vector::Zero(layer.bias.size()));
        }
    }
    auto& layers = stack.mutable_layers();
    const double rho = state.rho;
    const double eta = state.learning_rate;
    const double eps = state.epsilon;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& wa = state.weight_acc[l];
        auto& ba = state.bias_acc[l];
        wa = rho * wa + (1.0 - rho) * grads.weight[l].cwiseAbs2();
        ba = rho * ba + (1.0 - rho) * grads.bias[l].cwiseAbs2();
        layers[l].weight.array() -= eta * grads.weight[l].array() / (wa.array().sqrt() + eps);
        layers[l].bias.array() -= eta * grads.bias[l].array() / (ba.array().sqrt() + eps);
    }
}

/// theta <- theta - eta g
inline void sgd_step(LayerStack& stack, const StackGradient& grads, double eta)
{
    auto& layers = stack.mutable_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight -= eta * grads.weight[l];
        layers[l].bias -= eta * grads.bias[l];
    }
}

/// Projects every weight and bias into [-c, c].
inline void clip_parameters(LayerStack& stack, double c)
{
    for (auto& layer : stack.mutable_layers()) {
        layer.weight = layer.weight.cwiseMax(-c).cwiseMin(c);
        layer.bias = layer.bias.cwiseMax(-c).cwiseMin(c);
    }
}

} // namespace mktgen::nn
