#pragma once

// Independent reference computations used by unit and acceptance tests.
// Nothing here calls into the code path it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "mktgen/nn.hpp"
#include "mktgen/rbm.hpp"

namespace oracle {

using mktgen::Index;
using mktgen::Matrix;
using mktgen::Vector;

// --- scalar numerics ------------------------------------------------------

inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Root of f(x) = target on [lo, hi] for increasing f, to 1e-14 in x.
inline double bisect(const std::function<double(double)>& f, double target, double lo, double hi)
{
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double inv_phi(double u) { return bisect(phi, u, -40.0, 40.0); }

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Student-t density.
inline double t_pdf(double x, double nu)
{
    const double c = std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI);
    return c * std::pow(1.0 + x * x / nu, -(nu + 1) / 2);
}

// --- RBM enumeration ------------------------------------------------------

inline Vector bits(unsigned long state, Index width)
{
    Vector v(width);
    for (Index i = 0; i < width; ++i)
        v(i) = static_cast<double>((state >> i) & 1ul);
    return v;
}

/// Full joint table P(v, h) of a Bernoulli RBM, rows = v states, cols = h states.
inline Matrix joint_table(const mktgen::rbm::RbmModel& model)
{
    const unsigned long nv = 1ul << model.m;
    const unsigned long nh = 1ul << model.n;
    Matrix logp(nv, nh);
    for (unsigned long vs = 0; vs < nv; ++vs) {
        const Vector v = bits(vs, model.m);
        for (unsigned long hs = 0; hs < nh; ++hs) {
            const Vector h = bits(hs, model.n);
            logp(vs, hs) = model.a.dot(v) + model.b.dot(h) + v.dot(model.W * h);
        }
    }
    const double hi = logp.maxCoeff();
    Matrix p = (logp.array() - hi).exp().matrix();
    return p / p.sum();
}

inline Vector visible_marginal(const mktgen::rbm::RbmModel& model)
{
    return joint_table(model).rowwise().sum();
}

inline mktgen::rbm::RbmModel random_bernoulli(Index m, Index n, mktgen::RngStream& rng, double scale = 0.7)
{
    auto model = mktgen::rbm::RbmModel::zeros(mktgen::rbm::RbmKind::bernoulli, m, n);
    model.a = scale * rng.normal_matrix(m, 1);
    model.b = scale * rng.normal_matrix(n, 1);
    model.W = scale * rng.normal_matrix(m, n);
    return model;
}

// --- finite differences ---------------------------------------------------

/// Central differences of f over every entry of `x` (restored afterwards).
template <typename Derived>
Matrix central_diff(Eigen::MatrixBase<Derived>& x, const std::function<double()>& f, double h = 1e-5)
{
    Matrix g(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i) {
            const double x0 = x(i, j);
            x(i, j) = x0 + h;
            const double fp = f();
            x(i, j) = x0 - h;
            const double fm = f();
            x(i, j) = x0;
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    return g;
}

/// ||a - b|| / max(||a||, ||b||), or the absolute difference when both are tiny.
inline double rel_err(const Matrix& a, const Matrix& b)
{
    const double scale = std::max(a.norm(), b.norm());
    const double diff = (a - b).norm();
    return scale < 1e-10 ? diff : diff / scale;
}

/// Flattens all parameter gradients of a stack into one column.
inline Vector flatten(const mktgen::nn::StackGradient& g)
{
    Index total = 0;
    for (std::size_t l = 0; l < g.weight.size(); ++l)
        total += g.weight[l].size() + g.bias[l].size();
    Vector out(total);
    Index k = 0;
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        out.segment(k, g.weight[l].size()) = g.weight[l].reshaped();
        k += g.weight[l].size();
        out.segment(k, g.bias[l].size()) = g.bias[l];
        k += g.bias[l].size();
    }
    return out;
}

/// Finite-difference parameter gradient of f(stack), flattened like flatten().
inline Vector stack_fd(mktgen::nn::LayerStack& stack, const std::function<double(const mktgen::nn::LayerStack&)>& f,
                       double h = 1e-5)
{
    std::vector<double> out;
    const std::size_t L = stack.size();
    for (std::size_t l = 0; l < L; ++l) {
        const auto perturb = [&](bool weight, Index i) {
            auto get = [&]() -> double& {
                auto& layer = stack.mutable_layers()[l];
                return weight ? layer.weight.data()[i] : layer.bias.data()[i];
            };
            const double x0 = get();
            get() = x0 + h;
            const double fp = f(stack);
            get() = x0 - h;
            const double fm = f(stack);
            get() = x0;
            out.push_back((fp - fm) / (2.0 * h));
        };
        const Index nw = stack.layers()[l].weight.size();
        const Index nb = stack.layers()[l].bias.size();
        for (Index i = 0; i < nw; ++i)
            perturb(true, i);
        for (Index i = 0; i < nb; ++i)
            perturb(false, i);
    }
    return Eigen::Map<Vector>(out.data(), static_cast<Index>(out.size()));
}

// --- convolution by definition --------------------------------------------

/// y[f, t] = b_f + sum_{k, c} K[f, k, c] x[c, t*s - p + k], zero outside [0, L).
/// x is (c_in x L) in channel-major form; kernel(f, k * c_in + c).
inline Matrix naive_conv1d(const Matrix& x, const Matrix& kernel, const Vector& bias, Index n_k, Index n_s, Index n_p)
{
    const Index c_in = x.rows();
    const Index L = x.cols();
    const Index L_out = (L - n_k + 2 * n_p) / n_s + 1;
    Matrix y(kernel.rows(), L_out);
    for (Index f = 0; f < kernel.rows(); ++f)
        for (Index t = 0; t < L_out; ++t) {
            double s = bias(f);
            for (Index k = 0; k < n_k; ++k) {
                const Index src = t * n_s - n_p + k;
                if (src < 0 || src >= L)
                    continue;
                for (Index c = 0; c < c_in; ++c)
                    s += kernel(f, k * c_in + c) * x(c, src);
            }
            y(f, t) = s;
        }
    return y;
}

/// Transpose convolution by definition: each input element scatters a
/// weighted kernel into the output at offset t*s - p.
inline Matrix naive_tconv1d(const Matrix& x, const Matrix& kernel, const Vector& bias, Index c_out, Index n_k,
                            Index n_s, Index n_p)
{
    const Index c_in = x.rows();
    const Index L = x.cols();
    const Index L_out = n_s * (L - 1) + n_k - 2 * n_p;
    Matrix y(c_out, L_out);
    for (Index c = 0; c < c_out; ++c)
        y.row(c).setConstant(bias(c));
    for (Index ci = 0; ci < c_in; ++ci)
        for (Index t = 0; t < L; ++t)
            for (Index k = 0; k < n_k; ++k) {
                const Index dst = t * n_s - n_p + k;
                if (dst < 0 || dst >= L_out)
                    continue;
                for (Index co = 0; co < c_out; ++co)
                    y(co, dst) += kernel(ci, k * c_out + co) * x(ci, t);
            }
    return y;
}

/// (channels x L) matrix -> time-major column of length channels * L.
inline Vector time_major(const Matrix& x)
{
    return Eigen::Map<const Vector>(x.data(), x.size());
}

inline Matrix from_time_major(const Vector& v, Index channels)
{
    return Eigen::Map<const Matrix>(v.data(), channels, v.size() / channels);
}

// --- assignment / W1 ------------------------------------------------------

/// Minimum mean |x_i - y_pi(i)| over all permutations.
inline double brute_force_w1(const std::vector<double>& x, std::vector<double> y)
{
    std::vector<std::size_t> perm(y.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            cost += std::abs(x[i] - y[perm[i]]);
        best = std::min(best, cost / static_cast<double>(x.size()));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// --- binarization by the textbook algorithm -------------------------------

/// Integer stage then repeated halving into 16 digits, most significant first.
inline std::vector<int> appendix_encode(double x, double lo, double hi)
{
    auto level = static_cast<long>(65535.0 * (x - lo) / (hi - lo));
    std::vector<int> digits(16);
    for (int i = 15; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<int>(level % 2);
        level /= 2;
    }
    return digits;
}

inline double appendix_decode(const std::vector<int>& digits, double lo, double hi)
{
    double level = 0.0;
    for (int i = 1; i <= 16; ++i)
        level += std::pow(2.0, i - 1) * digits[static_cast<std::size_t>(16 - i)];
    return lo + level * (hi - lo) / 65535.0;
}

} // namespace oracle
