#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mktgen/backtest.hpp"
#include "mktgen/core.hpp"
#include "mktgen/datagen.hpp"
#include "mktgen/gan.hpp"
#include "mktgen/model_io.hpp"
#include "mktgen/preprocess.hpp"
#include "mktgen/rbm.hpp"

namespace mktgen::config {

using json = nlohmann::json;

struct Ar1Settings {
    Index d = 2;
    double phi = 0.2;
    Matrix corr = Matrix::Identity(2, 2);
    int ewma_span = 3;
    double scale = 0.01;
};

struct DataSection {
    std::string source = "copula"; // copula | ar1 | csv
    Index n = 10000;
    CopulaSpec copula = paper_copula_spec();
    Ar1Settings ar1;
    std::string path;
};

enum class ModelKind { bernoulli_rbm, gaussian_rbm, conditional_rbm, gan, wgan, cdcwgan };

inline const char* to_string(ModelKind kind) noexcept
{
    switch (kind) {
    case ModelKind::bernoulli_rbm: return "bernoulli-rbm";
    case ModelKind::gaussian_rbm: return "gaussian-rbm";
    case ModelKind::conditional_rbm: return "conditional-rbm";
    case ModelKind::gan: return "gan";
    case ModelKind::wgan: return "wgan";
    case ModelKind::cdcwgan: return "cdcwgan";
    }
    return "unknown";
}

inline ModelKind model_kind_from(const std::string& name)
{
    for (auto k : {ModelKind::bernoulli_rbm, ModelKind::gaussian_rbm, ModelKind::conditional_rbm, ModelKind::gan,
                   ModelKind::wgan, ModelKind::cdcwgan})
        if (name == to_string(k))
            return k;
    fail(ErrorCode::ConfigError, "unknown model kind '" + name + "'");
}

inline bool is_rbm(ModelKind k) noexcept
{
    return k == ModelKind::bernoulli_rbm || k == ModelKind::gaussian_rbm || k == ModelKind::conditional_rbm;
}

struct ModelSection {
    ModelKind kind = ModelKind::gaussian_rbm;
    Index hidden = 128;
    Index lags = 20;
    double weight_std = 0.01;
    rbm::TrainConfig rbm;
    gan::GanConfig gan;
    gan::MlpSpec mlp;
    gan::CdcwganSpec cdcwgan;
};

struct GenerateSection {
    Index n = 10000;
    Index horizon = 5000;
    int gibbs_steps = 1000;
    rbm::Readout readout = rbm::Readout::sampled;
};

struct BacktestSection {
    RiskParityConfig risk_parity;
    Index n_reps = 500;
    Index horizon = 0; // rows per replication; 0 uses the source length (bootstrap) or generate.horizon
    std::map<std::string, double> reference;
};

struct EvaluateSection {
    Index max_lag = 20;
    Index qq_points = 100;
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    DataSection data;
    std::vector<TransformKind> preprocess{TransformKind::zscore};
    ModelSection model;
    GenerateSection generate;
    BacktestSection backtest;
    EvaluateSection evaluate;

    void validate() const
    {
        require(data.n >= 0, ErrorCode::ConfigError, "data.n must be >= 0");
        require(data.source == "copula" || data.source == "ar1" || data.source == "csv", ErrorCode::ConfigError,
                "data.source must be copula, ar1 or csv");
        data.copula.validate();
        require(std::abs(data.ar1.phi) < 1.0, ErrorCode::ConfigError, "data.ar1.phi must satisfy |phi| < 1");
        require(data.ar1.corr.rows() == data.ar1.d && data.ar1.corr.cols() == data.ar1.d, ErrorCode::ConfigError,
                "data.ar1.corr must be d x d");
        require(data.ar1.ewma_span >= 1, ErrorCode::ConfigError, "data.ar1.ewma_span must be >= 1");
        for (std::size_t i = 0; i + 1 < preprocess.size(); ++i)
            require(preprocess[i] != TransformKind::binarize16, ErrorCode::ConfigError,
                    "binarize16 must be the last preprocess step");
        const bool binary = !preprocess.empty() && preprocess.back() == TransformKind::binarize16;
        require(binary == (model.kind == ModelKind::bernoulli_rbm), ErrorCode::ConfigError,
                "binarize16 preprocessing is required by, and only valid for, bernoulli-rbm");
        require(model.hidden >= 1, ErrorCode::ConfigError, "model.hidden must be >= 1");
        require(model.lags >= 1, ErrorCode::ConfigError, "model.lags must be >= 1");
        require(model.weight_std > 0.0, ErrorCode::ConfigError, "model.weight_std must be > 0");
        model.rbm.validate();
        model.gan.validate();
        require((model.kind == ModelKind::gan) == (model.gan.mode == gan::GanMode::minimax), ErrorCode::ConfigError,
                "minimax mode is used by model kind 'gan' only");
        require(generate.n >= 0 && generate.horizon >= 0, ErrorCode::ConfigError, "generate sizes must be >= 0");
        require(generate.gibbs_steps >= 1, ErrorCode::ConfigError, "generate.gibbs_steps must be >= 1");
        backtest.risk_parity.validate();
        require(backtest.n_reps >= 1, ErrorCode::ConfigError, "backtest.n_reps must be >= 1");
        require(backtest.horizon >= 0, ErrorCode::ConfigError, "backtest.horizon must be >= 0");
        for (const auto& [name, value] : backtest.reference) {
            require(std::find(stat_names().begin(), stat_names().end(), name) != stat_names().end(),
                    ErrorCode::ConfigError, "backtest.reference: unknown statistic '" + name + "'");
            (void)value;
        }
        require(evaluate.max_lag >= 1 && evaluate.qq_points >= 2, ErrorCode::ConfigError,
                "evaluate.max_lag must be >= 1 and evaluate.qq_points >= 2");
    }
};

// --- presets --------------------------------------------------------------

inline std::vector<std::string> preset_names()
{
    return {"copula-paper", "bernoulli-rbm", "gaussian-rbm", "conditional-rbm", "wgan-paper", "cdcwgan-paper"};
}

/// Applies a named preset on top of `cfg`. Model presets also set the
/// matching preprocessing chain.
inline void apply_preset(ExperimentConfig& cfg, const std::string& name)
{
    auto& m = cfg.model;
    const auto rbm_defaults = [&](ModelKind kind, Index hidden) {
        m.kind = kind;
        m.hidden = hidden;
        m.rbm.learning_rate = 0.01;
        m.rbm.batch_size = 500;
        m.rbm.cd_k = 1;
        m.rbm.epochs = 100000;
        cfg.generate.gibbs_steps = 1000;
    };
    const auto wgan_defaults = [&](ModelKind kind) {
        m.kind = kind;
        m.gan = gan::GanConfig::defaults(gan::GanMode::wgan_gp);
        m.gan.noise_dim = 100;
        m.gan.learning_rate = 1e-4;
        m.gan.batch_size = 500;
        m.gan.epochs = 2000;
    };
    if (name == "copula-paper") {
        cfg.data.source = "copula";
        cfg.data.n = 10000;
        cfg.data.copula = paper_copula_spec();
    } else if (name == "bernoulli-rbm") {
        rbm_defaults(ModelKind::bernoulli_rbm, 256);
        cfg.preprocess = {TransformKind::binarize16};
    } else if (name == "gaussian-rbm") {
        rbm_defaults(ModelKind::gaussian_rbm, 128);
        cfg.preprocess = {TransformKind::zscore};
    } else if (name == "conditional-rbm") {
        rbm_defaults(ModelKind::conditional_rbm, 128);
        m.lags = 20;
        cfg.preprocess = {TransformKind::normal_score};
    } else if (name == "wgan-paper") {
        wgan_defaults(ModelKind::wgan);
        m.mlp = gan::MlpSpec{};
        cfg.preprocess = {TransformKind::minmax};
    } else if (name == "cdcwgan-paper") {
        wgan_defaults(ModelKind::cdcwgan);
        m.cdcwgan = gan::CdcwganSpec{};
        cfg.preprocess = {TransformKind::minmax};
    } else {
        fail(ErrorCode::ConfigError, "unknown preset '" + name + "'");
    }
}

// --- parsing --------------------------------------------------------------

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    require(j.is_object(), ErrorCode::ConfigError, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        require(known, ErrorCode::ConfigError, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigError, "bad value for '" + where + "." + key + "'");
    }
}

inline Matrix read_matrix(const json& j, const std::string& where)
{
    std::vector<std::vector<double>> rows;
    try {
        rows = j.get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
        fail(ErrorCode::ConfigError, where + " must be a list of rows");
    }
    const auto n = static_cast<Index>(rows.size());
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        require(static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) == n, ErrorCode::ConfigError,
                where + " must be square");
        for (Index c = 0; c < n; ++c)
            m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
    }
    return m;
}

inline MarginalSpec read_marginal(const json& j, const std::string& where)
{
    check_keys(j, where, {"kind", "mu", "sigma", "nu", "weights", "mus", "sigmas"});
    std::string kind;
    read(j, "kind", kind, where);
    MarginalSpec s;
    if (kind == "normal")
        s.kind = MarginalKind::normal;
    else if (kind == "student_t")
        s.kind = MarginalKind::student_t;
    else if (kind == "gaussian_mixture")
        s.kind = MarginalKind::gaussian_mixture;
    else
        fail(ErrorCode::ConfigError, where + ".kind must be normal, student_t or gaussian_mixture");
    read(j, "mu", s.mu, where);
    read(j, "sigma", s.sigma, where);
    read(j, "nu", s.nu, where);
    read(j, "weights", s.weights, where);
    read(j, "mus", s.mus, where);
    read(j, "sigmas", s.sigmas, where);
    try {
        s.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, where + ": " + e.what());
    }
    return s;
}

inline void read_data(const json& j, DataSection& d)
{
    const std::string w = "data";
    check_keys(j, w, {"source", "n", "copula", "ar1", "path"});
    read(j, "source", d.source, w);
    read(j, "n", d.n, w);
    read(j, "path", d.path, w);
    if (j.contains("copula")) {
        const auto& c = j.at("copula");
        check_keys(c, "data.copula", {"correlation", "marginals"});
        if (c.contains("correlation"))
            d.copula.R = read_matrix(c.at("correlation"), "data.copula.correlation");
        if (c.contains("marginals")) {
            d.copula.marginals.clear();
            std::size_t i = 0;
            for (const auto& mj : c.at("marginals"))
                d.copula.marginals.push_back(read_marginal(mj, "data.copula.marginals[" + std::to_string(i++) + "]"));
        }
        d.copula.d = d.copula.R.rows();
    }
    if (j.contains("ar1")) {
        const auto& a = j.at("ar1");
        const std::string wa = "data.ar1";
        check_keys(a, wa, {"d", "phi", "corr", "ewma_span", "scale"});
        read(a, "d", d.ar1.d, wa);
        read(a, "phi", d.ar1.phi, wa);
        read(a, "ewma_span", d.ar1.ewma_span, wa);
        read(a, "scale", d.ar1.scale, wa);
        d.ar1.corr = a.contains("corr") ? read_matrix(a.at("corr"), "data.ar1.corr") : Matrix(Matrix::Identity(d.ar1.d, d.ar1.d));
    }
}

inline void read_model(const json& j, ModelSection& m)
{
    const std::string w = "model";
    check_keys(j, w,
               {"kind", "hidden", "lags", "weight_std", "learning_rate", "batch_size", "epochs", "cd_k", "linear_decay",
                "train_sigma", "mode", "noise_dim", "lambda_gp", "clip_c", "n_critic", "non_saturating",
                "generator_layers", "critic_layers", "alpha", "n_x", "n_t", "n_h", "critic_filters",
                "generator_filters", "dense_channels"});
    if (j.contains("kind")) {
        m.kind = model_kind_from(j.at("kind").get<std::string>());
        if (m.kind == ModelKind::gan && !j.contains("mode")) {
            m.gan.mode = gan::GanMode::minimax;
            m.gan.n_critic = 1;
        }
    }
    read(j, "hidden", m.hidden, w);
    read(j, "lags", m.lags, w);
    read(j, "weight_std", m.weight_std, w);
    // Shared optimizer settings feed whichever trainer the kind selects.
    double lr = is_rbm(m.kind) ? m.rbm.learning_rate : m.gan.learning_rate;
    Index batch = is_rbm(m.kind) ? m.rbm.batch_size : m.gan.batch_size;
    int epochs = is_rbm(m.kind) ? m.rbm.epochs : m.gan.epochs;
    read(j, "learning_rate", lr, w);
    read(j, "batch_size", batch, w);
    read(j, "epochs", epochs, w);
    m.rbm.learning_rate = m.gan.learning_rate = lr;
    m.rbm.batch_size = m.gan.batch_size = batch;
    m.rbm.epochs = m.gan.epochs = epochs;
    read(j, "cd_k", m.rbm.cd_k, w);
    read(j, "linear_decay", m.rbm.linear_decay, w);
    read(j, "train_sigma", m.rbm.train_sigma, w);
    if (j.contains("mode")) {
        m.gan.mode = io::gan_mode_from(j.at("mode").get<std::string>());
        if (!j.contains("n_critic"))
            m.gan.n_critic = gan::GanConfig::defaults(m.gan.mode).n_critic;
    }
    read(j, "noise_dim", m.gan.noise_dim, w);
    m.mlp.noise_dim = m.cdcwgan.noise_dim = m.gan.noise_dim;
    read(j, "lambda_gp", m.gan.lambda_gp, w);
    read(j, "clip_c", m.gan.clip_c, w);
    read(j, "n_critic", m.gan.n_critic, w);
    read(j, "non_saturating", m.gan.non_saturating, w);
    read(j, "generator_layers", m.mlp.generator_layers, w);
    read(j, "critic_layers", m.mlp.critic_layers, w);
    read(j, "alpha", m.mlp.alpha, w);
    m.cdcwgan.alpha = m.mlp.alpha;
    read(j, "n_x", m.cdcwgan.n_x, w);
    read(j, "n_t", m.cdcwgan.n_t, w);
    read(j, "n_h", m.cdcwgan.n_h, w);
    read(j, "critic_filters", m.cdcwgan.critic_filters, w);
    read(j, "generator_filters", m.cdcwgan.generator_filters, w);
    read(j, "dense_channels", m.cdcwgan.dense_channels, w);
}

} // namespace detail

/// Builds a config from defaults, then `preset` (if any), then the
/// document's own "preset" and sections. Unknown keys are rejected.
inline ExperimentConfig parse_config(const json& j, const std::optional<std::string>& preset = std::nullopt)
{
    using detail::check_keys;
    using detail::read;
    ExperimentConfig cfg;
    if (preset)
        apply_preset(cfg, *preset);
    check_keys(j, "", {"format_version", "master_seed", "presets", "data", "preprocess", "model", "generate", "backtest",
                       "evaluate"});
    if (j.contains("format_version"))
        require(j.at("format_version") == io::kFormatVersion, ErrorCode::VersionError,
                "config format_version must be " + std::to_string(io::kFormatVersion));
    if (j.contains("presets"))
        for (const auto& p : j.at("presets"))
            apply_preset(cfg, p.get<std::string>());
    read(j, "master_seed", cfg.master_seed, "");
    if (j.contains("data"))
        detail::read_data(j.at("data"), cfg.data);
    if (j.contains("preprocess")) {
        cfg.preprocess.clear();
        for (const auto& t : j.at("preprocess"))
            cfg.preprocess.push_back(io::transform_kind_from(t.get<std::string>()));
    }
    if (j.contains("model"))
        detail::read_model(j.at("model"), cfg.model);
    if (j.contains("generate")) {
        const auto& g = j.at("generate");
        check_keys(g, "generate", {"n", "horizon", "gibbs_steps", "readout"});
        read(g, "n", cfg.generate.n, "generate");
        read(g, "horizon", cfg.generate.horizon, "generate");
        read(g, "gibbs_steps", cfg.generate.gibbs_steps, "generate");
        if (g.contains("readout")) {
            const auto r = g.at("readout").get<std::string>();
            require(r == "mean" || r == "sampled", ErrorCode::ConfigError, "generate.readout must be mean or sampled");
            cfg.generate.readout = r == "mean" ? rbm::Readout::mean : rbm::Readout::sampled;
        }
    }
    if (j.contains("backtest")) {
        const auto& b = j.at("backtest");
        const std::string w = "backtest";
        check_keys(b, w, {"vol_window", "target_vol", "rebalance_every", "trading_days_per_year", "n_reps", "horizon",
                          "reference"});
        read(b, "vol_window", cfg.backtest.risk_parity.vol_window, w);
        read(b, "target_vol", cfg.backtest.risk_parity.target_vol, w);
        read(b, "rebalance_every", cfg.backtest.risk_parity.rebalance_every, w);
        read(b, "trading_days_per_year", cfg.backtest.risk_parity.trading_days_per_year, w);
        read(b, "n_reps", cfg.backtest.n_reps, w);
        read(b, "horizon", cfg.backtest.horizon, w);
        read(b, "reference", cfg.backtest.reference, w);
    }
    if (j.contains("evaluate")) {
        const auto& e = j.at("evaluate");
        check_keys(e, "evaluate", {"max_lag", "qq_points"});
        read(e, "max_lag", cfg.evaluate.max_lag, "evaluate");
        read(e, "qq_points", cfg.evaluate.qq_points, "evaluate");
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                                    const std::optional<std::string>& preset = std::nullopt)
{
    if (!path) {
        ExperimentConfig cfg;
        if (preset)
            apply_preset(cfg, *preset);
        cfg.validate();
        return cfg;
    }
    require(std::filesystem::exists(*path), ErrorCode::IoError, "config file not found: " + path->string());
    std::ifstream in(*path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ConfigError, path->string() + ": " + e.what());
    }
    return parse_config(j, preset);
}

} // namespace mktgen::config
