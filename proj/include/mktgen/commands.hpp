#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mktgen/backtest.hpp"
#include "mktgen/config.hpp"
#include "mktgen/datagen.hpp"
#include "mktgen/evaluate.hpp"
#include "mktgen/frame.hpp"
#include "mktgen/gan.hpp"
#include "mktgen/model_io.hpp"
#include "mktgen/preprocess.hpp"
#include "mktgen/rbm.hpp"

namespace mktgen::cli {

using config::ExperimentConfig;
using config::ModelKind;
namespace fs = std::filesystem;

/// `path` with its extension replaced, e.g. out.csv -> out.md.
inline fs::path sibling(const fs::path& path, const std::string& extension)
{
    auto p = path;
    p.replace_extension(extension);
    return p;
}

inline fs::path suffixed(const fs::path& path, const std::string& suffix)
{
    return path.parent_path() / (path.stem().string() + suffix + path.extension().string());
}

inline void write_text(const fs::path& path, const std::string& text)
{
    write_atomically(path, [&](std::ostream& out) { out << text; });
}

// --- simulate-data --------------------------------------------------------

inline SeriesFrame simulate(const ExperimentConfig& cfg)
{
    const auto& d = cfg.data;
    RngStream rng(cfg.master_seed, 0);
    if (d.source == "copula")
        return sample_copula(d.copula, d.n, rng);
    if (d.source == "ar1") {
        if (d.n == 0)
            return SeriesFrame::from_matrix(Matrix(0, d.ar1.d), "r");
        return ar1_ewma_process(d.ar1.d, d.ar1.phi, d.ar1.corr, d.n, d.ar1.ewma_span, rng, d.ar1.scale);
    }
    fail(ErrorCode::UsageError, "simulate-data needs data.source copula or ar1");
}

inline void cmd_simulate_data(const ExperimentConfig& cfg, const fs::path& out)
{
    write_csv_file(out, simulate(cfg));
}

// --- transform chain ------------------------------------------------------

/// Fitted preprocessing. `frame` holds the real-valued output of every
/// step except a trailing binarize16, whose bit matrix goes to `bits`.
struct Prepared {
    std::vector<TransformSpec> specs;
    SeriesFrame frame;
    std::optional<Matrix> bits;
};

inline Prepared fit_chain(const std::vector<TransformKind>& kinds, const SeriesFrame& data)
{
    Prepared p;
    p.frame = data;
    for (const auto kind : kinds) {
        if (kind == TransformKind::binarize16) {
            auto spec = fit_binarize16(p.frame);
            p.bits = binarize16(p.frame, spec);
            p.specs.push_back(std::move(spec));
            break;
        }
        auto [spec, out] = fit_apply(kind, p.frame);
        p.specs.push_back(std::move(spec));
        p.frame = std::move(out);
    }
    return p;
}

/// Applies the real-valued steps of a fitted chain to new data.
inline SeriesFrame apply_chain(const std::vector<TransformSpec>& specs, SeriesFrame frame)
{
    for (const auto& s : specs) {
        require(s.kind != TransformKind::binarize16, ErrorCode::UsageError, "cannot seed a binary model");
        frame = apply_transform(frame, s);
    }
    return frame;
}

/// Maps model output back to data units. `values` are bits when the chain
/// ends in binarize16.
inline SeriesFrame invert_chain(const std::vector<TransformSpec>& specs, const Matrix& values,
                                const std::vector<std::string>& columns)
{
    std::size_t k = specs.size();
    SeriesFrame frame;
    if (k > 0 && specs.back().kind == TransformKind::binarize16) {
        frame = debinarize16(values, specs.back(), columns);
        --k;
    } else {
        frame = SeriesFrame(columns, values);
    }
    while (k > 0)
        frame = invert_transform(frame, specs[--k]);
    return frame;
}

// --- train ----------------------------------------------------------------

inline io::ModelDocument train_model(const ExperimentConfig& cfg, const SeriesFrame& data)
{
    const auto& mc = cfg.model;
    const auto prepared = fit_chain(cfg.preprocess, data);
    io::ModelDocument doc;
    doc.transforms = prepared.specs;
    doc.columns = data.columns;
    const Matrix& x = prepared.frame.data;
    RngStream init(cfg.master_seed, 1);

    if (config::is_rbm(mc.kind)) {
        doc.kind = "rbm";
        auto tc = mc.rbm;
        tc.seed = cfg.master_seed;
        if (mc.kind == ModelKind::bernoulli_rbm) {
            const Matrix& bits = *prepared.bits;
            auto model = rbm::RbmModel::initialize(rbm::RbmKind::bernoulli, bits.cols(), mc.hidden, 0, init, mc.weight_std);
            doc.model = rbm::train(std::move(model), bits, tc).model;
        } else if (mc.kind == ModelKind::gaussian_rbm) {
            auto model = rbm::RbmModel::initialize(rbm::RbmKind::gaussian, x.cols(), mc.hidden, 0, init, mc.weight_std);
            doc.model = rbm::train(std::move(model), x, tc).model;
        } else {
            require(x.rows() > mc.lags, ErrorCode::TooFewRows,
                    "conditional RBM needs more than " + std::to_string(mc.lags) + " rows");
            const auto pairs = rbm::conditional_pairs(x, mc.lags);
            auto model =
                rbm::RbmModel::initialize(rbm::RbmKind::conditional, x.cols(), mc.hidden, mc.lags, init, mc.weight_std);
            doc.model = rbm::train(std::move(model), pairs.visible, tc, rbm::History(pairs.history)).model;
        }
        return doc;
    }

    auto gc = mc.gan;
    gc.seed = cfg.master_seed;
    if (mc.kind == ModelKind::cdcwgan) {
        doc.kind = "cdcwgan";
        auto spec = mc.cdcwgan;
        spec.n_x = x.cols();
        spec.noise_dim = gc.noise_dim;
        doc.model = gan::train_cdcwgan(x, spec, gc).model;
        return doc;
    }
    doc.kind = mc.kind == ModelKind::gan ? "gan" : "wgan";
    auto spec = mc.mlp;
    require(!spec.generator_layers.empty() && !spec.critic_layers.empty(), ErrorCode::ConfigError,
            "generator_layers and critic_layers must be non-empty");
    spec.generator_layers.back() = x.cols();
    spec.noise_dim = gc.noise_dim;
    auto model = gan::build_mlp_gan(spec, gc.mode, init);
    doc.model = gan::train_gan(std::move(model), x, gc).model;
    return doc;
}

inline void cmd_train(const ExperimentConfig& cfg, const fs::path& data_path, const fs::path& out)
{
    io::save_document(out, train_model(cfg, read_csv_file(data_path)));
}

// --- generate -------------------------------------------------------------

struct GenerateRequest {
    Index n = 0;       // rows for unconditional models
    Index horizon = 0; // rows for conditional (series) models
    int gibbs_steps = 1000;
    rbm::Readout readout = rbm::Readout::sampled;
    std::optional<SeriesFrame> seed_window; // data units, oldest row first
};

inline bool is_conditional(const io::ModelDocument& doc)
{
    if (doc.is_rbm())
        return doc.rbm().kind == rbm::RbmKind::conditional;
    return doc.gan().condition.kind != gan::ConditionKind::none;
}

/// Last `rows` transformed rows of the seed window.
inline Matrix seed_block(const io::ModelDocument& doc, const SeriesFrame& window, Index rows)
{
    require(window.cols() == static_cast<Index>(doc.columns.size()), ErrorCode::ShapeError,
            "seed window has " + std::to_string(window.cols()) + " columns, model expects " +
                std::to_string(doc.columns.size()));
    require(window.rows() >= rows, ErrorCode::TooFewRows, "seed window needs at least " + std::to_string(rows) + " rows");
    const auto t = apply_chain(doc.transforms, window);
    return t.data.bottomRows(rows);
}

/// Samples from a trained model and maps the result to data units.
inline SeriesFrame generate_frame(const io::ModelDocument& doc, const GenerateRequest& req, RngStream& rng)
{
    Matrix values;
    if (is_conditional(doc)) {
        require(req.seed_window.has_value(), ErrorCode::UsageError, "conditional model requires --seed-window");
        require(req.horizon >= 0, ErrorCode::UsageError, "horizon must be >= 0");
        if (doc.is_rbm()) {
            const auto& m = doc.rbm();
            values = rbm::generate_series(m, seed_block(doc, *req.seed_window, m.d), req.horizon, req.gibbs_steps, rng,
                                           req.readout);
        } else {
            const auto& g = doc.gan();
            values = gan::generate_series_gan(g, seed_block(doc, *req.seed_window, g.condition.n_h), req.horizon, rng);
        }
    } else {
        require(req.n >= 0, ErrorCode::UsageError, "n must be >= 0");
        if (doc.is_rbm())
            values = rbm::sample(doc.rbm(), req.n, req.gibbs_steps, rng, std::nullopt, req.readout);
        else
            values = gan::generate(doc.gan(), req.n, rng);
    }
    return invert_chain(doc.transforms, values, doc.columns);
}

inline void cmd_generate(const fs::path& model_path, const GenerateRequest& req, std::uint64_t seed, const fs::path& out)
{
    const auto doc = io::load_document(model_path);
    RngStream rng(seed, 0);
    write_csv_file(out, generate_frame(doc, req, rng));
}

// --- mc-backtest ----------------------------------------------------------

struct McSource {
    std::optional<fs::path> model;
    std::optional<fs::path> bootstrap;
    GenerateRequest request; // n and horizon are replaced by the replication length
};

struct McReport {
    McResult result;
    std::map<std::string, double> reference;
    double mean_abs_acf1 = 0.0;
    Index rows_per_rep = 0;
    std::string source;
};

inline McReport run_mc(const ExperimentConfig& cfg, const McSource& src, Index reps)
{
    require(src.model.has_value() != src.bootstrap.has_value(), ErrorCode::UsageError,
            "mc-backtest needs exactly one source: a model path or --bootstrap data.csv");
    require(reps >= 1, ErrorCode::UsageError, "--reps must be >= 1");
    McReport report;
    report.reference = cfg.backtest.reference;
    std::function<SeriesFrame(Index)> source;
    std::optional<SeriesFrame> data;
    std::optional<io::ModelDocument> doc;
    if (src.bootstrap) {
        data = read_csv_file(*src.bootstrap);
        report.rows_per_rep = cfg.backtest.horizon > 0 ? cfg.backtest.horizon : data->rows();
        report.source = "bootstrap of " + src.bootstrap->filename().string();
        if (report.reference.empty()) {
            const auto real = run_backtest(*data, cfg.backtest.risk_parity).stats;
            for (const auto& name : stat_names())
                report.reference[name] = stat_value(real, name);
        }
        source = [&](Index r) {
            RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(r));
            return bootstrap_resample(*data, report.rows_per_rep, rng);
        };
    } else {
        doc = io::load_document(*src.model);
        report.rows_per_rep = src.request.horizon;
        report.source = "model " + src.model->filename().string();
        source = [&](Index r) {
            RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(r));
            auto req = src.request;
            req.n = report.rows_per_rep;
            req.horizon = report.rows_per_rep;
            return generate_frame(*doc, req, rng);
        };
    }
    report.result = mc_distribution(source, reps, cfg.backtest.risk_parity);
    double acc = 0.0;
    for (double a : report.result.strategy_acf1)
        acc += std::abs(a);
    report.mean_abs_acf1 = acc / static_cast<double>(report.result.strategy_acf1.size());
    return report;
}

inline std::string mc_csv(const McReport& report)
{
    std::ostringstream out;
    const auto& names = stat_names();
    for (std::size_t j = 0; j < names.size(); ++j)
        out << (j ? "," : "") << names[j];
    out << '\n';
    for (const auto& s : report.result.replications) {
        for (std::size_t j = 0; j < names.size(); ++j)
            out << (j ? "," : "") << format_double(stat_value(s, names[j]));
        out << '\n';
    }
    return out.str();
}

inline std::string mc_markdown(const McReport& report)
{
    std::ostringstream out;
    out << "# Monte-Carlo backtest\n\n";
    out << "- source: " << report.source << "\n";
    out << "- replications: " << report.result.replications.size() << "\n";
    out << "- rows per replication: " << report.rows_per_rep << "\n";
    out << "- mean |lag-1 ACF| of strategy returns: " << format_double(report.mean_abs_acf1) << "\n\n";
    out << "| stat | p1 | p25 | p50 | p75 | p99 | real | quantile_of(real) |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& name : stat_names()) {
        const auto& dist = report.result.distributions.at(name);
        out << "| " << name;
        for (double p : {0.01, 0.25, 0.50, 0.75, 0.99})
            out << " | " << format_double(dist.quantile(p));
        const auto it = report.reference.find(name);
        if (it != report.reference.end())
            out << " | " << format_double(it->second) << " | " << format_double(quantile_of(dist, it->second)) << " |\n";
        else
            out << " | | |\n";
    }
    return out.str();
}

inline McReport cmd_mc_backtest(const ExperimentConfig& cfg, const McSource& src, Index reps, const fs::path& out)
{
    auto report = run_mc(cfg, src, reps);
    write_text(out, mc_csv(report));
    write_text(sibling(out, ".md"), mc_markdown(report));
    return report;
}

// --- evaluate -------------------------------------------------------------

struct MetricRow {
    std::string metric;
    std::string column;
    std::optional<double> real, synthetic, value;
};

/// Long-format metric table: marginal summaries and their difference,
/// per-column W1, correlation differences and ACF up to max_lag.
inline std::vector<MetricRow> evaluation_metrics(const SeriesFrame& real, const SeriesFrame& synth,
                                                 const config::EvaluateSection& ec)
{
    require(real.cols() == synth.cols(), ErrorCode::ShapeError,
            "column count differs: " + std::to_string(real.cols()) + " vs " + std::to_string(synth.cols()));
    std::vector<MetricRow> rows;
    const auto sr = summary(real);
    const auto ss = summary(synth);
    const auto add = [&](const std::string& metric, const std::string& col, double a, double b) {
        rows.push_back({metric, col, a, b, b - a});
    };
    for (Index j = 0; j < real.cols(); ++j) {
        const auto& col = real.columns[static_cast<std::size_t>(j)];
        add("mean", col, sr.mean(j), ss.mean(j));
        add("std", col, sr.std(j), ss.std(j));
        add("p1", col, sr.p1(j), ss.p1(j));
        add("p99", col, sr.p99(j), ss.p99(j));
        rows.push_back({"w1", col, std::nullopt, std::nullopt, wasserstein1_1d(real.data.col(j), synth.data.col(j))});
    }
    const Matrix cr = corr_matrix(real), cs = corr_matrix(synth);
    for (Index i = 0; i < real.cols(); ++i)
        for (Index j = i + 1; j < real.cols(); ++j)
            add("corr", real.columns[static_cast<std::size_t>(i)] + ":" + real.columns[static_cast<std::size_t>(j)],
                cr(i, j), cs(i, j));
    const Index lag = std::min({ec.max_lag, real.rows() - 3, synth.rows() - 3});
    for (Index j = 0; lag >= 1 && j < real.cols(); ++j) {
        const auto ar = acf(real.data.col(j), lag);
        const auto as = acf(synth.data.col(j), lag);
        for (Index k = 1; k <= lag; ++k)
            add("acf" + std::to_string(k), real.columns[static_cast<std::size_t>(j)], ar.estimate(k - 1), as.estimate(k - 1));
    }
    return rows;
}

inline std::string metrics_csv(const std::vector<MetricRow>& rows)
{
    std::ostringstream out;
    out << "metric,column,real,synthetic,value\n";
    const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows)
        out << r.metric << ',' << r.column << ',' << cell(r.real) << ',' << cell(r.synthetic) << ',' << cell(r.value)
            << '\n';
    return out.str();
}

inline std::string qq_csv(const SeriesFrame& real, const SeriesFrame& synth, Index k)
{
    std::ostringstream out;
    out << "column,real,synthetic\n";
    for (Index j = 0; j < real.cols(); ++j) {
        const Matrix q = qq_points(real.data.col(j), synth.data.col(j), k);
        for (Index i = 0; i < q.rows(); ++i)
            out << real.columns[static_cast<std::size_t>(j)] << ',' << format_double(q(i, 0)) << ','
                << format_double(q(i, 1)) << '\n';
    }
    return out.str();
}

inline std::string metrics_markdown(const std::vector<MetricRow>& rows, const fs::path& real_path,
                                    const fs::path& synth_path)
{
    std::ostringstream out;
    out << "# Evaluation\n\n";
    out << "- real: " << real_path.filename().string() << "\n";
    out << "- synthetic: " << synth_path.filename().string() << "\n\n";
    out << "| metric | column | real | synthetic | value |\n|---|---|---|---|---|\n";
    const auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows) {
        if (r.metric.rfind("acf", 0) == 0 && r.metric != "acf1")
            continue;
        out << "| " << r.metric << " | " << r.column << " | " << cell(r.real) << " | " << cell(r.synthetic) << " | "
            << cell(r.value) << " |\n";
    }
    return out.str();
}

inline void cmd_evaluate(const ExperimentConfig& cfg, const fs::path& real_path, const fs::path& synth_path,
                         const fs::path& out)
{
    const auto real = read_csv_file(real_path);
    const auto synth = read_csv_file(synth_path);
    const auto rows = evaluation_metrics(real, synth, cfg.evaluate);
    write_text(out, metrics_csv(rows));
    write_text(suffixed(out, "_qq"), qq_csv(real, synth, cfg.evaluate.qq_points));
    write_text(sibling(out, ".md"), metrics_markdown(rows, real_path, synth_path));
}

} // namespace mktgen::cli
