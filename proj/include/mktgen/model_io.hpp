#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mktgen/core.hpp"
#include "mktgen/frame.hpp"
#include "mktgen/gan.hpp"
#include "mktgen/nn.hpp"
#include "mktgen/preprocess.hpp"
#include "mktgen/rbm.hpp"

namespace mktgen::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

// --- primitives -----------------------------------------------------------

inline json to_json(const Matrix& m)
{
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            flat.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

inline json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

template <typename T>
T field(const json& j, const std::string& key)
{
    require(j.is_object() && j.contains(key), ErrorCode::InvalidValue, "missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidValue, "field '" + key + "': " + e.what());
    }
}

inline Matrix matrix_from(const json& j, const std::string& key)
{
    require(j.contains(key), ErrorCode::InvalidValue, "missing field '" + key + "'");
    const json& m = j.at(key);
    const auto rows = field<Index>(m, "rows");
    const auto cols = field<Index>(m, "cols");
    const auto flat = field<std::vector<double>>(m, "data");
    require(rows >= 0 && cols >= 0 && static_cast<Index>(flat.size()) == rows * cols, ErrorCode::ShapeError,
            "matrix '" + key + "' has " + std::to_string(flat.size()) + " values for shape " + std::to_string(rows) +
                "x" + std::to_string(cols));
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index c = 0; c < cols; ++c)
            out(i, c) = flat[static_cast<std::size_t>(i * cols + c)];
    require(out.allFinite(), ErrorCode::InvalidValue, "matrix '" + key + "' has non-finite entries");
    return out;
}

inline Vector vector_from(const json& j, const std::string& key)
{
    const auto flat = field<std::vector<double>>(j, key);
    Vector v = Eigen::Map<const Vector>(flat.data(), static_cast<Index>(flat.size()));
    require(v.allFinite(), ErrorCode::InvalidValue, "vector '" + key + "' has non-finite entries");
    return v;
}

// --- transforms -----------------------------------------------------------

inline TransformKind transform_kind_from(const std::string& name)
{
    for (auto k : {TransformKind::minmax, TransformKind::zscore, TransformKind::normal_score, TransformKind::binarize16})
        if (name == to_string(k))
            return k;
    fail(ErrorCode::ConfigError, "unknown transform '" + name + "'");
}

inline json to_json(const TransformSpec& t)
{
    json j{{"kind", to_string(t.kind)}};
    switch (t.kind) {
    case TransformKind::minmax:
    case TransformKind::binarize16:
        j["lower"] = to_json(t.lower);
        j["upper"] = to_json(t.upper);
        j["epsilon"] = t.epsilon;
        break;
    case TransformKind::zscore:
        j["mean"] = to_json(t.mean);
        j["stdev"] = to_json(t.stdev);
        break;
    case TransformKind::normal_score: j["reference"] = t.reference; break;
    }
    return j;
}

inline TransformSpec transform_from_json(const json& j)
{
    TransformSpec t;
    t.kind = transform_kind_from(field<std::string>(j, "kind"));
    switch (t.kind) {
    case TransformKind::minmax:
    case TransformKind::binarize16:
        t.lower = vector_from(j, "lower");
        t.upper = vector_from(j, "upper");
        t.epsilon = field<double>(j, "epsilon");
        require(t.lower.size() == t.upper.size(), ErrorCode::ShapeError, "transform bounds differ in length");
        break;
    case TransformKind::zscore:
        t.mean = vector_from(j, "mean");
        t.stdev = vector_from(j, "stdev");
        require(t.mean.size() == t.stdev.size(), ErrorCode::ShapeError, "zscore moments differ in length");
        break;
    case TransformKind::normal_score:
        t.reference = field<std::vector<std::vector<double>>>(j, "reference");
        for (const auto& col : t.reference)
            require(col.size() >= 2 && std::is_sorted(col.begin(), col.end()), ErrorCode::InvalidValue,
                    "normal_score reference columns must be sorted with at least two values");
        break;
    }
    return t;
}

// --- networks -------------------------------------------------------------

inline nn::ActivationKind activation_kind_from(const std::string& name)
{
    using nn::ActivationKind;
    for (auto k : {ActivationKind::identity, ActivationKind::leaky_relu, ActivationKind::sigmoid, ActivationKind::tanh})
        if (name == nn::to_string(k))
            return k;
    fail(ErrorCode::InvalidValue, "unknown activation '" + name + "'");
}

inline nn::LayerKind layer_kind_from(const std::string& name)
{
    using nn::LayerKind;
    for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::tconv1d})
        if (name == nn::to_string(k))
            return k;
    fail(ErrorCode::InvalidValue, "unknown layer kind '" + name + "'");
}

inline json to_json(const nn::LayerStack& stack, Index in_channels, Index in_length)
{
    json layers = json::array();
    for (const auto& l : stack.layers())
        layers.push_back({{"kind", nn::to_string(l.kind)},
                          {"activation", nn::to_string(l.activation.kind)},
                          {"alpha", l.activation.alpha},
                          {"in_channels", l.in_channels},
                          {"in_length", l.in_length},
                          {"out_channels", l.out_channels},
                          {"kernel", l.kernel},
                          {"stride", l.stride},
                          {"padding", l.padding},
                          {"weight", to_json(l.weight)},
                          {"bias", to_json(l.bias)}});
    return {{"in_channels", in_channels},
            {"in_length", in_length},
            {"out_channels", stack.output_channels()},
            {"out_length", stack.output_length()},
            {"layers", layers}};
}

/// Input geometry of a stack: the first layer's, or flat when empty.
inline std::pair<Index, Index> input_geometry(const nn::LayerStack& stack)
{
    if (stack.size() == 0)
        return {stack.input_size(), 1};
    const auto& first = stack.layers().front();
    return {first.in_channels, first.in_length};
}

inline json to_json(const nn::LayerStack& stack)
{
    const auto [c, l] = input_geometry(stack);
    return to_json(stack, c, l);
}

inline nn::LayerStack stack_from_json(const json& j)
{
    nn::LayerStack stack(field<Index>(j, "in_channels"), field<Index>(j, "in_length"));
    for (const auto& lj : field<json>(j, "layers")) {
        const nn::Activation act{activation_kind_from(field<std::string>(lj, "activation")), field<double>(lj, "alpha")};
        const auto kind = layer_kind_from(field<std::string>(lj, "kind"));
        const auto c_in = field<Index>(lj, "in_channels");
        const auto len = field<Index>(lj, "in_length");
        const auto c_out = field<Index>(lj, "out_channels");
        if (c_in != stack.output_channels() || len != stack.output_length())
            stack.reshape(c_in, len);
        nn::Layer layer;
        switch (kind) {
        case nn::LayerKind::dense: layer = nn::Layer::dense(c_in * len, c_out, act); break;
        case nn::LayerKind::conv1d:
            layer = nn::Layer::conv1d(c_in, len, c_out, field<Index>(lj, "kernel"), field<Index>(lj, "stride"),
                                      field<Index>(lj, "padding"), act);
            break;
        case nn::LayerKind::tconv1d:
            layer = nn::Layer::tconv1d(c_in, len, c_out, field<Index>(lj, "kernel"), field<Index>(lj, "stride"),
                                       field<Index>(lj, "padding"), act);
            break;
        }
        Matrix w = matrix_from(lj, "weight");
        Vector b = vector_from(lj, "bias");
        require(w.rows() == layer.weight.rows() && w.cols() == layer.weight.cols() && b.size() == layer.bias.size(),
                ErrorCode::ShapeError, "layer parameters do not match the declared geometry");
        layer.weight = std::move(w);
        layer.bias = std::move(b);
        stack.push(std::move(layer));
    }
    const auto oc = field<Index>(j, "out_channels");
    const auto ol = field<Index>(j, "out_length");
    if (oc != stack.output_channels() || ol != stack.output_length())
        stack.reshape(oc, ol);
    return stack;
}

// --- models ---------------------------------------------------------------

inline rbm::RbmKind rbm_kind_from(const std::string& name)
{
    using rbm::RbmKind;
    for (auto k : {RbmKind::bernoulli, RbmKind::gaussian, RbmKind::conditional})
        if (name == rbm::to_string(k))
            return k;
    fail(ErrorCode::InvalidValue, "unknown RBM kind '" + name + "'");
}

inline json to_json(const rbm::RbmModel& m)
{
    return {{"rbm_kind", rbm::to_string(m.kind)},
            {"m", m.m},
            {"n", m.n},
            {"d", m.d},
            {"a", to_json(m.a)},
            {"b", to_json(m.b)},
            {"W", to_json(m.W)},
            {"sigma", to_json(m.sigma)},
            {"P", to_json(m.P)},
            {"Q", to_json(m.Q)}};
}

inline rbm::RbmModel rbm_from_json(const json& j)
{
    rbm::RbmModel m;
    m.kind = rbm_kind_from(field<std::string>(j, "rbm_kind"));
    m.m = field<Index>(j, "m");
    m.n = field<Index>(j, "n");
    m.d = field<Index>(j, "d");
    m.a = vector_from(j, "a");
    m.b = vector_from(j, "b");
    m.W = matrix_from(j, "W");
    m.sigma = vector_from(j, "sigma");
    m.P = matrix_from(j, "P");
    m.Q = matrix_from(j, "Q");
    m.validate();
    return m;
}

inline gan::GanMode gan_mode_from(const std::string& name)
{
    using gan::GanMode;
    for (auto k : {GanMode::minimax, GanMode::wgan_gp, GanMode::wgan_clip})
        if (name == gan::to_string(k))
            return k;
    fail(ErrorCode::ConfigError, "unknown GAN mode '" + name + "'");
}

inline json to_json(const gan::ConditionSpec& c)
{
    const char* kind = c.kind == gan::ConditionKind::none          ? "none"
                       : c.kind == gan::ConditionKind::label_vector ? "label_vector"
                                                                    : "history_window";
    return {{"kind", kind}, {"label_dim", c.label_dim}, {"n_h", c.n_h}, {"n_t", c.n_t}, {"n_x", c.n_x}};
}

inline gan::ConditionSpec condition_from_json(const json& j)
{
    const auto kind = field<std::string>(j, "kind");
    gan::ConditionSpec c;
    if (kind == "none")
        c.kind = gan::ConditionKind::none;
    else if (kind == "label_vector")
        c.kind = gan::ConditionKind::label_vector;
    else if (kind == "history_window")
        c.kind = gan::ConditionKind::history_window;
    else
        fail(ErrorCode::InvalidValue, "unknown condition kind '" + kind + "'");
    c.label_dim = field<Index>(j, "label_dim");
    c.n_h = field<Index>(j, "n_h");
    c.n_t = field<Index>(j, "n_t");
    c.n_x = field<Index>(j, "n_x");
    return c;
}

inline json to_json(const gan::GanModel& m)
{
    return {{"mode", gan::to_string(m.mode)},
            {"condition", to_json(m.condition)},
            {"generator", to_json(m.generator)},
            {"critic", to_json(m.critic)}};
}

inline gan::GanModel gan_from_json(const json& j)
{
    gan::GanModel m;
    m.mode = gan_mode_from(field<std::string>(j, "mode"));
    m.condition = condition_from_json(field<json>(j, "condition"));
    m.generator = stack_from_json(field<json>(j, "generator"));
    m.critic = stack_from_json(field<json>(j, "critic"));
    m.validate();
    return m;
}

/// A trained model with the preprocessing chain fitted on its training data.
/// Transforms are applied in order; binarize16 may only appear last.
struct ModelDocument {
    std::string kind; // "rbm", "gan", "wgan" or "cdcwgan"
    std::vector<TransformSpec> transforms;
    std::vector<std::string> columns;
    std::variant<rbm::RbmModel, gan::GanModel> model;

    bool is_rbm() const noexcept { return std::holds_alternative<rbm::RbmModel>(model); }
    const rbm::RbmModel& rbm() const { return std::get<rbm::RbmModel>(model); }
    const gan::GanModel& gan() const { return std::get<gan::GanModel>(model); }
};

inline json to_json(const ModelDocument& doc)
{
    json transforms = json::array();
    for (const auto& t : doc.transforms)
        transforms.push_back(to_json(t));
    json j{{"format_version", kFormatVersion}, {"kind", doc.kind}, {"columns", doc.columns}, {"transforms", transforms}};
    if (doc.is_rbm())
        j["rbm"] = to_json(doc.rbm());
    else
        j["gan"] = to_json(doc.gan());
    return j;
}

inline ModelDocument document_from_json(const json& j)
{
    require(j.is_object(), ErrorCode::InvalidValue, "model document must be a JSON object");
    const auto version = field<int>(j, "format_version");
    require(version == kFormatVersion, ErrorCode::VersionError,
            "model format_version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kFormatVersion) + ")");
    ModelDocument doc;
    doc.kind = field<std::string>(j, "kind");
    doc.columns = field<std::vector<std::string>>(j, "columns");
    for (const auto& t : field<json>(j, "transforms"))
        doc.transforms.push_back(transform_from_json(t));
    for (std::size_t i = 0; i + 1 < doc.transforms.size(); ++i)
        require(doc.transforms[i].kind != TransformKind::binarize16, ErrorCode::InvalidValue,
                "binarize16 must be the last transform");
    if (doc.kind == "rbm")
        doc.model = rbm_from_json(field<json>(j, "rbm"));
    else if (doc.kind == "gan" || doc.kind == "wgan" || doc.kind == "cdcwgan")
        doc.model = gan_from_json(field<json>(j, "gan"));
    else
        fail(ErrorCode::InvalidValue, "unknown model kind '" + doc.kind + "'");
    return doc;
}

inline void save_document(const std::filesystem::path& path, const ModelDocument& doc)
{
    const std::string text = to_json(doc).dump(1) + "\n";
    write_atomically(path, [&](std::ostream& out) { out << text; });
}

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::InvalidValue, path.string() + ": " + e.what());
    }
}

inline ModelDocument load_document(const std::filesystem::path& path)
{
    return document_from_json(read_json_file(path));
}

} // namespace mktgen::io
