#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mktgen/commands.hpp"
#include "mktgen/model_io.hpp"

using namespace mktgen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "mktgen_model_io";
    fs::create_directories(dir);
    return dir / name;
}

SeriesFrame copula_frame(Index n, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    return sample_copula(paper_copula_spec(), n, rng);
}

io::ModelDocument round_trip(const io::ModelDocument& doc, const std::string& name)
{
    const auto path = scratch(name);
    io::save_document(path, doc);
    return io::load_document(path);
}

void expect_same_samples(const io::ModelDocument& a, const io::ModelDocument& b, const cli::GenerateRequest& req)
{
    RngStream r1(77, 0), r2(77, 0);
    const auto x = cli::generate_frame(a, req, r1);
    const auto y = cli::generate_frame(b, req, r2);
    ASSERT_EQ(x.rows(), y.rows());
    EXPECT_EQ(x.columns, y.columns);
    EXPECT_TRUE(x.data == y.data);
}

config::ExperimentConfig small(const std::string& preset)
{
    config::ExperimentConfig cfg;
    config::apply_preset(cfg, preset);
    cfg.master_seed = 11;
    cfg.model.rbm.epochs = 3;
    cfg.model.gan.epochs = 3;
    cfg.model.gan.batch_size = 64;
    cfg.model.hidden = 8;
    cfg.model.lags = 3;
    return cfg;
}

} // namespace

TEST(ModelIo, MatrixJsonIsRowMajorAndExact)
{
    Matrix m(2, 3);
    m << 1.0 / 3.0, -2.5e-300, 7.0, 0.1, 1e300, -0.0;
    const auto j = io::to_json(m);
    EXPECT_EQ(j.at("rows"), 2);
    EXPECT_EQ(j.at("data")[1], -2.5e-300);
    const io::json wrapper{{"m", io::json::parse(j.dump())}};
    const auto back = io::matrix_from(wrapper, "m");
    EXPECT_TRUE(back == m);
}

TEST(ModelIo, NonFiniteRejected)
{
    io::json j{{"m", {{"rows", 1}, {"cols", 1}, {"data", {std::numeric_limits<double>::quiet_NaN()}}}}};
    EXPECT_THROW(io::matrix_from(j, "m"), Error);
}

TEST(ModelIo, GaussianRbmRoundTrip)
{
    const auto doc = cli::train_model(small("gaussian-rbm"), copula_frame(600, 1));
    const auto back = round_trip(doc, "grbm.json");
    EXPECT_EQ(back.kind, "rbm");
    EXPECT_TRUE(back.rbm().W == doc.rbm().W);
    EXPECT_EQ(back.transforms.size(), 1u);
    cli::GenerateRequest req;
    req.n = 25;
    req.gibbs_steps = 5;
    expect_same_samples(doc, back, req);
}

TEST(ModelIo, BernoulliRbmRoundTrip)
{
    auto cfg = small("bernoulli-rbm");
    const auto doc = cli::train_model(cfg, copula_frame(300, 2));
    EXPECT_EQ(doc.rbm().m, 64);
    const auto back = round_trip(doc, "brbm.json");
    cli::GenerateRequest req;
    req.n = 10;
    req.gibbs_steps = 3;
    expect_same_samples(doc, back, req);
}

TEST(ModelIo, ConditionalRbmRoundTrip)
{
    const auto data = copula_frame(400, 3);
    const auto doc = cli::train_model(small("conditional-rbm"), data);
    EXPECT_EQ(doc.rbm().d, 3);
    const auto back = round_trip(doc, "crbm.json");
    cli::GenerateRequest req;
    req.horizon = 12;
    req.gibbs_steps = 4;
    req.seed_window = data;
    expect_same_samples(doc, back, req);
}

TEST(ModelIo, WganRoundTrip)
{
    auto cfg = small("wgan-paper");
    cfg.model.mlp.generator_layers = {16, 4};
    cfg.model.mlp.critic_layers = {8, 1};
    const auto doc = cli::train_model(cfg, copula_frame(200, 4));
    const auto back = round_trip(doc, "wgan.json");
    EXPECT_EQ(back.kind, "wgan");
    EXPECT_EQ(back.gan().mode, gan::GanMode::wgan_gp);
    cli::GenerateRequest req;
    req.n = 30;
    expect_same_samples(doc, back, req);
}

TEST(ModelIo, CdcwganRoundTripKeepsGeometry)
{
    auto cfg = small("cdcwgan-paper");
    cfg.model.cdcwgan.critic_filters = {4, 4};
    cfg.model.cdcwgan.dense_channels = 6;
    cfg.model.cdcwgan.generator_filters = {5};
    cfg.model.gan.noise_dim = 8;
    const auto full = copula_frame(120, 5);
    const SeriesFrame data({"a", "b"}, full.data.leftCols(2));
    const auto doc = cli::train_model(cfg, data);
    const auto back = round_trip(doc, "cdcwgan.json");
    const auto& g0 = doc.gan().generator;
    const auto& g1 = back.gan().generator;
    ASSERT_EQ(g0.size(), g1.size());
    for (std::size_t i = 0; i < g0.size(); ++i) {
        EXPECT_EQ(g0.layers()[i].kind, g1.layers()[i].kind);
        EXPECT_EQ(g0.layers()[i].in_channels, g1.layers()[i].in_channels);
        EXPECT_EQ(g0.layers()[i].in_length, g1.layers()[i].in_length);
    }
    EXPECT_EQ(g1.output_channels(), g0.output_channels());
    EXPECT_EQ(g1.output_length(), g0.output_length());
    cli::GenerateRequest req;
    req.horizon = 13;
    req.seed_window = data;
    expect_same_samples(doc, back, req);
}

TEST(ModelIo, VersionMismatch)
{
    const auto doc = cli::train_model(small("gaussian-rbm"), copula_frame(100, 6));
    auto j = io::to_json(doc);
    j["format_version"] = io::kFormatVersion + 1;
    try {
        io::document_from_json(j);
        FAIL() << "expected VersionError";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::VersionError);
    }
}

TEST(ModelIo, BinarizeMustBeLast)
{
    auto cfg = small("bernoulli-rbm");
    const auto doc = cli::train_model(cfg, copula_frame(100, 7));
    auto j = io::to_json(doc);
    j["transforms"].push_back(io::to_json(doc.transforms.front()));
    EXPECT_THROW(io::document_from_json(j), Error);
}

TEST(ModelIo, SaveIsAtomic)
{
    const auto path = scratch("atomic.json");
    const auto doc = cli::train_model(small("gaussian-rbm"), copula_frame(100, 8));
    io::save_document(path, doc);
    EXPECT_TRUE(fs::exists(path));
    EXPECT_FALSE(fs::exists(fs::path(path.string() + ".tmp")));
}
