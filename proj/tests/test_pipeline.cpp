#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "lungfuse/pipeline.hpp"
#include "support.hpp"

using namespace lungfuse;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const fs::path& out) {
    PipelineConfig c;
    c.phantom.generator.n_patients = 20;
    c.phantom.generator.image_size = 32;
    c.denoise.train_images = 4;
    c.denoise.epochs = 2;
    c.tabular.booster.n_estimators = 5;
    c.classify.epochs = 20;
    c.classify.batch_size = 8;
    c.evaluate.k = 4;
    c.run.output_dir = out.string();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
    const auto c = parse_pipeline_config(nlohmann::json::object());
    EXPECT_EQ(to_json(c), to_json(PipelineConfig{}));
}

TEST(Config, UnknownKeyIsNamed) {
    const auto j = nlohmann::json::parse(R"({"classify": {"learning_rat": 0.01}})");
    try {
        parse_pipeline_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("classify.learning_rat"), std::string::npos) << e.what();
    }
}

TEST(Config, TypeMismatchIsNamed) {
    const auto j = nlohmann::json::parse(R"({"evaluate": {"k": "five"}})");
    try {
        parse_pipeline_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("evaluate.k"), std::string::npos) << e.what();
    }
}

TEST(Config, RangeErrors) {
    EXPECT_THROW(parse_pipeline_config(nlohmann::json::parse(R"({"evaluate": {"k": 1}})")), ConfigError);
    EXPECT_THROW(parse_pipeline_config(nlohmann::json::parse(R"({"fusion": {"family": "db9"}})")), ConfigError);
    EXPECT_THROW(parse_pipeline_config(nlohmann::json::parse(R"({"fusion": {"ll_rule": "weighted:2"}})")), ConfigError);
    EXPECT_THROW(parse_pipeline_config(nlohmann::json::parse(R"({"classify": {"model": "svm"}})")), ConfigError);
    EXPECT_THROW(parse_pipeline_config(nlohmann::json::parse(R"([1, 2])")), ConfigError);
}

TEST(Config, RoundTrip) {
    auto c = small_config("x");
    c.fusion.family = WaveletFamily::db2;
    c.fusion.levels = 2;
    c.fusion.ll_rule = "weighted:0.7";
    c.classify.model = "logreg";
    c.run.threads = 3;
    const auto j = to_json(c);
    EXPECT_EQ(to_json(parse_pipeline_config(j)), j);
    EXPECT_EQ(to_json(parse_pipeline_config(nlohmann::json::parse(j.dump()))), j);
}

TEST(Config, LoadErrors) {
    const auto dir = lungfuse::testing::fresh_dir("cfg_load");
    EXPECT_THROW(load_pipeline_config(dir / "missing.json"), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_pipeline_config(dir / "bad.json"), ConfigError);
}

TEST(Version, ReportsDefaults) {
    const auto v = version_info();
    EXPECT_EQ(v.at("config_schema_version"), v.at("report_schema_version"));
    const auto& b = v.at("defaults").at("tabular").at("booster");
    EXPECT_DOUBLE_EQ(b.at("learning_rate").get<double>(), 0.1);
    EXPECT_EQ(b.at("max_depth").get<int>(), 5);
    EXPECT_EQ(b.at("n_estimators").get<int>(), 100);
    EXPECT_EQ(v.at("defaults").at("classify").at("batch_size").get<int>(), 96);
}

TEST(Store, ArraysRoundTripBitExact) {
    const auto dir = lungfuse::testing::fresh_dir("store");
    Matrix a(3, 2);
    a.data = {0.1, -2.5, 1e-300, std::numeric_limits<double>::infinity(), 7.0, -0.0};
    Matrix empty(0, 4);
    write_arrays(dir / "a.bin", {a, empty});
    const auto back = read_arrays(dir / "a.bin");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(back[1].rows, 0u);
    EXPECT_EQ(back[1].cols, 4u);
    EXPECT_TRUE(std::signbit(back[0].data[5]));
}

TEST(Store, CorruptFiles) {
    const auto dir = lungfuse::testing::fresh_dir("store_bad");
    std::ofstream(dir / "magic.bin", std::ios::binary) << "NOPE";
    EXPECT_THROW(read_arrays(dir / "magic.bin"), FormatError);
    Matrix a(4, 4);
    write_arrays(dir / "t.bin", {a});
    fs::resize_file(dir / "t.bin", fs::file_size(dir / "t.bin") - 9);
    EXPECT_THROW(read_arrays(dir / "t.bin"), FormatError);
    EXPECT_THROW(read_arrays(dir / "none.bin"), DataError);
}

TEST(Pipeline, RerunHitsCacheAndIsByteIdentical) {
    const auto dir = lungfuse::testing::fresh_dir("pipeline_small");
    const auto cfg = small_config(dir / "out");
    std::ostringstream log1, log2;
    const auto first = run_pipeline(cfg, &log1);
    for (const auto& s : first.stages) EXPECT_FALSE(s.cache_hit) << s.name;
    const auto report1 = slurp(dir / "out" / "report.json");
    const auto table1 = slurp(dir / "out" / "comparison.txt");

    const auto second = run_pipeline(cfg, &log2);
    ASSERT_EQ(second.stages.size(), first.stages.size());
    for (const auto& s : second.stages) EXPECT_TRUE(s.cache_hit) << s.name;
    EXPECT_NE(log2.str().find("cache hit"), std::string::npos);
    EXPECT_EQ(slurp(dir / "out" / "report.json"), report1);
    EXPECT_EQ(slurp(dir / "out" / "comparison.txt"), table1);

    const auto rep = nlohmann::json::parse(report1);
    for (const char* input : {"tabular-only", "ct-only", "fused", "multimodal"}) {
        const double f1 = rep.at("comparison").at(input).at("f1").at("mean").get<double>();
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f1, 1.0);
    }
    EXPECT_EQ(rep.at("dataset").at("rows").get<int>(), 20);
    EXPECT_TRUE(rep.at("registration").contains("error_vs_ground_truth"));
    std::size_t fused = 0;
    for (const auto& e : fs::directory_iterator(dir / "out" / "fused")) fused += e.path().extension() == ".pgm";
    EXPECT_EQ(fused, 20u);
}

TEST(Pipeline, ConfigChangeInvalidatesOnlyDownstream) {
    const auto dir = lungfuse::testing::fresh_dir("pipeline_partial");
    auto cfg = small_config(dir / "out");
    std::ostringstream log;
    const auto first = run_pipeline(cfg, &log);
    cfg.evaluate.seed = 7;
    const auto second = run_pipeline(cfg, &log);
    ASSERT_EQ(second.stages.size(), first.stages.size());
    for (std::size_t i = 0; i + 1 < second.stages.size(); ++i) EXPECT_TRUE(second.stages[i].cache_hit) << second.stages[i].name;
    EXPECT_FALSE(second.stages.back().cache_hit);
    EXPECT_EQ(second.stages.back().name, "evaluate");
}

TEST(Pipeline, ExternalDatasetDir) {
    const auto dir = lungfuse::testing::fresh_dir("pipeline_ext");
    auto cfg = small_config(dir / "out");
    write_phantom(generate_phantom(cfg.phantom.generator), dir / "data");
    cfg.phantom.dataset_dir = (dir / "data").string();
    std::ostringstream log;
    const auto ext = run_pipeline(cfg, &log);
    EXPECT_EQ(ext.report.at("dataset").at("rows").get<int>(), 20);

    fs::remove(dir / "data" / "clinical.csv");
    cfg.run.output_dir = (dir / "out2").string();
    EXPECT_THROW(run_pipeline(cfg, &log), DataError);
}
