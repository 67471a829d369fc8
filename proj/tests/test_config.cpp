#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "anatgraph/config.hpp"
#include "anatgraph/errors.hpp"

using namespace anatgraph;

namespace {

std::string error_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(RunConfig{}.validate()); }

TEST(Config, OverrideByPathOrUniqueLeaf) {
  RunConfig c;
  apply_override(c, "zeta=1.5");
  EXPECT_EQ(c.loss.zeta, 1.5);
  apply_override(c, "train.epochs=7");
  EXPECT_EQ(c.train.epochs, 7);
  apply_override(c, "edge_init.alpha=2");
  EXPECT_EQ(c.model.edge_init.alpha, 2.0);
  apply_override(c, "cross_lateral=false");
  EXPECT_FALSE(c.graph.cross_lateral);
  // not valid JSON, so taken as a string
  apply_override(c, "target_cluster=U3");
  EXPECT_EQ(c.train.target_cluster, "U3");
  apply_override(c, "optimizer=sgd");
  EXPECT_EQ(c.train.optimizer.kind, OptimizerKind::sgd);
}

TEST(Config, ExactPathBeatsLeafMatch) {
  // "seed" is also the leaf of data.synthetic.seed and model.edge_init.seed
  RunConfig c;
  apply_override(c, "seed=7");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_FALSE(c.data.synthetic_seed.has_value());
  apply_override(c, "synthetic.seed=9");
  EXPECT_EQ(c.data.synthetic_seed, 9u);
}

TEST(Config, OverrideErrorsNameTheKey) {
  RunConfig c;
  EXPECT_EQ(error_path([&] { apply_override(c, "colour=1"); }), "colour");
  EXPECT_EQ(error_path([&] { apply_override(c, "zeta"); }), "--set");
  EXPECT_EQ(error_path([&] { apply_override(c, "epochs=abc"); }), "train.epochs");
  EXPECT_EQ(error_path([&] { apply_override(c, "epochs=2.5"); }), "train.epochs");
  EXPECT_EQ(error_path([&] { apply_override(c, "layout=pamap"); }), "data.synthetic.layout");
  apply_override(c, "zeta=-1");
  EXPECT_EQ(error_path([&] { c.validate(); }), "loss.zeta");
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  apply_override(c, "zeta=0.25");
  apply_override(c, "seed=11");
  apply_override(c, "synthetic.seed=4");
  apply_override(c, "uniform_attention=true");
  const auto doc = config_to_json(c);
  EXPECT_EQ(doc["format_version"], 1);
  const RunConfig back = config_from_json(doc);
  EXPECT_EQ(config_to_json(back), doc);
  EXPECT_TRUE(back.model.edge.uniform_attention);
}

TEST(Config, PartialDocumentOverBase) {
  const RunConfig c = config_from_json(nlohmann::json::parse(R"({"train": {"epochs": 3}, "loss": {"zeta": 0}})"));
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.loss.zeta, 0.0);
  EXPECT_EQ(c.train.batch_size, RunConfig{}.train.batch_size);
}

TEST(Config, JsonErrorsNameThePath) {
  auto path_of = [](const char* text) {
    return error_path([&] { config_from_json(nlohmann::json::parse(text)); });
  };
  EXPECT_EQ(path_of(R"({"train": {"epochz": 3}})"), "train.epochz");
  EXPECT_EQ(path_of(R"({"model": {"edge_init": {"alpha": "big"}}})"), "model.edge_init.alpha");
  EXPECT_EQ(path_of(R"({"format_version": 2})"), "format_version");
  EXPECT_EQ(path_of(R"({"data": {"stride": 0}})"), "data.stride");
  EXPECT_EQ(path_of(R"([1])"), "<root>");
}

TEST(Config, LoadPresetOrFile) {
  EXPECT_EQ(preset_names(), std::vector<std::string>{"synth_default"});
  EXPECT_EQ(config_to_json(load_config("synth_default")), config_to_json(RunConfig{}));
  EXPECT_EQ(error_path([] { load_config("/nonexistent/cfg.json"); }), "--config");

  const auto file = std::filesystem::temp_directory_path() / "anatgraph_test_config.json";
  RunConfig c;
  c.train.epochs = 4;
  write_config(file, c);
  EXPECT_EQ(load_config(file.string()).train.epochs, 4);
  std::ofstream(file) << "{ not json";
  EXPECT_THROW(load_config(file.string()), ConfigError);
  std::filesystem::remove(file);
}
