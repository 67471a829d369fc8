#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anatgraph/data.hpp"
#include "anatgraph/model.hpp"
#include "anatgraph/optimizer.hpp"

namespace anatgraph {

enum class DataSource { synthetic, csv };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  SyntheticConfig synthetic;
  /// null: the generator follows the run seed.
  std::optional<std::uint64_t> synthetic_seed;
  std::string csv_path;
  std::string manifest_path;
  Index window = 64;
  Index stride = 32;
};

struct GraphConfig {
  /// Relation-rules JSON; empty uses the manifest's rules or the built-in defaults.
  std::string rules_path;
  bool cross_lateral = true;
};

struct TrainConfig {
  int epochs = 130;
  Index batch_size = 32;
  OptimizerConfig optimizer;
  /// M: epochs per adversarial phase.
  int phase_epochs = 5;
  /// Leading epochs that optimize only the edge CVAE objective.
  int cvae_warmup_epochs = 0;
  /// Per-epoch held-out accuracy for the loss/accuracy correlation analysis.
  /// Never used for model selection or stopping.
  bool track_target_accuracy = true;
  /// Hold the last segment of each source (user, activity) out as a
  /// within-user validation set.
  bool within_user_holdout = true;
  /// `train` command only: cluster to hold out; empty picks the last one.
  std::string target_cluster;
};

struct AnalysisConfig {
  int pearson_step = 10;
};

struct RunConfig {
  DataConfig data;
  GraphConfig graph;
  ModelConfig model;
  LossWeights loss;
  TrainConfig train;
  AnalysisConfig analysis;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::uint64_t effective_synthetic_seed() const { return data.synthetic_seed.value_or(seed); }
};

/// One addressable config leaf.
struct ConfigField {
  std::string path;
  std::function<nlohmann::json()> get;
  std::function<void(const nlohmann::json&)> set;
};

std::vector<ConfigField> config_fields(RunConfig& config);

/// Fully resolved config, defaults included, nested by dotted path.
nlohmann::ordered_json config_to_json(const RunConfig& config);
/// Applies a (possibly partial) document over `base`; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc, RunConfig base = {});

/// Applies `key=value`. `key` is a dotted path or a leaf name that is unique
/// across the schema (e.g. `zeta`). Values are parsed as JSON, falling back
/// to a plain string.
void apply_override(RunConfig& config, const std::string& assignment);

std::vector<std::string> preset_names();
/// A named preset, or a JSON file.
RunConfig load_config(const std::string& preset_or_path);

void write_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace anatgraph
