#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anatgraph/config.hpp"
#include "anatgraph/data.hpp"
#include "anatgraph/model.hpp"

namespace anatgraph {

/// Dataset, graph and windows shared by every fold of a run.
struct PreparedData {
  Dataset dataset;
  SensorGraph graph;
  WindowSet windows;
  Index dropped_rows = 0;
};

/// Loads or generates the dataset named by the config and windowizes it.
PreparedData prepare_data(const RunConfig& config);

struct FoldSpec {
  std::string name;
  std::vector<int> target_users;
  /// Source clusters in order; their index is the discriminator label.
  std::vector<UserCluster> source_clusters;
};

/// One fold per cluster. Throws ProtocolError with fewer than two clusters.
std::vector<FoldSpec> loso_folds(const std::vector<UserCluster>& clusters);

struct EpochLog {
  int epoch = 0;
  Phase phase = Phase::discrimination;
  /// Batch-size weighted means over the epoch.
  LossBreakdown losses;
  /// Held-out accuracy after the epoch; NaN when not tracked. Analysis only.
  double target_accuracy = 0.0;
};

struct FoldRecord {
  std::string name;
  std::vector<int> target_users;
  std::vector<int> source_users;
  std::uint64_t seed = 0;
  std::vector<EpochLog> epochs;
  double accuracy = 0.0;
  /// Accuracy on held-out segments of the source users; NaN when disabled.
  double within_user_accuracy = 0.0;
  double edge_class_accuracy = 0.0;
  Index train_windows = 0;
  Index target_windows = 0;
  Index holdout_windows = 0;
  /// Target windows whose hash also occurs among training windows.
  Index isolation_overlap = 0;
  Eigen::MatrixXi confusion;
  std::vector<AttentionEntry> attention;
};

struct RunSummary {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_within_user_accuracy = 0.0;
};

struct RunRecord {
  nlohmann::ordered_json config;
  std::vector<std::string> classes;
  std::vector<FoldRecord> folds;

  RunSummary summary() const;
};

/// Trains a fresh model on the fold's source users and evaluates it on the
/// held-out users.
FoldRecord train_fold(const PreparedData& data, const FoldSpec& fold, const RunConfig& config,
                      std::uint64_t fold_seed);

/// Seed of fold `index` derived from the run seed.
std::uint64_t fold_seed(std::uint64_t run_seed, std::size_t index);

/// Full protocol; folds run on up to `parallel_folds` threads, results in fold order.
RunRecord run_loso(const PreparedData& data, const RunConfig& config, int parallel_folds = 1);
/// One split holding out train.target_cluster (default: the last cluster).
RunRecord run_single(const PreparedData& data, const RunConfig& config);

/// Entry (i, j) counts windows of true class i predicted as j.
Eigen::MatrixXi confusion_matrix(const std::vector<Index>& predictions, const std::vector<Index>& truths,
                                 Index classes);
double accuracy_of(const Eigen::MatrixXi& confusion);

inline const std::vector<std::string>& loss_series_names() {
  static const std::vector<std::string> names{"l_har", "l_recon", "l_kl", "l_edge_class", "l_d", "total"};
  return names;
}
/// The named per-epoch series ("l_har" ... "total", or "target_accuracy").
std::vector<double> epoch_series(const std::vector<EpochLog>& epochs, const std::string& name);

struct PearsonRow {
  std::string scope;  // fold name or "pooled"
  std::string loss;
  std::size_t prefix_end = 0;
  std::size_t n = 0;
  std::optional<double> r;
  std::optional<double> p;
};

/// Correlation of each loss series with target accuracy over epoch prefixes.
std::vector<PearsonRow> pearson_analysis(const std::vector<EpochLog>& epochs, std::size_t prefix_step,
                                         const std::string& scope);
/// Per fold, plus the epoch-wise mean across folds labeled "pooled".
std::vector<PearsonRow> pearson_analysis(const RunRecord& record, std::size_t prefix_step);

inline constexpr int kMetricsSchemaVersion = 1;

nlohmann::ordered_json metrics_json(const RunRecord& record);
nlohmann::ordered_json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::ordered_json& doc);

/// Writes metrics.json, confusion_<fold>.csv, attention_<fold>.csv,
/// training_log.csv, pearson.csv and run_record.json under `out_dir`.
void write_report(const RunRecord& record, const std::filesystem::path& out_dir, std::size_t prefix_step);

/// Deterministic text of a JSON document as written to disk.
std::string dump_json(const nlohmann::ordered_json& doc);

}  // namespace anatgraph
