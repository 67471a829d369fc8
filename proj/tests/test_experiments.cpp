#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "anatgraph/errors.hpp"
#include "anatgraph/experiments.hpp"
#include "anatgraph/stats.hpp"

using namespace anatgraph;

namespace {

RunConfig tiny_run() {
  RunConfig c;
  c.seed = 5;
  c.data.synthetic.n_users = 3;
  c.data.synthetic.n_activities = 3;
  c.data.synthetic.segment_length = 160;
  c.data.synthetic.segments_per_activity = 2;
  c.data.window = 32;
  c.data.stride = 16;
  c.model.node.conv1_channels = 4;
  c.model.node.conv2_channels = 4;
  c.model.edge.latent_dim = 4;
  c.model.edge.hidden = 8;
  c.model.acke.layer1_dim = 8;
  c.model.acke.layer2_dim = 8;
  c.model.acke.embedding_dim = 8;
  c.model.classifier_hidden = 8;
  c.model.discriminator_hidden = 8;
  c.train.epochs = 3;
  c.train.phase_epochs = 1;
  c.train.batch_size = 16;
  c.validate();
  return c;
}

EpochLog log_at(int epoch, double har, double acc) {
  EpochLog e;
  e.epoch = epoch;
  e.losses.har = har;
  e.losses.total = 2 * har;
  e.target_accuracy = acc;
  return e;
}

}  // namespace

TEST(Confusion, CountsPairs) {
  const Eigen::MatrixXi m = confusion_matrix({0, 1, 1, 2, 2, 0}, {0, 1, 2, 2, 2, 1}, 3);
  Eigen::MatrixXi expect(3, 3);
  expect << 1, 0, 0,  //
      1, 1, 0,        //
      0, 1, 2;
  EXPECT_EQ(m, expect);
  EXPECT_DOUBLE_EQ(accuracy_of(m), 4.0 / 6.0);
  EXPECT_THROW(confusion_matrix({3}, {0}, 3), LabelError);
  EXPECT_THROW(confusion_matrix({0}, {-1}, 3), LabelError);
  EXPECT_THROW(confusion_matrix({0, 1}, {0}, 3), DimensionError);
}

TEST(Loso, OneFoldPerCluster) {
  const std::vector<UserCluster> c{{"a", {1, 2}}, {"b", {3}}, {"c", {4, 5}}};
  const auto folds = loso_folds(c);
  ASSERT_EQ(folds.size(), 3u);
  EXPECT_EQ(folds[1].name, "b");
  EXPECT_EQ(folds[1].target_users, std::vector<int>{3});
  ASSERT_EQ(folds[1].source_clusters.size(), 2u);
  EXPECT_EQ(folds[1].source_clusters[1].name, "c");
  EXPECT_THROW(loso_folds({{"only", {1}}}), ProtocolError);
}

TEST(Loso, FoldSeedsDiffer) {
  EXPECT_NE(fold_seed(0, 0), fold_seed(0, 1));
  EXPECT_NE(fold_seed(0, 0), fold_seed(1, 0));
  EXPECT_EQ(fold_seed(9, 3), fold_seed(9, 3));
}

TEST(Summary, MeanAndPopulationStdOverFolds) {
  RunRecord r;
  for (double a : {0.5, 0.7, 0.9}) {
    FoldRecord f;
    f.accuracy = a;
    f.within_user_accuracy = std::nan("");
    r.folds.push_back(f);
  }
  const RunSummary s = r.summary();
  EXPECT_NEAR(s.mean_accuracy, 0.7, 1e-15);
  EXPECT_NEAR(s.std_accuracy, std::sqrt(0.08 / 3), 1e-15);
  EXPECT_TRUE(std::isnan(s.mean_within_user_accuracy));
}

TEST(Analysis, SeriesAndPrefixes) {
  std::vector<EpochLog> logs;
  for (int e = 1; e <= 7; ++e) logs.push_back(log_at(e, 1.0 / e, 0.1 * e));
  EXPECT_EQ(epoch_series(logs, "total")[3], 0.5);
  EXPECT_THROW(epoch_series(logs, "l_nope"), std::invalid_argument);
  const auto rows = pearson_analysis(logs, 3, "f");
  std::size_t har_rows = 0;
  for (const auto& row : rows) {
    if (row.loss != "l_har") continue;
    ++har_rows;
    EXPECT_LT(*row.r, 0.0);
    EXPECT_EQ(row.n, row.prefix_end);
  }
  EXPECT_EQ(har_rows, prefix_ends(7, 3).size());
  // constant loss series: correlation undefined, reported as such
  for (const auto& row : rows)
    if (row.loss == "l_kl") EXPECT_FALSE(row.r.has_value());
}

TEST(Analysis, PooledIsEpochwiseMean) {
  RunRecord rec;
  for (double shift : {0.0, 0.2}) {
    FoldRecord f;
    f.name = shift == 0.0 ? "a" : "b";
    for (int e = 1; e <= 4; ++e) f.epochs.push_back(log_at(e, 1.0 / e + shift * e, 0.1 * e + shift));
    rec.folds.push_back(f);
  }
  std::vector<EpochLog> mean;
  for (int e = 1; e <= 4; ++e) mean.push_back(log_at(e, 1.0 / e + 0.1 * e, 0.1 * e + 0.1));
  const auto expect = pearson_analysis(mean, 4, "pooled");
  std::vector<PearsonRow> pooled;
  for (const auto& r : pearson_analysis(rec, 4))
    if (r.scope == "pooled") pooled.push_back(r);
  ASSERT_EQ(pooled.size(), expect.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    EXPECT_EQ(pooled[i].loss, expect[i].loss);
    ASSERT_EQ(pooled[i].r.has_value(), expect[i].r.has_value());
    if (pooled[i].r) EXPECT_NEAR(*pooled[i].r, *expect[i].r, 1e-12);
  }
}

TEST(Protocol, TrainFoldIsDeterministicAndIsolated) {
  const RunConfig cfg = tiny_run();
  const PreparedData data = prepare_data(cfg);
  const FoldSpec fold = loso_folds(data.dataset.clusters()).front();
  const FoldRecord a = train_fold(data, fold, cfg, 17), b = train_fold(data, fold, cfg, 17);
  EXPECT_EQ(a.confusion, b.confusion);
  ASSERT_EQ(a.epochs.size(), 3u);
  for (std::size_t e = 0; e < a.epochs.size(); ++e) EXPECT_EQ(a.epochs[e].losses.total, b.epochs[e].losses.total);
  EXPECT_EQ(a.isolation_overlap, 0);
  EXPECT_EQ(a.target_users, std::vector<int>{1});
  EXPECT_EQ(a.confusion.sum(), a.target_windows);
  EXPECT_GT(a.holdout_windows, 0);
  EXPECT_EQ(a.epochs[0].phase, Phase::discrimination);
  EXPECT_EQ(a.epochs[1].phase, Phase::confusion);
}

TEST(Protocol, RecordRoundTripAndReportFiles) {
  const RunConfig cfg = tiny_run();
  const PreparedData data = prepare_data(cfg);
  const RunRecord rec = run_single(data, cfg);
  ASSERT_EQ(rec.folds.size(), 1u);
  EXPECT_EQ(rec.folds[0].name, "U3");
  const RunRecord back = run_record_from_json(run_record_to_json(rec));
  EXPECT_EQ(dump_json(metrics_json(back)), dump_json(metrics_json(rec)));
  EXPECT_EQ(dump_json(run_record_to_json(back)), dump_json(run_record_to_json(rec)));

  const auto dir = std::filesystem::temp_directory_path() / "anatgraph_test_report";
  std::filesystem::remove_all(dir);
  write_report(rec, dir, 2);
  for (const char* f : {"metrics.json", "confusion_U3.csv", "attention_U3.csv", "training_log.csv", "pearson.csv",
                        "run_record.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto m = nlohmann::json::parse(std::ifstream(dir / "metrics.json"));
  EXPECT_EQ(m["schema_version"], kMetricsSchemaVersion);
  std::filesystem::remove_all(dir);
}

TEST(Protocol, ZeroZetaTrainsWithoutDiscriminatorLoss) {
  RunConfig cfg = tiny_run();
  cfg.loss.zeta = 0.0;
  const PreparedData data = prepare_data(cfg);
  const FoldRecord f = train_fold(data, loso_folds(data.dataset.clusters()).back(), cfg, 3);
  for (const auto& e : f.epochs) {
    EXPECT_EQ(e.losses.discriminator_term, 0.0);
    EXPECT_TRUE(std::isfinite(e.losses.total));
  }
}
