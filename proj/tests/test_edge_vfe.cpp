#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "anatgraph/edge_vfe.hpp"

using namespace anatgraph;

namespace {

SensorGraph oppt_graph() { return build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt)); }

}  // namespace

TEST(EdgeInit, NoiselessIsScaledLinspace) {
  EdgeInitConfig c;
  c.beta = 0.0;
  c.alpha = 4.0;
  c.r_min = -1.0;
  c.r_max = 1.0;
  const Tensor f = init_edge_features(c, 5);
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(f.data()[i], 4.0 * (-1.0 + 0.5 * i), 1e-15);
  EXPECT_FALSE(f.requires_grad());
}

TEST(EdgeInit, NoiseIsSeededAndScaled) {
  EdgeInitConfig c;
  c.beta = 0.01;
  const Tensor a = init_edge_features(c, 16), b = init_edge_features(c, 16);
  EXPECT_EQ(a.data(), b.data());
  c.beta = 0.0;
  const Tensor clean = init_edge_features(c, 16);
  EXPECT_LT((a.data() - clean.data()).cwiseAbs().maxCoeff(), 0.06);
  EXPECT_GT((a.data() - clean.data()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(EdgeInit, Validation) {
  EdgeInitConfig c;
  c.alpha = 0;
  EXPECT_THROW(init_edge_features(c, 4), ConfigError);
  c = {};
  c.r_min = 2;
  EXPECT_THROW(init_edge_features(c, 4), ConfigError);
  c = {};
  EXPECT_THROW(init_edge_features(c, 1), ConfigError);
}

TEST(Cvae, ShapesAndEvalUsesMean) {
  const SensorGraph g = oppt_graph();
  Rng rng(1);
  EdgeVfeConfig cfg;
  EdgeFeatureExtractor ex(g, EdgeInitConfig{}, cfg, rng);
  const EdgeFeatures train = ex.forward(Mode::train, rng);
  EXPECT_EQ(train.cvae.recon.shape(), (Shape{16, 1}));
  EXPECT_EQ(train.cvae.z.shape(), (Shape{16, cfg.latent_dim}));
  EXPECT_EQ(train.cvae.class_logits.shape(), (Shape{16, kRelationTypeCount}));
  EXPECT_NE(train.cvae.z.data(), train.cvae.mu.data());
  const EdgeFeatures eval = ex.forward(Mode::eval, rng);
  EXPECT_EQ(eval.cvae.z.data(), eval.cvae.mu.data());
}

TEST(Cvae, LossIsWeightedSum) {
  const SensorGraph g = oppt_graph();
  Rng rng(2);
  EdgeFeatureExtractor ex(g, EdgeInitConfig{}, EdgeVfeConfig{}, rng);
  const EdgeFeatures out = ex.forward(Mode::train, rng);
  const CvaeLoss l = cvae_loss(out.cvae, ex.initial_features(), ex.codes(), 0.7, 0.2);
  EXPECT_NEAR(l.total.item(), l.reconstruction.item() + 0.2 * l.kl.item() + 0.7 * l.edge_class.item(), 1e-12);
  EXPECT_NEAR(l.reconstruction.item(),
              (out.cvae.recon.data() - ex.initial_features().data()).squaredNorm() / 16.0, 1e-12);
}

TEST(Cvae, EdgeClassAccuracyCountsArgmax) {
  CvaeOutput out;
  out.class_logits = Tensor::matrix({{3, 0, 0}, {0, 2, 1}, {0, 5, 1}, {0, 0, 1}});
  EXPECT_DOUBLE_EQ(edge_class_accuracy(out, {0, 1, 2, 2}), 0.75);
}

TEST(Attention, UniformModeFreezesWeights) {
  Rng rng(3);
  EdgeAttention att(4, 0.01, rng);
  const Tensor z({6, 4}, standard_normal(24, rng), true);
  const AttentionOutput out = attend(z, att, true);
  for (Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(out.alpha.data()[i], 1.0 / 6.0);
  sum(out.z_tilde).backward();
  EXPECT_FALSE(att.weight.has_grad());
  EXPECT_FALSE(att.bias.has_grad());
  EXPECT_NEAR(z.grad()[0], 1.0 / 6.0, 1e-15);
}

TEST(Attention, ScoresAreLeakyAffine) {
  Rng rng(4);
  EdgeAttention att(2, 0.1, rng);
  att.weight.mutable_data() << 1.0, -1.0;
  att.bias.mutable_data() << 0.5;
  const AttentionOutput out = attend(Tensor::matrix({{1, 0}, {0, 2}}), att);
  EXPECT_DOUBLE_EQ(out.scores.data()[0], 1.5);
  EXPECT_DOUBLE_EQ(out.scores.data()[1], 0.1 * -1.5);
  const double e0 = std::exp(1.5), e1 = std::exp(-0.15);
  EXPECT_NEAR(out.alpha.data()[0], e0 / (e0 + e1), 1e-15);
  EXPECT_NEAR(out.z_tilde.at({1, 1}), 2.0 * e1 / (e0 + e1), 1e-15);
}

TEST(Attention, ReportRanksAndSumsToHundred) {
  const SensorGraph g = oppt_graph();
  Vector alpha = Vector::Constant(16, 0.05);
  alpha[3] = 0.1;
  alpha[7] = 0.1;
  alpha[0] = 0.2;
  const auto rows = report_attention(alpha / alpha.sum(), g);
  ASSERT_EQ(rows.size(), 16u);
  EXPECT_EQ(rows[0].edge, 0);
  EXPECT_EQ(rows[1].edge, 3);  // tie broken by edge index
  EXPECT_EQ(rows[2].edge, 7);
  double total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].rank, static_cast<Index>(i) + 1);
    total += rows[i].weight_pct;
  }
  EXPECT_NEAR(total, 100.0, 1e-10);
  EXPECT_THROW(report_attention(Vector::Ones(3), g), DimensionError);

  const auto path = std::filesystem::temp_directory_path() / "anatgraph_att.csv";
  write_attention_csv(path, rows);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "edge_src,edge_dst,relation_type,weight_pct,rank");
  std::filesystem::remove(path);
}
