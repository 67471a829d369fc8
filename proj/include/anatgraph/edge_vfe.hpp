#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "anatgraph/graph.hpp"
#include "anatgraph/layers.hpp"

namespace anatgraph {

/// Linearly spaced, noise-perturbed initial edge features.
struct EdgeInitConfig {
  double alpha = 10.0;
  double r_min = 0.0;
  double r_max = 1.0;
  double beta = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// alpha * linspace(r_min, r_max, n_edges) + beta * N(0, 1), shape [n_edges].
Tensor init_edge_features(const EdgeInitConfig& config, Index n_edges);

struct EdgeVfeConfig {
  Index embed_dim = 8;
  Index latent_dim = 8;
  Index hidden = 32;
  double leaky_slope = 0.01;
  /// Fix attention at 1/n_edges (ablation); w and b receive no gradient.
  bool uniform_attention = false;

  void validate() const;
};

/// Trainable [R x d] table mapping a relation code to its embedding row.
class EdgeLabelEmbedding {
 public:
  EdgeLabelEmbedding() = default;
  EdgeLabelEmbedding(Index dim, Rng& rng);

  Tensor operator()(const std::vector<Index>& codes) const { return embedding_lookup(table, codes); }
  void collect(ParameterCollector& c) const { c.add("table", table); }

  Tensor table;
};

struct CvaeOutput {
  Tensor recon;         // [E x 1]
  Tensor mu;            // [E x latent]
  Tensor logvar;        // [E x latent]
  Tensor z;             // [E x latent]
  Tensor class_logits;  // [E x R]
};

/// Conditional VAE over edges: the encoder sees (feature ‖ label embedding),
/// the decoder sees (z ‖ label embedding), and an edge classifier reads z.
class EdgeCvae {
 public:
  EdgeCvae() = default;
  EdgeCvae(const EdgeVfeConfig& config, Rng& rng);

  /// `features` is [E] or [E x 1]; `noise` holds E * latent standard-normal draws.
  CvaeOutput forward(const Tensor& features, const std::vector<Index>& codes, const Vector& noise) const;
  void collect(ParameterCollector& c) const;

  Index latent_dim() const { return mu_.out_features(); }
  const Mlp& classifier() const { return classifier_; }

 private:
  EdgeLabelEmbedding embedding_;
  Linear encoder_hidden_;
  Linear mu_;
  Linear logvar_;
  Mlp decoder_;
  Mlp classifier_;
};

struct CvaeLoss {
  Tensor total;
  Tensor reconstruction;
  Tensor kl;
  Tensor edge_class;
};

/// total = MSE(recon, features) + kl_weight * KL + lambda * CE(edge classifier).
CvaeLoss cvae_loss(const CvaeOutput& out, const Tensor& features, const std::vector<Index>& codes,
                   double lambda, double kl_weight);

/// Accuracy of argmax(class_logits) against the true relation codes.
double edge_class_accuracy(const CvaeOutput& out, const std::vector<Index>& codes);

class EdgeAttention {
 public:
  EdgeAttention() = default;
  EdgeAttention(Index latent_dim, double leaky_slope, Rng& rng);

  void collect(ParameterCollector& c) const;

  Tensor weight;  // [latent x 1]
  Tensor bias;    // [1]
  double leaky_slope = 0.01;
};

struct AttentionOutput {
  Tensor scores;   // [E]
  Tensor alpha;    // [E], on the simplex
  Tensor z_tilde;  // [E x latent]
};

/// s_e = LeakyReLU(w . z_e + b); alpha = softmax over all edges; z~_e = alpha_e z_e.
AttentionOutput attend(const Tensor& z, const EdgeAttention& attention, bool uniform = false);

struct AttentionEntry {
  Index rank;
  Index edge;
  std::string src;
  std::string dst;
  RelationType type;
  double weight_pct;
};

/// Edges ranked by descending weight (ties by edge index), weights in percent.
std::vector<AttentionEntry> report_attention(const Vector& alpha, const SensorGraph& graph);
/// CSV with header edge_src,edge_dst,relation_type,weight_pct,rank.
void write_attention_csv(const std::filesystem::path& path, const std::vector<AttentionEntry>& entries);

struct EdgeFeatures {
  CvaeOutput cvae;
  AttentionOutput attention;
};

/// Owns the fixed initial features of one graph plus the CVAE and attention.
class EdgeFeatureExtractor {
 public:
  EdgeFeatureExtractor() = default;
  EdgeFeatureExtractor(const SensorGraph& graph, const EdgeInitConfig& init,
                       const EdgeVfeConfig& config, Rng& rng);

  /// Train mode samples fresh reparameterization noise from `rng`; eval mode uses z = mu.
  EdgeFeatures forward(Mode mode, Rng& rng) const;
  void collect(ParameterCollector& c) const;

  const Tensor& initial_features() const { return features_; }
  const std::vector<Index>& codes() const { return codes_; }
  const EdgeCvae& cvae() const { return cvae_; }
  EdgeCvae& cvae() { return cvae_; }
  const EdgeAttention& attention() const { return attention_; }
  EdgeAttention& attention() { return attention_; }
  const EdgeVfeConfig& config() const { return config_; }

 private:
  EdgeVfeConfig config_;
  Tensor features_;
  std::vector<Index> codes_;
  EdgeCvae cvae_;
  EdgeAttention attention_;
};

}  // namespace anatgraph
