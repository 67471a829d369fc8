#pragma once

#include <cstdint>
#include <vector>

#include "anatgraph/acke.hpp"
#include "anatgraph/domain_adv.hpp"
#include "anatgraph/edge_vfe.hpp"
#include "anatgraph/heads.hpp"
#include "anatgraph/node_encoder.hpp"

namespace anatgraph {

struct ModelConfig {
  NodeEncoderConfig node;
  EdgeInitConfig edge_init;
  EdgeVfeConfig edge;
  AckeConfig acke;
  Index classifier_hidden = 64;
  Index discriminator_hidden = 64;

  void validate() const;
};

struct ForwardResult {
  EdgeFeatures edges;
  Tensor nodes;          // [B x S x D]
  Tensor embedding;      // G, [B x G_dim]
  Tensor probabilities;  // [B x A]
};

/// Edge features + node encoder + graph convolution + both heads.
class AnatGraphModel {
 public:
  AnatGraphModel(SensorGraph graph, const ModelConfig& config, Index activities, Index domains,
                 std::uint64_t seed);

  /// x: [B x S x T x C].
  ForwardResult forward(const Tensor& x, Mode mode, Rng& rng);

  /// Component losses for one batch. The discriminator term is phase-routed
  /// and omitted entirely when weights.zeta == 0.
  ObjectiveTerms objective(const ForwardResult& fwd, const std::vector<Index>& activities,
                           const std::vector<Index>& domains, Phase phase,
                           const LossWeights& weights) const;

  /// Eval-mode class probabilities without recording history.
  Tensor predict_proba(const Tensor& x);
  std::vector<Index> predict(const Tensor& x) { return argmax_rows(predict_proba(x)); }

  /// Every trainable parameter and BN buffer under stable dotted names.
  ParameterCollector parameters();

  const SensorGraph& graph() const { return graph_; }
  const ModelConfig& config() const { return config_; }
  EdgeFeatureExtractor& edge_features() { return edges_; }
  NodeEncoder& node_encoder() { return encoder_; }
  AnatomicalKnowledgeExtractor& acke() { return acke_; }
  ActivitiesClassifier& classifier() { return classifier_; }
  Discriminator& discriminator() { return discriminator_; }

 private:
  SensorGraph graph_;
  ModelConfig config_;
  EdgeFeatureExtractor edges_;
  NodeEncoder encoder_;
  AnatomicalKnowledgeExtractor acke_;
  ActivitiesClassifier classifier_;
  Discriminator discriminator_;
};

}  // namespace anatgraph
