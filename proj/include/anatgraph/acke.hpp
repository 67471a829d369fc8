#pragma once

#include "anatgraph/graph.hpp"
#include "anatgraph/layers.hpp"

namespace anatgraph {

/// Edge-enhanced graph convolution. For each directed edge e = (j -> i):
///   m_e  = FC([h_j ‖ z~_e])
///   AF_i = mean of m_e over incoming edges of i (multi-edges counted separately)
///   UF   = ReLU(BN(AF))
class GraphConvLayer {
 public:
  GraphConvLayer() = default;
  GraphConvLayer(Index node_dim, Index edge_dim, Index out_dim, Rng& rng, double bn_eps = 1e-5,
                 double bn_momentum = 0.1);

  /// h: [B x S x F]; z_tilde: [E x L] in graph edge order. Returns [B x S x out].
  Tensor operator()(const Tensor& h, const Tensor& z_tilde, const SensorGraph& graph, Mode mode);
  /// AF before normalization, exposed for oracle tests.
  Tensor aggregate(const Tensor& h, const Tensor& z_tilde, const SensorGraph& graph) const;
  void collect(ParameterCollector& c);

  Linear fc;
  BatchNorm bn;
};

struct AckeConfig {
  Index layer1_dim = 64;
  Index layer2_dim = 64;
  Index embedding_dim = 64;  // G_dim
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  void validate() const;
};

/// Two graph convolutions, a projection FC + BN + ReLU, then global mean
/// pooling over nodes into the graph embedding G: [B x G_dim].
class AnatomicalKnowledgeExtractor {
 public:
  AnatomicalKnowledgeExtractor() = default;
  AnatomicalKnowledgeExtractor(Index node_dim, Index edge_dim, const AckeConfig& config, Rng& rng);

  Tensor operator()(const Tensor& h, const Tensor& z_tilde, const SensorGraph& graph, Mode mode);
  void collect(ParameterCollector& c);

  GraphConvLayer& layer1() { return layer1_; }
  GraphConvLayer& layer2() { return layer2_; }
  Linear& projection() { return proj_; }
  BatchNorm& projection_bn() { return proj_bn_; }
  Index embedding_dim() const { return proj_.out_features(); }

 private:
  GraphConvLayer layer1_;
  GraphConvLayer layer2_;
  Linear proj_;
  BatchNorm proj_bn_;
};

/// BN over the flattened (batch x node) axis of [B x S x F] node features.
Tensor node_batchnorm(BatchNorm& bn, const Tensor& x, Mode mode);

}  // namespace anatgraph
