#include "anatgraph/acke.hpp"

namespace anatgraph {

Tensor node_batchnorm(BatchNorm& bn, const Tensor& x, Mode mode) {
  const Index b = x.dim(0), s = x.dim(1), f = x.dim(2);
  return bn(x.reshape({b * s, f}), mode).reshape({b, s, f});
}

GraphConvLayer::GraphConvLayer(Index node_dim, Index edge_dim, Index out_dim, Rng& rng,
                               double bn_eps, double bn_momentum)
    : fc(node_dim + edge_dim, out_dim, rng), bn(out_dim, bn_eps, bn_momentum) {}

Tensor GraphConvLayer::aggregate(const Tensor& h, const Tensor& z_tilde,
                                 const SensorGraph& graph) const {
  if (h.rank() != 3 || h.dim(1) != graph.node_count())
    throw DimensionError("graph conv expects [B x " + std::to_string(graph.node_count()) +
                         " x F] node features, got " + to_string(h.shape()));
  if (z_tilde.rank() != 2 || z_tilde.dim(0) != graph.edge_count())
    throw DimensionError("graph conv expects [" + std::to_string(graph.edge_count()) +
                         " x L] edge features, got " + to_string(z_tilde.shape()));
  if (h.dim(2) + z_tilde.dim(1) != fc.in_features())
    throw DimensionError("graph conv FC expects width " + std::to_string(fc.in_features()) +
                         ", got node " + std::to_string(h.dim(2)) + " + edge " +
                         std::to_string(z_tilde.dim(1)));
  const Index b = h.dim(0);
  const Tensor sources = index_select(h, 1, graph.sources());  // [B x E x F]
  const Tensor edges = tile_leading(z_tilde, b);               // [B x E x L]
  const Tensor messages = fc(concat({sources, edges}, 2));     // [B x E x out]
  return segment_mean(messages, 1, graph.destinations(), graph.node_count());
}

Tensor GraphConvLayer::operator()(const Tensor& h, const Tensor& z_tilde, const SensorGraph& graph,
                                  Mode mode) {
  return relu(node_batchnorm(bn, aggregate(h, z_tilde, graph), mode));
}

void GraphConvLayer::collect(ParameterCollector& c) {
  {
    ParameterCollector::Scope s(c, "fc");
    fc.collect(c);
  }
  ParameterCollector::Scope s(c, "bn");
  bn.collect(c);
}

void AckeConfig::validate() const {
  if (layer1_dim < 1) throw ConfigError("must be >= 1", "model.gcn1_dim");
  if (layer2_dim < 1) throw ConfigError("must be >= 1", "model.gcn2_dim");
  if (embedding_dim < 1) throw ConfigError("must be >= 1", "model.graph_embedding_dim");
}

namespace {

const AckeConfig& validated(const AckeConfig& c) {
  c.validate();
  return c;
}

}  // namespace

AnatomicalKnowledgeExtractor::AnatomicalKnowledgeExtractor(Index node_dim, Index edge_dim,
                                                           const AckeConfig& config, Rng& rng)
    : layer1_(node_dim, edge_dim, validated(config).layer1_dim, rng, config.bn_eps, config.bn_momentum),
      layer2_(config.layer1_dim, edge_dim, config.layer2_dim, rng, config.bn_eps, config.bn_momentum),
      proj_(config.layer2_dim, config.embedding_dim, rng),
      proj_bn_(config.embedding_dim, config.bn_eps, config.bn_momentum) {}

Tensor AnatomicalKnowledgeExtractor::operator()(const Tensor& h, const Tensor& z_tilde,
                                                const SensorGraph& graph, Mode mode) {
  Tensor u = layer1_(h, z_tilde, graph, mode);
  u = layer2_(u, z_tilde, graph, mode);
  u = relu(node_batchnorm(proj_bn_, proj_(u), mode));
  return global_mean_pool(u);
}

void AnatomicalKnowledgeExtractor::collect(ParameterCollector& c) {
  auto scoped = [&c](const char* name, auto&& f) {
    ParameterCollector::Scope s(c, name);
    f();
  };
  scoped("layer1", [&] { layer1_.collect(c); });
  scoped("layer2", [&] { layer2_.collect(c); });
  scoped("proj", [&] { proj_.collect(c); });
  scoped("proj_bn", [&] { proj_bn_.collect(c); });
}

}  // namespace anatgraph
