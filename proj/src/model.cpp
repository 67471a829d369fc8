#include "anatgraph/model.hpp"

namespace anatgraph {

void ModelConfig::validate() const {
  node.validate();
  edge_init.validate();
  edge.validate();
  acke.validate();
  if (classifier_hidden < 1) throw ConfigError("must be >= 1", "model.classifier_hidden");
  if (discriminator_hidden < 1) throw ConfigError("must be >= 1", "model.discriminator_hidden");
}

namespace {

Rng seeded(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x9e37u};
  return Rng(seq);
}

}  // namespace

AnatGraphModel::AnatGraphModel(SensorGraph graph, const ModelConfig& config, Index activities,
                               Index domains, std::uint64_t seed)
    : graph_(std::move(graph)), config_(config) {
  config_.validate();
  Rng rng = seeded(seed);
  edges_ = EdgeFeatureExtractor(graph_, config_.edge_init, config_.edge, rng);
  encoder_ = NodeEncoder(config_.node, rng);
  acke_ = AnatomicalKnowledgeExtractor(encoder_.output_dim(), config_.edge.latent_dim, config_.acke, rng);
  classifier_ = ActivitiesClassifier(config_.acke.embedding_dim, config_.classifier_hidden, activities, rng);
  discriminator_ = Discriminator(config_.acke.embedding_dim, config_.discriminator_hidden, domains, rng);
}

ForwardResult AnatGraphModel::forward(const Tensor& x, Mode mode, Rng& rng) {
  if (x.rank() != 4 || x.dim(1) != graph_.node_count())
    throw DimensionError("model expects [B x " + std::to_string(graph_.node_count()) +
                         " x T x C] input, got " + to_string(x.shape()));
  ForwardResult out;
  out.edges = edges_.forward(mode, rng);
  out.nodes = encoder_(x, mode);
  out.embedding = acke_(out.nodes, out.edges.attention.z_tilde, graph_, mode);
  out.probabilities = classifier_(out.embedding);
  return out;
}

ObjectiveTerms AnatGraphModel::objective(const ForwardResult& fwd, const std::vector<Index>& activities,
                                         const std::vector<Index>& domains, Phase phase,
                                         const LossWeights& weights) const {
  weights.validate();
  ObjectiveTerms terms;
  terms.activities = cross_entropy(fwd.probabilities, one_hot(activities, classifier_.classes()));
  terms.cvae = cvae_loss(fwd.edges.cvae, edges_.initial_features(), edges_.codes(), weights.lambda_edge,
                         weights.kl_weight);
  if (weights.adversarial())
    terms.discriminator = discriminator_loss(discriminator_, fwd.embedding, domains, phase, weights.zeta);
  return terms;
}

Tensor AnatGraphModel::predict_proba(const Tensor& x) {
  NoGradGuard guard;
  Rng unused(0);
  return forward(x, Mode::eval, unused).probabilities;
}

ParameterCollector AnatGraphModel::parameters() {
  ParameterCollector c;
  auto scoped = [&c](const char* name, auto&& f) {
    ParameterCollector::Scope s(c, name);
    f();
  };
  scoped("edge", [&] { edges_.collect(c); });
  scoped("node_encoder", [&] { encoder_.collect(c); });
  scoped("acke", [&] { acke_.collect(c); });
  scoped("classifier", [&] { classifier_.collect(c); });
  scoped("discriminator", [&] { discriminator_.collect(c); });
  return c;
}

}  // namespace anatgraph
