#include "anatgraph/edge_vfe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace anatgraph {

void EdgeInitConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("must be > 0", "model.edge_init.alpha");
  if (!(r_min < r_max)) throw ConfigError("r_min must be < r_max", "model.edge_init.r_min");
  if (!(beta >= 0.0)) throw ConfigError("must be >= 0", "model.edge_init.beta");
}

Tensor init_edge_features(const EdgeInitConfig& config, Index n_edges) {
  config.validate();
  if (n_edges < 2) throw ConfigError("initial edge features need at least 2 edges", "graph");
  Rng rng(config.seed);
  const Vector noise = standard_normal(n_edges, rng);
  Vector v(n_edges);
  const double step = (config.r_max - config.r_min) / static_cast<double>(n_edges - 1);
  for (Index i = 0; i < n_edges; ++i)
    v[i] = config.alpha * (config.r_min + static_cast<double>(i) * step) + config.beta * noise[i];
  return Tensor({n_edges}, std::move(v));
}

void EdgeVfeConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("must be >= 1", "model.embed_dim");
  if (latent_dim < 1) throw ConfigError("must be >= 1", "model.latent_dim");
  if (hidden < 1) throw ConfigError("must be >= 1", "model.cvae_hidden");
  if (!(leaky_slope >= 0.0)) throw ConfigError("must be >= 0", "model.leaky_slope");
}

EdgeLabelEmbedding::EdgeLabelEmbedding(Index dim, Rng& rng) {
  table = Tensor({kRelationTypeCount, dim}, standard_normal(kRelationTypeCount * dim, rng), true);
}

EdgeCvae::EdgeCvae(const EdgeVfeConfig& c, Rng& rng)
    : embedding_(c.embed_dim, rng),
      encoder_hidden_(1 + c.embed_dim, c.hidden, rng),
      mu_(c.hidden, c.latent_dim, rng),
      logvar_(c.hidden, c.latent_dim, rng),
      decoder_(c.latent_dim + c.embed_dim, c.hidden, 1, rng),
      classifier_(c.latent_dim, c.hidden, kRelationTypeCount, rng) {}

CvaeOutput EdgeCvae::forward(const Tensor& features, const std::vector<Index>& codes,
                             const Vector& noise) const {
  const Index e = features.size();
  if (static_cast<Index>(codes.size()) != e)
    throw DimensionError("cvae: " + std::to_string(codes.size()) + " labels for " +
                         std::to_string(e) + " edges");
  const Tensor x = features.reshape({e, 1});
  const Tensor label = embedding_(codes);
  const Tensor h = relu(encoder_hidden_(concat({x, label}, 1)));
  CvaeOutput out;
  out.mu = mu_(h);
  out.logvar = logvar_(h);
  out.z = reparameterize(out.mu, out.logvar, noise);
  out.recon = decoder_(concat({out.z, label}, 1));
  out.class_logits = classifier_(out.z);
  return out;
}

void EdgeCvae::collect(ParameterCollector& c) const {
  auto scoped = [&c](const char* name, auto&& f) {
    ParameterCollector::Scope s(c, name);
    f();
  };
  scoped("embedding", [&] { embedding_.collect(c); });
  scoped("encoder", [&] { encoder_hidden_.collect(c); });
  scoped("mu", [&] { mu_.collect(c); });
  scoped("logvar", [&] { logvar_.collect(c); });
  scoped("decoder", [&] { decoder_.collect(c); });
  scoped("edge_classifier", [&] { classifier_.collect(c); });
}

CvaeLoss cvae_loss(const CvaeOutput& out, const Tensor& features, const std::vector<Index>& codes,
                   double lambda, double kl_weight) {
  CvaeLoss loss;
  loss.reconstruction = mse(out.recon, features.reshape(out.recon.shape()));
  loss.kl = kl_standard_normal(out.mu, out.logvar);
  loss.edge_class = cross_entropy(softmax(out.class_logits), one_hot(codes, kRelationTypeCount));
  loss.total = loss.reconstruction + kl_weight * loss.kl + lambda * loss.edge_class;
  return loss;
}

double edge_class_accuracy(const CvaeOutput& out, const std::vector<Index>& codes) {
  const auto logits = out.class_logits.matrix();
  Index correct = 0;
  for (Index r = 0; r < logits.rows(); ++r) {
    Index arg = 0;
    logits.row(r).maxCoeff(&arg);
    if (arg == codes[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

EdgeAttention::EdgeAttention(Index latent_dim, double slope, Rng& rng) : leaky_slope(slope) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(latent_dim));
  weight = uniform_parameter({latent_dim, 1}, bound, rng);
  bias = Tensor::zeros({1}, true);
}

void EdgeAttention::collect(ParameterCollector& c) const {
  c.add("weight", weight);
  c.add("bias", bias);
}

AttentionOutput attend(const Tensor& z, const EdgeAttention& attention, bool uniform) {
  if (z.rank() != 2) throw DimensionError("attend expects [n_edges x latent], got " + to_string(z.shape()));
  const Index e = z.dim(0);
  AttentionOutput out;
  out.scores = leaky_relu(add(matmul(z, attention.weight), attention.bias), attention.leaky_slope)
                   .reshape({e});
  out.alpha = uniform ? Tensor::full({e}, 1.0 / static_cast<double>(e)) : softmax(out.scores);
  out.z_tilde = scale_rows(z, out.alpha);
  return out;
}

std::vector<AttentionEntry> report_attention(const Vector& alpha, const SensorGraph& graph) {
  if (alpha.size() != graph.edge_count())
    throw DimensionError("attention has " + std::to_string(alpha.size()) + " weights for " +
                         std::to_string(graph.edge_count()) + " edges");
  std::vector<Index> order(static_cast<std::size_t>(alpha.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return alpha[a] > alpha[b]; });
  const double total = alpha.sum();
  std::vector<AttentionEntry> out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Edge& ed = graph.edge(order[r]);
    out.push_back({static_cast<Index>(r + 1), order[r], graph.layout().at(ed.src).name,
                   graph.layout().at(ed.dst).name, ed.type, 100.0 * alpha[order[r]] / total});
  }
  return out;
}

void write_attention_csv(const std::filesystem::path& path, const std::vector<AttentionEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "edge_src,edge_dst,relation_type,weight_pct,rank\n";
  out << std::setprecision(17);
  for (const auto& e : entries)
    out << '"' << e.src << "\",\"" << e.dst << "\"," << to_string(e.type) << ',' << e.weight_pct
        << ',' << e.rank << '\n';
}

EdgeFeatureExtractor::EdgeFeatureExtractor(const SensorGraph& graph, const EdgeInitConfig& init,
                                           const EdgeVfeConfig& config, Rng& rng)
    : config_(config),
      features_(init_edge_features(init, graph.edge_count())),
      codes_(graph.relation_codes()),
      cvae_((config.validate(), config), rng),
      attention_(config.latent_dim, config.leaky_slope, rng) {}

EdgeFeatures EdgeFeatureExtractor::forward(Mode mode, Rng& rng) const {
  const Index n = features_.size() * config_.latent_dim;
  const Vector noise = mode == Mode::train ? standard_normal(n, rng) : Vector::Zero(n);
  EdgeFeatures out;
  out.cvae = cvae_.forward(features_, codes_, noise);
  out.attention = attend(out.cvae.z, attention_, config_.uniform_attention);
  return out;
}

void EdgeFeatureExtractor::collect(ParameterCollector& c) const {
  {
    ParameterCollector::Scope s(c, "cvae");
    cvae_.collect(c);
  }
  ParameterCollector::Scope s(c, "attention");
  attention_.collect(c);
}

}  // namespace anatgraph
