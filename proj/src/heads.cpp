#include "anatgraph/heads.hpp"

#include <cmath>

namespace anatgraph {

ActivitiesClassifier::ActivitiesClassifier(Index embedding_dim, Index hidden, Index classes, Rng& rng)
    : mlp_(embedding_dim, hidden, classes, rng), classes_(classes) {
  if (classes < 1) throw ConfigError("at least one activity class is required");
}

std::vector<Index> argmax_rows(const Tensor& scores) {
  const auto m = scores.matrix();
  std::vector<Index> out(static_cast<std::size_t>(m.rows()));
  for (Index r = 0; r < m.rows(); ++r) m.row(r).maxCoeff(&out[static_cast<std::size_t>(r)]);
  return out;
}

void LossWeights::validate() const {
  if (!(lambda_edge >= 0.0)) throw ConfigError("must be >= 0", "loss.lambda_edge");
  if (!(kl_weight >= 0.0)) throw ConfigError("must be >= 0", "loss.kl_weight");
  if (!(zeta >= 0.0)) throw ConfigError("must be >= 0", "loss.zeta");
}

namespace {

double checked_value(const Tensor& t, const char* name) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NonFiniteLossError(name, v);
  return v;
}

}  // namespace

TotalLoss total_loss(const ObjectiveTerms& terms, const LossWeights& weights) {
  weights.validate();
  TotalLoss out;
  LossBreakdown& b = out.breakdown;
  b.har = checked_value(terms.activities, "L_HAR");
  b.reconstruction = checked_value(terms.cvae.reconstruction, "L_recon");
  b.kl = checked_value(terms.cvae.kl, "L_KL");
  b.edge_class = checked_value(terms.cvae.edge_class, "L_edge_class");

  Tensor total = terms.activities + terms.cvae.reconstruction + weights.kl_weight * terms.cvae.kl +
                 weights.lambda_edge * terms.cvae.edge_class;
  b.har_term = b.har;
  b.reconstruction_term = b.reconstruction;
  b.kl_term = weights.kl_weight * b.kl;
  b.edge_class_term = weights.lambda_edge * b.edge_class;
  // a finite term can still overflow once weighted
  if (!std::isfinite(b.kl_term)) throw NonFiniteLossError("L_KL", b.kl_term);
  if (!std::isfinite(b.edge_class_term)) throw NonFiniteLossError("L_edge_class", b.edge_class_term);
  if (terms.discriminator.defined()) {
    b.discriminator = checked_value(terms.discriminator, "L_D");
    b.discriminator_term = b.discriminator;
    total = total + terms.discriminator;
  }
  b.total = total.item();
  if (!std::isfinite(b.total)) throw NonFiniteLossError("total", b.total);
  out.total = total;
  return out;
}

}  // namespace anatgraph
