#pragma once

#include <string>
#include <vector>

#include "anatgraph/domain_adv.hpp"
#include "anatgraph/edge_vfe.hpp"
#include "anatgraph/layers.hpp"

namespace anatgraph {

/// G -> hidden (ReLU) -> A logits -> softmax.
class ActivitiesClassifier {
 public:
  ActivitiesClassifier() = default;
  ActivitiesClassifier(Index embedding_dim, Index hidden, Index classes, Rng& rng);

  Tensor logits(const Tensor& g) const { return mlp_(g); }
  Tensor operator()(const Tensor& g) const { return softmax(mlp_(g)); }
  Index classes() const { return classes_; }
  void collect(ParameterCollector& c) const { mlp_.collect(c); }
  Mlp& mlp() { return mlp_; }

 private:
  Mlp mlp_;
  Index classes_ = 0;
};

/// Row-wise argmax of a [B x A] matrix.
std::vector<Index> argmax_rows(const Tensor& scores);

struct LossWeights {
  double lambda_edge = 1.0;
  double kl_weight = 1.0;
  /// Adversarial strength; 0 disables the discriminator term entirely.
  double zeta = 0.5;

  void validate() const;
  bool adversarial() const { return zeta > 0.0; }
};

/// Component losses from one forward pass. `discriminator` is undefined when
/// the adversarial branch is off.
struct ObjectiveTerms {
  Tensor activities;
  CvaeLoss cvae;
  Tensor discriminator;
};

/// Raw loss values plus the weighted contribution of each to the total.
struct LossBreakdown {
  double har = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double edge_class = 0.0;
  double discriminator = 0.0;

  double har_term = 0.0;
  double reconstruction_term = 0.0;
  double kl_term = 0.0;
  double edge_class_term = 0.0;
  double discriminator_term = 0.0;
  double total = 0.0;

  double sum_of_terms() const {
    return har_term + reconstruction_term + kl_term + edge_class_term + discriminator_term;
  }
};

struct TotalLoss {
  Tensor total;
  LossBreakdown breakdown;
};

/// total = L_HAR + L_recon + kl_weight KL + lambda L_edge + L_D, where the L_D
/// gradient is already phase-routed (detached or reversed) by discriminator_loss().
/// Throws NonFiniteLossError naming the first non-finite term.
TotalLoss total_loss(const ObjectiveTerms& terms, const LossWeights& weights);

}  // namespace anatgraph
