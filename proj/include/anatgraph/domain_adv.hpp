#pragma once

#include <string>
#include <vector>

#include "anatgraph/layers.hpp"

namespace anatgraph {

enum class Phase { discrimination, confusion };

std::string to_string(Phase phase);

/// Cyclic adversarial schedule: M discrimination epochs, then M confusion epochs.
struct PhaseSchedule {
  int m_epochs = 5;
  double zeta = 0.5;

  void validate() const;
};

/// Discrimination iff (epoch - 1) mod 2M < M. Epochs are 1-based.
Phase phase_of(int epoch, const PhaseSchedule& schedule);

/// Source-user classifier over graph embeddings: G -> hidden (ReLU) -> U logits.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(Index embedding_dim, Index hidden, Index domains, Rng& rng);

  Tensor logits(const Tensor& g) const { return mlp_(g); }
  Tensor probabilities(const Tensor& g) const { return softmax(mlp_(g)); }
  Index domains() const { return domains_; }
  void collect(ParameterCollector& c) const { mlp_.collect(c); }

 private:
  Mlp mlp_;
  Index domains_ = 0;
};

/// Cross-entropy of the discriminator over user labels, routed by phase:
///  - discrimination: G is detached, only the discriminator learns;
///  - confusion: G passes through grad_reverse(., zeta), so the discriminator
///    still minimizes L_D while upstream modules receive -zeta * dL_D/dG.
Tensor discriminator_loss(const Discriminator& d, const Tensor& g, const std::vector<Index>& users,
                          Phase phase, double zeta);

}  // namespace anatgraph
