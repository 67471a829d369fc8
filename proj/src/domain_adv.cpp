#include "anatgraph/domain_adv.hpp"

namespace anatgraph {

std::string to_string(Phase phase) {
  return phase == Phase::discrimination ? "discrimination" : "confusion";
}

void PhaseSchedule::validate() const {
  if (m_epochs < 1) throw ConfigError("must be >= 1", "train.phase_epochs");
  if (!(zeta >= 0.0)) throw ConfigError("must be >= 0", "loss.zeta");
}

Phase phase_of(int epoch, const PhaseSchedule& schedule) {
  if (epoch < 1) throw std::invalid_argument("epoch must be >= 1, got " + std::to_string(epoch));
  schedule.validate();
  return (epoch - 1) % (2 * schedule.m_epochs) < schedule.m_epochs ? Phase::discrimination
                                                                   : Phase::confusion;
}

Discriminator::Discriminator(Index embedding_dim, Index hidden, Index domains, Rng& rng)
    : mlp_(embedding_dim, hidden, domains, rng), domains_(domains) {
  if (domains < 1) throw ConfigError("discriminator needs at least one source domain");
}

Tensor discriminator_loss(const Discriminator& d, const Tensor& g, const std::vector<Index>& users,
                          Phase phase, double zeta) {
  for (Index u : users)
    if (u < 0 || u >= d.domains())
      throw LabelError("user label " + std::to_string(u) + " outside [0, " +
                       std::to_string(d.domains()) + ")");
  const Tensor routed = phase == Phase::discrimination ? g.detach() : grad_reverse(g, zeta);
  return cross_entropy(d.probabilities(routed), one_hot(users, d.domains()));
}

}  // namespace anatgraph
