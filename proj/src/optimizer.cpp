#include "anatgraph/optimizer.hpp"

#include <cmath>

namespace anatgraph {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

Optimizer::Optimizer(std::vector<Tensor> parameters, OptimizerConfig config)
    : params_(std::move(parameters)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw ConfigError("optimizer parameter does not require grad");
    first_moment_.push_back(Vector::Zero(p.size()));
    second_moment_.push_back(Vector::Zero(p.size()));
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

void Optimizer::step() {
  ++steps_;
  const double lr = config_.learning_rate;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const Vector& g = p.grad();
    Vector& w = p.mutable_data();
    if (config_.kind == OptimizerKind::sgd) {
      w -= lr * g;
      continue;
    }
    Vector& m = first_moment_[i];
    Vector& v = second_moment_[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseAbs2();
    w.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.epsilon);
  }
}

}  // namespace anatgraph
