#pragma once

#include <string>
#include <vector>

#include "anatgraph/tensor.hpp"

namespace anatgraph {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizer over a fixed list of leaf parameters.
class Optimizer {
 public:
  Optimizer(std::vector<Tensor> parameters, OptimizerConfig config);

  /// Drops every parameter gradient, so parameters that the next backward
  /// pass does not reach are left untouched by step().
  void zero_grad();
  /// Applies one update. Parameters without a gradient buffer are skipped.
  void step();
  long steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  OptimizerConfig config_;
  std::vector<Vector> first_moment_;
  std::vector<Vector> second_moment_;
  long steps_ = 0;
};

}  // namespace anatgraph
