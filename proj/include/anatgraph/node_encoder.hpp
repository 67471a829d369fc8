#pragma once

#include "anatgraph/layers.hpp"

namespace anatgraph {

struct NodeEncoderConfig {
  Index channels = 3;  // C, per sensor
  Index window = 64;   // T
  Index conv1_channels = 16;
  Index conv2_channels = 32;
  Index kernel = 5;
  Index pool = 2;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  /// Rejects windows too short for two conv(K) + maxpool stages (T < 4K).
  void validate() const;
  /// Flattened per-sensor feature width D.
  Index output_dim() const;
};

/// Shared-weight temporal CNN applied to every sensor:
/// conv -> BN -> ReLU -> maxpool, twice, then flatten.
class NodeEncoder {
 public:
  NodeEncoder() = default;
  NodeEncoder(const NodeEncoderConfig& config, Rng& rng);

  /// x: [B x S x T x C] -> [B x S x D].
  Tensor operator()(const Tensor& x, Mode mode);
  void collect(ParameterCollector& c);

  const NodeEncoderConfig& config() const { return config_; }
  Index output_dim() const { return config_.output_dim(); }

 private:
  NodeEncoderConfig config_;
  Conv1d conv1_;
  BatchNorm bn1_;
  Conv1d conv2_;
  BatchNorm bn2_;
};

}  // namespace anatgraph
