#include "anatgraph/node_encoder.hpp"

namespace anatgraph {

void NodeEncoderConfig::validate() const {
  if (channels < 1) throw ConfigError("must be >= 1", "data.channels");
  if (kernel < 1) throw ConfigError("must be >= 1", "model.kernel");
  if (pool < 1) throw ConfigError("must be >= 1", "model.pool");
  if (conv1_channels < 1) throw ConfigError("must be >= 1", "model.conv1_channels");
  if (conv2_channels < 1) throw ConfigError("must be >= 1", "model.conv2_channels");
  if (window < 4 * kernel)
    throw ConfigError("window length " + std::to_string(window) + " is too short for kernel " +
                          std::to_string(kernel) + " (need T >= 4K)",
                      "data.window");
  if (output_dim() < 1) throw ConfigError("window too short for the pooling stages", "data.window");
}

Index NodeEncoderConfig::output_dim() const {
  const Index t1 = (window - kernel + 1) / pool;
  const Index t2 = (t1 - kernel + 1) / pool;
  return t2 > 0 ? conv2_channels * t2 : 0;
}

NodeEncoder::NodeEncoder(const NodeEncoderConfig& config, Rng& rng)
    : config_((config.validate(), config)),
      conv1_(config.channels, config.conv1_channels, config.kernel, rng),
      bn1_(config.conv1_channels, config.bn_eps, config.bn_momentum),
      conv2_(config.conv1_channels, config.conv2_channels, config.kernel, rng),
      bn2_(config.conv2_channels, config.bn_eps, config.bn_momentum) {}

Tensor NodeEncoder::operator()(const Tensor& x, Mode mode) {
  if (x.rank() != 4 || x.dim(2) != config_.window || x.dim(3) != config_.channels)
    throw DimensionError("node encoder expects [B x S x " + std::to_string(config_.window) + " x " +
                         std::to_string(config_.channels) + "], got " + to_string(x.shape()));
  const Index b = x.dim(0), s = x.dim(1);
  // Sensors share weights, so fold them into the batch axis: [(B*S) x C x T].
  Tensor h = permute(x, {0, 1, 3, 2}).reshape({b * s, config_.channels, config_.window});
  h = maxpool1d(relu(bn1_(conv1_(h), mode)), config_.pool);
  h = maxpool1d(relu(bn2_(conv2_(h), mode)), config_.pool);
  return h.reshape({b, s, config_.output_dim()});
}

void NodeEncoder::collect(ParameterCollector& c) {
  auto scoped = [&c](const char* name, auto&& f) {
    ParameterCollector::Scope sc(c, name);
    f();
  };
  scoped("conv1", [&] { conv1_.collect(c); });
  scoped("bn1", [&] { bn1_.collect(c); });
  scoped("conv2", [&] { conv2_.collect(c); });
  scoped("bn2", [&] { bn2_.collect(c); });
}

}  // namespace anatgraph
