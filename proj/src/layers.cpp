#include "anatgraph/layers.hpp"

#include <cmath>

namespace anatgraph {

Vector standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

Tensor uniform_parameter(const Shape& shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Vector v(numel(shape));
  for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return Tensor(shape, std::move(v), true);
}

std::vector<Tensor> ParameterCollector::tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

Index ParameterCollector::parameter_count() const {
  Index n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

Linear::Linear(Index in, Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = uniform_parameter({in, out}, bound, rng);
  bias = uniform_parameter({out}, bound, rng);
}

void Linear::collect(ParameterCollector& c) const {
  c.add("weight", weight);
  c.add("bias", bias);
}

BatchNorm::BatchNorm(Index features, double eps_, double momentum_)
    : gamma(Tensor::full({features}, 1.0, true)),
      beta(Tensor::zeros({features}, true)),
      stats(BatchNormStats::identity(features)),
      eps(eps_),
      momentum(momentum_) {}

void BatchNorm::collect(ParameterCollector& c) {
  c.add("gamma", gamma);
  c.add("beta", beta);
  c.add_buffer("running_mean", stats.running_mean);
  c.add_buffer("running_var", stats.running_var);
}

Conv1d::Conv1d(Index in_channels, Index out_channels, Index kernel, Rng& rng, Index stride_)
    : stride(stride_) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kernel));
  kernels = uniform_parameter({out_channels, in_channels, kernel}, bound, rng);
  bias = uniform_parameter({out_channels}, bound, rng);
}

void Conv1d::collect(ParameterCollector& c) const {
  c.add("kernels", kernels);
  c.add("bias", bias);
}

void Mlp::collect(ParameterCollector& c) const {
  {
    ParameterCollector::Scope s(c, "hidden");
    hidden_.collect(c);
  }
  ParameterCollector::Scope s(c, "out");
  out_.collect(c);
}

}  // namespace anatgraph
