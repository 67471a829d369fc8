#pragma once

#include <random>
#include <string>
#include <vector>

#include "anatgraph/ops.hpp"

namespace anatgraph {

using Rng = std::mt19937_64;

/// n independent standard-normal draws.
Vector standard_normal(Index n, Rng& rng);
/// Trainable leaf with values uniform in [-bound, bound].
Tensor uniform_parameter(const Shape& shape, double bound, Rng& rng);

struct ParameterRef {
  std::string name;
  Tensor tensor;
};

struct BufferRef {
  std::string name;
  Vector* data;
};

/// Flat registry of named parameters and non-trainable buffers (BN running
/// statistics). Modules register themselves under a dotted prefix.
class ParameterCollector {
 public:
  void add(const std::string& name, const Tensor& t) { params_.push_back({prefix_ + name, t}); }
  void add_buffer(const std::string& name, Vector& v) { buffers_.push_back({prefix_ + name, &v}); }

  class Scope {
   public:
    Scope(ParameterCollector& c, const std::string& name) : c_(c), saved_(c.prefix_) {
      c_.prefix_ += name + ".";
    }
    ~Scope() { c_.prefix_ = saved_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    ParameterCollector& c_;
    std::string saved_;
  };

  const std::vector<ParameterRef>& parameters() const { return params_; }
  const std::vector<BufferRef>& buffers() const { return buffers_; }
  std::vector<Tensor> tensors() const;
  Index parameter_count() const;

 private:
  std::vector<ParameterRef> params_;
  std::vector<BufferRef> buffers_;
  std::string prefix_;
};

/// Fully connected layer y = x W + b with W stored [in x out].
class Linear {
 public:
  Linear() = default;
  Linear(Index in, Index out, Rng& rng);

  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(ParameterCollector& c) const;
  Index in_features() const { return weight.dim(0); }
  Index out_features() const { return weight.dim(1); }

  Tensor weight;
  Tensor bias;
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(Index features, double eps, double momentum);

  Tensor operator()(const Tensor& x, Mode mode) {
    return batchnorm(x, gamma, beta, stats, mode, eps, momentum);
  }
  void collect(ParameterCollector& c);

  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;
  double eps = 1e-5;
  double momentum = 0.1;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Index in_channels, Index out_channels, Index kernel, Rng& rng, Index stride = 1);

  Tensor operator()(const Tensor& x) const { return conv1d(x, kernels, bias, stride); }
  void collect(ParameterCollector& c) const;

  Tensor kernels;
  Tensor bias;
  Index stride = 1;
};

/// in -> hidden (ReLU) -> out, no output activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Index in, Index hidden, Index out, Rng& rng) : hidden_(in, hidden, rng), out_(hidden, out, rng) {}

  Tensor operator()(const Tensor& x) const { return out_(relu(hidden_(x))); }
  void collect(ParameterCollector& c) const;

  Linear& hidden_layer() { return hidden_; }
  Linear& output_layer() { return out_; }
  const Linear& hidden_layer() const { return hidden_; }
  const Linear& output_layer() const { return out_; }

 private:
  Linear hidden_;
  Linear out_;
};

}  // namespace anatgraph
