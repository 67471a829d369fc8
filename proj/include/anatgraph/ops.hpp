#pragma once

#include <vector>

#include "anatgraph/tensor.hpp"

// Differentiable free functions over Tensor. Every function records its
// backward rule when any input requires gradients.

namespace anatgraph {

enum class Mode { train, eval };

// ---- elementwise and broadcasting -------------------------------------------

/// a + b. `b` may have a's shape, a trailing suffix of it, or a single element.
Tensor add(const Tensor& a, const Tensor& b);
/// a - b with the same broadcasting as add().
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product of equally shaped tensors.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor exp(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& x, double c) { return scale(x, c); }
inline Tensor operator*(double c, const Tensor& x) { return scale(x, c); }
inline Tensor operator-(const Tensor& x) { return scale(x, -1.0); }

/// out[n, ...] = weights[n] * x[n, ...]
Tensor scale_rows(const Tensor& x, const Tensor& weights);

// ---- reductions ---------------------------------------------------------------

/// Sum of all elements, shape [1].
Tensor sum(const Tensor& x);
/// Mean of all elements, shape [1].
Tensor mean(const Tensor& x);
/// Mean over one axis; the axis is removed from the shape.
Tensor mean(const Tensor& x, int axis);
/// Mean over the node axis of [B x S x F] node features, giving [B x F].
Tensor global_mean_pool(const Tensor& nodes);

// ---- linear algebra -----------------------------------------------------------

/// [m x k] * [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Fully connected map over the last axis: x[..., in] * weight[in x out] + bias[out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- activations --------------------------------------------------------------

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
/// Softmax over the last axis. Subtracts the row max before exponentiating.
Tensor softmax(const Tensor& x);

// ---- convolution, pooling, normalization -------------------------------------

/// Valid cross-correlation. x: [C_in x T] or [N x C_in x T]; kernels:
/// [C_out x C_in x K]; bias: [C_out] or undefined. Output length
/// floor((T - K) / stride) + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, Index stride = 1);
/// Non-overlapping max pooling over the last axis; a trailing remainder is dropped.
Tensor maxpool1d(const Tensor& x, Index width);

struct BatchNormStats {
  Vector running_mean;
  Vector running_var;

  static BatchNormStats identity(Index features) {
    return {Vector::Zero(features), Vector::Ones(features)};
  }
};

/// Batch normalization with the feature axis at position 1 ([B x F] or
/// [B x F x L]). Train mode uses biased batch statistics and updates the
/// running averages in `stats`; eval mode uses the running averages.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                 Mode mode, double eps = 1e-5, double momentum = 0.1);

// ---- shape manipulation --------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor permute(const Tensor& x, const std::vector<int>& order);
/// Gather slices along `axis`; indices may repeat.
Tensor index_select(const Tensor& x, int axis, const std::vector<Index>& indices);
/// Average slices along `axis` into `segments` groups; every group must be non-empty.
Tensor segment_mean(const Tensor& x, int axis, const std::vector<Index>& segment_of,
                    Index segments);
/// Repeat x `copies` times along a new leading axis.
Tensor tile_leading(const Tensor& x, Index copies);
/// Rows of an [R x d] table selected by integer codes -> [n x d].
Tensor embedding_lookup(const Tensor& table, const std::vector<Index>& codes);

// ---- variational and adversarial ----------------------------------------------

/// mu + exp(logvar / 2) * noise, with externally supplied standard-normal noise.
Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Vector& noise);
/// Identity forward; backward multiplies the upstream gradient by -zeta.
Tensor grad_reverse(const Tensor& x, double zeta);

// ---- losses (all return shape [1]) ------------------------------------------

inline constexpr double kLogFloor = 1e-12;

/// -(1/B) sum y log max(p, 1e-12). Rows of `probs` must sum to 1 within 1e-6,
/// rows of `one_hot` must contain exactly one 1.
Tensor cross_entropy(const Tensor& probs, const Tensor& one_hot);
Tensor mse(const Tensor& a, const Tensor& b);
/// KL(N(mu, exp(logvar)) || N(0, I)), summed over the latent axis, averaged over rows.
Tensor kl_standard_normal(const Tensor& mu, const Tensor& logvar);

/// Constant [n x classes] one-hot matrix.
Tensor one_hot(const std::vector<Index>& labels, Index classes);

}  // namespace anatgraph
