#include "anatgraph/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace anatgraph {

using detail::make_result;
using detail::Node;
using detail::parent;

namespace {

// View of a tensor as [outer x axis x inner] around one axis.
struct AxisSplit {
  Index outer = 1, extent = 1, inner = 1;
};

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank)
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  return axis;
}

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= s[static_cast<std::size_t>(i)];
  r.extent = s[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

enum class Broadcast { same, suffix, scalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) return Broadcast::same;
  if (b.size() == 1) return Broadcast::scalar;
  if (sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin()))
    return Broadcast::suffix;
  throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(sb) + " onto " +
                       to_string(sa));
}

Tensor add_signed(const Tensor& a, const Tensor& b, double sign, const char* op) {
  const Broadcast kind = broadcast_kind(a, b, op);
  Vector out = a.data();
  const Index nb = b.size();
  switch (kind) {
    case Broadcast::same:
      out += sign * b.data();
      break;
    case Broadcast::scalar:
      out.array() += sign * b.data()[0];
      break;
    case Broadcast::suffix: {
      MatrixMap m(out.data(), out.size() / nb, nb);
      m.rowwise() += sign * b.data().transpose();
      break;
    }
  }
  return make_result(op, a.shape(), std::move(out), {a, b}, [kind, nb, sign](Node& self) {
    parent(self, 0).accumulate(self.grad);
    Node& pb = parent(self, 1);
    if (!pb.requires_grad) return;
    switch (kind) {
      case Broadcast::same:
        pb.grad += sign * self.grad;
        break;
      case Broadcast::scalar:
        pb.grad[0] += sign * self.grad.sum();
        break;
      case Broadcast::suffix: {
        ConstMatrixMap g(self.grad.data(), self.grad.size() / nb, nb);
        pb.grad += sign * g.colwise().sum().transpose();
        break;
      }
    }
  });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_signed(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_signed(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Vector out = a.data().cwiseProduct(b.data());
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    pa.accumulate(self.grad.cwiseProduct(pb.value));
    pb.accumulate(self.grad.cwiseProduct(pa.value));
  });
}

Tensor scale(const Tensor& x, double factor) {
  return make_result("scale", x.shape(), x.data() * factor, {x}, [factor](Node& self) {
    parent(self, 0).accumulate(factor * self.grad);
  });
}

Tensor exp(const Tensor& x) {
  Vector out = x.data().array().exp().matrix();
  return make_result("exp", x.shape(), std::move(out), {x}, [](Node& self) {
    parent(self, 0).accumulate(self.grad.cwiseProduct(self.value));
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& weights) {
  if (x.rank() < 1 || weights.rank() != 1 || weights.dim(0) != x.dim(0))
    throw DimensionError("scale_rows: weights " + to_string(weights.shape()) +
                         " do not match rows of " + to_string(x.shape()));
  const Index rows = x.dim(0);
  const Index cols = x.size() / rows;
  Vector out(x.size());
  MatrixMap(out.data(), rows, cols) =
      weights.data().asDiagonal() * ConstMatrixMap(x.data().data(), rows, cols);
  return make_result("scale_rows", x.shape(), std::move(out), {x, weights},
                     [rows, cols](Node& self) {
                       Node& px = parent(self, 0);
                       Node& pw = parent(self, 1);
                       ConstMatrixMap g(self.grad.data(), rows, cols);
                       if (px.requires_grad)
                         MatrixMap(px.grad.data(), rows, cols) += pw.value.asDiagonal() * g;
                       if (pw.requires_grad)
                         pw.grad += g.cwiseProduct(ConstMatrixMap(px.value.data(), rows, cols))
                                        .rowwise()
                                        .sum();
                     });
}

// ---- reductions ---------------------------------------------------------------

Tensor sum(const Tensor& x) {
  return make_result("sum", {1}, Vector::Constant(1, x.data().sum()), {x}, [](Node& self) {
    parent(self, 0).accumulate(Vector::Constant(parent(self, 0).value.size(), self.grad[0]));
  });
}

Tensor mean(const Tensor& x) {
  const double n = static_cast<double>(x.size());
  return make_result("mean", {1}, Vector::Constant(1, x.data().sum() / n), {x}, [n](Node& self) {
    parent(self, 0).accumulate(Vector::Constant(parent(self, 0).value.size(), self.grad[0] / n));
  });
}

Tensor mean(const Tensor& x, int axis) {
  axis = normalize_axis(axis, x.rank(), "mean");
  const AxisSplit sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + axis);
  if (out_shape.empty()) out_shape = {1};
  Vector out = Vector::Zero(sp.outer * sp.inner);
  const double inv = 1.0 / static_cast<double>(sp.extent);
  const Vector& v = x.data();
  for (Index o = 0; o < sp.outer; ++o)
    for (Index e = 0; e < sp.extent; ++e)
      out.segment(o * sp.inner, sp.inner) += v.segment((o * sp.extent + e) * sp.inner, sp.inner);
  out *= inv;
  return make_result("mean_axis", out_shape, std::move(out), {x}, [sp, inv](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (Index o = 0; o < sp.outer; ++o)
      for (Index e = 0; e < sp.extent; ++e)
        px.grad.segment((o * sp.extent + e) * sp.inner, sp.inner) +=
            inv * self.grad.segment(o * sp.inner, sp.inner);
  });
}

Tensor global_mean_pool(const Tensor& nodes) {
  if (nodes.rank() != 3)
    throw DimensionError("global_mean_pool expects [B x S x F], got " + to_string(nodes.shape()));
  return mean(nodes, 1);
}

// ---- linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Vector out(m * n);
  MatrixMap(out.data(), m, n).noalias() = a.matrix() * b.matrix();
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    ConstMatrixMap g(self.grad.data(), m, n);
    if (pa.requires_grad)
      MatrixMap(pa.grad.data(), m, k).noalias() +=
          g * ConstMatrixMap(pb.value.data(), k, n).transpose();
    if (pb.requires_grad)
      MatrixMap(pb.grad.data(), k, n).noalias() +=
          ConstMatrixMap(pa.value.data(), m, k).transpose() * g;
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.dim(-1) != weight.dim(0))
    throw DimensionError("linear: input " + to_string(x.shape()) + " does not match weight " +
                         to_string(weight.shape()));
  const Index in = weight.dim(0), out = weight.dim(1);
  Shape out_shape = x.shape();
  out_shape.back() = out;
  Tensor y = matmul(x.reshape({x.size() / in, in}), weight);
  if (bias.defined()) y = add(y, bias);
  return y.reshape(out_shape);
}

// ---- activations --------------------------------------------------------------

Tensor relu(const Tensor& x) {
  Vector out = x.data().cwiseMax(0.0);
  return make_result("relu", x.shape(), std::move(out), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    if (px.requires_grad)
      px.grad.array() += (px.value.array() > 0.0).select(self.grad.array(), 0.0);
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Vector out = (x.data().array() > 0.0).select(x.data().array(), slope * x.data().array());
  return make_result("leaky_relu", x.shape(), std::move(out), {x}, [slope](Node& self) {
    Node& px = parent(self, 0);
    if (px.requires_grad)
      px.grad.array() +=
          (px.value.array() > 0.0).select(self.grad.array(), slope * self.grad.array());
  });
}

Tensor softmax(const Tensor& x) {
  if (x.data().hasNaN()) throw NumericError("softmax: NaN in input");
  const Index cols = x.dim(-1);
  const Index rows = x.size() / cols;
  Vector out(x.size());
  MatrixMap y(out.data(), rows, cols);
  ConstMatrixMap in(x.data().data(), rows, cols);
  for (Index r = 0; r < rows; ++r) {
    y.row(r) = (in.row(r).array() - in.row(r).maxCoeff()).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return make_result("softmax", x.shape(), std::move(out), {x}, [rows, cols](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    ConstMatrixMap y(self.value.data(), rows, cols);
    ConstMatrixMap g(self.grad.data(), rows, cols);
    MatrixMap gx(px.grad.data(), rows, cols);
    for (Index r = 0; r < rows; ++r) {
      const double dot = y.row(r).dot(g.row(r));
      gx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

// ---- convolution, pooling, normalization -------------------------------------

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, Index stride) {
  if (stride < 1) throw DimensionError("conv1d: stride must be >= 1");
  if (kernels.rank() != 3) throw DimensionError("conv1d: kernels must be [C_out x C_in x K]");
  const bool batched = x.rank() == 3;
  if (!batched && x.rank() != 2) throw DimensionError("conv1d: input must be [C x T] or [N x C x T]");
  const Index n = batched ? x.dim(0) : 1;
  const Index cin = x.dim(-2), t = x.dim(-1);
  const Index cout = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != cin)
    throw DimensionError("conv1d: input has " + std::to_string(cin) + " channels, kernels expect " +
                         std::to_string(kernels.dim(1)));
  if (t < k)
    throw DimensionError("conv1d: input too short (T=" + std::to_string(t) +
                         " < K=" + std::to_string(k) + ")");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout))
    throw DimensionError("conv1d: bias must be [C_out]");
  const Index tout = (t - k) / stride + 1;
  const Index cols_n = n * tout;

  // im2col: column (s, j) holds the receptive field of output j of sample s.
  auto cols = std::make_shared<RowMatrix>(cin * k, cols_n);
  const Vector& xv = x.data();
  for (Index s = 0; s < n; ++s)
    for (Index c = 0; c < cin; ++c)
      for (Index kk = 0; kk < k; ++kk) {
        const double* src = xv.data() + (s * cin + c) * t + kk;
        double* dst = cols->data() + (c * k + kk) * cols_n + s * tout;
        for (Index j = 0; j < tout; ++j) dst[j] = src[j * stride];
      }

  ConstMatrixMap w(kernels.data().data(), cout, cin * k);
  RowMatrix y = w * *cols;
  if (bias.defined()) y.colwise() += bias.data();

  Vector out(n * cout * tout);
  for (Index s = 0; s < n; ++s)
    for (Index c = 0; c < cout; ++c)
      out.segment((s * cout + c) * tout, tout) = y.row(c).segment(s * tout, tout).transpose();

  Shape out_shape = batched ? Shape{n, cout, tout} : Shape{cout, tout};
  std::vector<Tensor> inputs{x, kernels};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "conv1d", out_shape, std::move(out), inputs,
      [=](Node& self) {
        RowMatrix g(cout, cols_n);
        for (Index s = 0; s < n; ++s)
          for (Index c = 0; c < cout; ++c)
            g.row(c).segment(s * tout, tout) =
                self.grad.segment((s * cout + c) * tout, tout).transpose();
        Node& px = parent(self, 0);
        Node& pw = parent(self, 1);
        if (pw.requires_grad) MatrixMap(pw.grad.data(), cout, cin * k).noalias() += g * cols->transpose();
        if (self.parents.size() > 2) parent(self, 2).accumulate(g.rowwise().sum());
        if (px.requires_grad) {
          RowMatrix dcols = ConstMatrixMap(pw.value.data(), cout, cin * k).transpose() * g;
          for (Index s = 0; s < n; ++s)
            for (Index c = 0; c < cin; ++c)
              for (Index kk = 0; kk < k; ++kk) {
                double* dst = px.grad.data() + (s * cin + c) * t + kk;
                const double* src = dcols.data() + (c * k + kk) * cols_n + s * tout;
                for (Index j = 0; j < tout; ++j) dst[j * stride] += src[j];
              }
        }
      });
}

Tensor maxpool1d(const Tensor& x, Index width) {
  if (width < 1) throw DimensionError("maxpool1d: width must be >= 1");
  const Index t = x.dim(-1);
  const Index tout = t / width;
  if (tout < 1) throw DimensionError("maxpool1d: input shorter than pooling width");
  const Index rows = x.size() / t;
  Shape out_shape = x.shape();
  out_shape.back() = tout;
  Vector out(rows * tout);
  auto argmax = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(rows * tout));
  const Vector& v = x.data();
  for (Index r = 0; r < rows; ++r)
    for (Index j = 0; j < tout; ++j) {
      const Index base = r * t + j * width;
      Index best = base;
      for (Index q = 1; q < width; ++q)
        if (v[base + q] > v[best]) best = base + q;
      out[r * tout + j] = v[best];
      (*argmax)[static_cast<std::size_t>(r * tout + j)] = best;
    }
  return make_result("maxpool1d", out_shape, std::move(out), {x}, [argmax](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (std::size_t i = 0; i < argmax->size(); ++i)
      px.grad[(*argmax)[i]] += self.grad[static_cast<Index>(i)];
  });
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                 Mode mode, double eps, double momentum) {
  if (x.rank() < 2) throw DimensionError("batchnorm expects [B x F] or [B x F x L]");
  const Index b = x.dim(0), f = x.dim(1);
  const Index inner = x.size() / (b * f);
  if (gamma.size() != f || beta.size() != f || stats.running_mean.size() != f ||
      stats.running_var.size() != f)
    throw DimensionError("batchnorm: parameters do not match " + std::to_string(f) + " features");
  const Index m = b * inner;
  const Vector& xv = x.data();

  auto feature = [&](const Vector& v, Index i, Index c) -> const double& {
    return v[(i / inner * f + c) * inner + i % inner];
  };

  Vector mu(f), invstd(f);
  if (mode == Mode::train) {
    if (b < 2) throw DimensionError("batchnorm: degenerate batch of size 1 in train mode");
    for (Index c = 0; c < f; ++c) {
      double s = 0.0;
      for (Index i = 0; i < m; ++i) s += feature(xv, i, c);
      mu[c] = s / static_cast<double>(m);
      double ss = 0.0;
      for (Index i = 0; i < m; ++i) {
        const double d = feature(xv, i, c) - mu[c];
        ss += d * d;
      }
      const double var = ss / static_cast<double>(m);
      invstd[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
      stats.running_mean[c] = (1.0 - momentum) * stats.running_mean[c] + momentum * mu[c];
      stats.running_var[c] = (1.0 - momentum) * stats.running_var[c] + momentum * unbiased;
    }
  } else {
    mu = stats.running_mean;
    invstd = (stats.running_var.array() + eps).rsqrt().matrix();
  }

  Vector xhat(x.size()), out(x.size());
  for (Index i = 0; i < m; ++i)
    for (Index c = 0; c < f; ++c) {
      const Index idx = (i / inner * f + c) * inner + i % inner;
      xhat[idx] = (xv[idx] - mu[c]) * invstd[c];
      out[idx] = gamma.data()[c] * xhat[idx] + beta.data()[c];
    }

  const bool batch_stats = mode == Mode::train;
  return make_result(
      "batchnorm", x.shape(), std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat)](Node& self) {
        Node& px = parent(self, 0);
        Node& pg = parent(self, 1);
        Node& pb = parent(self, 2);
        Vector dgamma = Vector::Zero(f), dbeta = Vector::Zero(f);
        for (Index i = 0; i < m; ++i)
          for (Index c = 0; c < f; ++c) {
            const Index idx = (i / inner * f + c) * inner + i % inner;
            dgamma[c] += self.grad[idx] * xhat[idx];
            dbeta[c] += self.grad[idx];
          }
        pg.accumulate(dgamma);
        pb.accumulate(dbeta);
        if (!px.requires_grad) return;
        const double md = static_cast<double>(m);
        for (Index i = 0; i < m; ++i)
          for (Index c = 0; c < f; ++c) {
            const Index idx = (i / inner * f + c) * inner + i % inner;
            const double g = pg.value[c];
            if (batch_stats) {
              // dxhat = dy * gamma; dx = invstd/m * (m*dxhat - sum dxhat - xhat * sum(dxhat*xhat))
              px.grad[idx] += g * invstd[c] / md *
                              (md * self.grad[idx] - dbeta[c] - xhat[idx] * dgamma[c]);
            } else {
              px.grad[idx] += g * invstd[c] * self.grad[idx];
            }
          }
      });
}

// ---- shape manipulation --------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  axis = normalize_axis(axis, static_cast<int>(first.size()), "concat");
  std::vector<Index> extents;
  Index total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size())
      throw DimensionError("concat: rank mismatch " + to_string(s) + " vs " + to_string(first));
    for (std::size_t i = 0; i < s.size(); ++i)
      if (static_cast<int>(i) != axis && s[i] != first[i])
        throw DimensionError("concat: shape mismatch " + to_string(s) + " vs " + to_string(first));
    extents.push_back(s[static_cast<std::size_t>(axis)]);
    total += extents.back();
  }
  const AxisSplit sp = split_at(first, axis);
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(axis)] = total;
  Vector out(sp.outer * total * sp.inner);
  Index offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Index chunk = extents[p] * sp.inner;
    for (Index o = 0; o < sp.outer; ++o)
      out.segment((o * total + offset) * sp.inner, chunk) = parts[p].data().segment(o * chunk, chunk);
    offset += extents[p];
  }
  return make_result("concat", out_shape, std::move(out), parts, [=](Node& self) {
    Index off = 0;
    for (std::size_t p = 0; p < extents.size(); ++p) {
      const Index chunk = extents[p] * sp.inner;
      Node& pn = parent(self, p);
      if (pn.requires_grad)
        for (Index o = 0; o < sp.outer; ++o)
          pn.grad.segment(o * chunk, chunk) += self.grad.segment((o * total + off) * sp.inner, chunk);
      off += extents[p];
    }
  });
}

Tensor permute(const Tensor& x, const std::vector<int>& order) {
  const Shape& s = x.shape();
  const std::size_t r = s.size();
  if (order.size() != r) throw DimensionError("permute: order rank mismatch");
  std::vector<bool> used(r, false);
  for (int o : order) {
    if (o < 0 || static_cast<std::size_t>(o) >= r || used[static_cast<std::size_t>(o)])
      throw DimensionError("permute: invalid axis order");
    used[static_cast<std::size_t>(o)] = true;
  }
  std::vector<Index> in_stride(r, 1);
  for (std::size_t i = r - 1; i > 0; --i) in_stride[i - 1] = in_stride[i] * s[i];
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[static_cast<std::size_t>(order[i])];

  // source[k] = flat input index of output element k
  auto source = std::make_shared<std::vector<Index>>(static_cast<std::size_t>(x.size()));
  std::vector<Index> counter(r, 0);
  for (Index k = 0; k < x.size(); ++k) {
    Index src = 0;
    for (std::size_t i = 0; i < r; ++i) src += counter[i] * in_stride[static_cast<std::size_t>(order[i])];
    (*source)[static_cast<std::size_t>(k)] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  Vector out(x.size());
  for (Index k = 0; k < x.size(); ++k) out[k] = x.data()[(*source)[static_cast<std::size_t>(k)]];
  return make_result("permute", out_shape, std::move(out), {x}, [source](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (std::size_t k = 0; k < source->size(); ++k)
      px.grad[(*source)[k]] += self.grad[static_cast<Index>(k)];
  });
}

Tensor index_select(const Tensor& x, int axis, const std::vector<Index>& indices) {
  axis = normalize_axis(axis, x.rank(), "index_select");
  const AxisSplit sp = split_at(x.shape(), axis);
  if (indices.empty()) throw DimensionError("index_select: empty index list");
  for (Index i : indices)
    if (i < 0 || i >= sp.extent)
      throw DimensionError("index_select: index " + std::to_string(i) + " out of range " +
                           std::to_string(sp.extent));
  const Index n = static_cast<Index>(indices.size());
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = n;
  Vector out(sp.outer * n * sp.inner);
  for (Index o = 0; o < sp.outer; ++o)
    for (Index j = 0; j < n; ++j)
      out.segment((o * n + j) * sp.inner, sp.inner) =
          x.data().segment((o * sp.extent + indices[static_cast<std::size_t>(j)]) * sp.inner, sp.inner);
  return make_result("index_select", out_shape, std::move(out), {x}, [=](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (Index o = 0; o < sp.outer; ++o)
      for (Index j = 0; j < n; ++j)
        px.grad.segment((o * sp.extent + indices[static_cast<std::size_t>(j)]) * sp.inner, sp.inner) +=
            self.grad.segment((o * n + j) * sp.inner, sp.inner);
  });
}

Tensor segment_mean(const Tensor& x, int axis, const std::vector<Index>& segment_of,
                    Index segments) {
  axis = normalize_axis(axis, x.rank(), "segment_mean");
  const AxisSplit sp = split_at(x.shape(), axis);
  if (static_cast<Index>(segment_of.size()) != sp.extent)
    throw DimensionError("segment_mean: segment map has " + std::to_string(segment_of.size()) +
                         " entries for axis of length " + std::to_string(sp.extent));
  Vector count = Vector::Zero(segments);
  for (Index sgm : segment_of) {
    if (sgm < 0 || sgm >= segments) throw DimensionError("segment_mean: segment id out of range");
    count[sgm] += 1.0;
  }
  for (Index s = 0; s < segments; ++s)
    if (count[s] == 0.0)
      throw DimensionError("segment_mean: segment " + std::to_string(s) + " has no members");
  Shape out_shape = x.shape();
  out_shape[static_cast<std::size_t>(axis)] = segments;
  Vector out = Vector::Zero(sp.outer * segments * sp.inner);
  for (Index o = 0; o < sp.outer; ++o)
    for (Index e = 0; e < sp.extent; ++e) {
      const Index sgm = segment_of[static_cast<std::size_t>(e)];
      out.segment((o * segments + sgm) * sp.inner, sp.inner) +=
          x.data().segment((o * sp.extent + e) * sp.inner, sp.inner) / count[sgm];
    }
  return make_result("segment_mean", out_shape, std::move(out), {x}, [=](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (Index o = 0; o < sp.outer; ++o)
      for (Index e = 0; e < sp.extent; ++e) {
        const Index sgm = segment_of[static_cast<std::size_t>(e)];
        px.grad.segment((o * sp.extent + e) * sp.inner, sp.inner) +=
            self.grad.segment((o * segments + sgm) * sp.inner, sp.inner) / count[sgm];
      }
  });
}

Tensor tile_leading(const Tensor& x, Index copies) {
  if (copies < 1) throw DimensionError("tile_leading: copies must be >= 1");
  Shape out_shape = x.shape();
  out_shape.insert(out_shape.begin(), copies);
  const Index n = x.size();
  Vector out(copies * n);
  for (Index c = 0; c < copies; ++c) out.segment(c * n, n) = x.data();
  return make_result("tile_leading", out_shape, std::move(out), {x}, [copies, n](Node& self) {
    Node& px = parent(self, 0);
    if (!px.requires_grad) return;
    for (Index c = 0; c < copies; ++c) px.grad += self.grad.segment(c * n, n);
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<Index>& codes) {
  if (table.rank() != 2) throw DimensionError("embedding_lookup: table must be [R x d]");
  return index_select(table, 0, codes);
}

// ---- variational and adversarial ----------------------------------------------

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Vector& noise) {
  require_same_shape(mu, logvar, "reparameterize");
  if (noise.size() != mu.size())
    throw DimensionError("reparameterize: noise has " + std::to_string(noise.size()) +
                         " values for " + to_string(mu.shape()));
  Tensor noise_t(mu.shape(), noise);
  return add(mu, mul(exp(scale(logvar, 0.5)), noise_t));
}

Tensor grad_reverse(const Tensor& x, double zeta) {
  if (!(zeta > 0.0)) throw ConfigError("grad_reverse: zeta must be > 0, got " + std::to_string(zeta));
  return make_result("grad_reverse", x.shape(), x.data(), {x}, [zeta](Node& self) {
    parent(self, 0).accumulate(-zeta * self.grad);
  });
}

// ---- losses --------------------------------------------------------------------

Tensor cross_entropy(const Tensor& probs, const Tensor& one_hot_labels) {
  require_same_shape(probs, one_hot_labels, "cross_entropy");
  if (probs.rank() != 2) throw DimensionError("cross_entropy expects [B x A] inputs");
  const Index b = probs.dim(0), a = probs.dim(1);
  ConstMatrixMap p(probs.data().data(), b, a);
  ConstMatrixMap y(one_hot_labels.data().data(), b, a);
  for (Index r = 0; r < b; ++r) {
    if (std::abs(p.row(r).sum() - 1.0) > 1e-6)
      throw DistributionError("cross_entropy: probability row " + std::to_string(r) +
                              " sums to " + std::to_string(p.row(r).sum()));
    const Index ones = (y.row(r).array() == 1.0).count();
    const Index zeros = (y.row(r).array() == 0.0).count();
    if (ones != 1 || zeros != a - 1)
      throw DistributionError("cross_entropy: label row " + std::to_string(r) + " is not one-hot");
  }
  const double bd = static_cast<double>(b);
  const double loss =
      -(y.array() * p.array().max(kLogFloor).log()).sum() / bd;
  return make_result("cross_entropy", {1}, Vector::Constant(1, loss), {probs, one_hot_labels},
                     [bd](Node& self) {
                       Node& pp = parent(self, 0);
                       if (!pp.requires_grad) return;
                       const Vector& y = parent(self, 1).value;
                       pp.grad.array() += (pp.value.array() > kLogFloor)
                                              .select(-self.grad[0] / bd * y.array() / pp.value.array(), 0.0);
                     });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  const double n = static_cast<double>(a.size());
  Vector diff = a.data() - b.data();
  const double loss = diff.squaredNorm() / n;
  return make_result("mse", {1}, Vector::Constant(1, loss), {a, b}, [n, diff](Node& self) {
    const Vector g = (2.0 * self.grad[0] / n) * diff;
    parent(self, 0).accumulate(g);
    parent(self, 1).accumulate(-g);
  });
}

Tensor kl_standard_normal(const Tensor& mu, const Tensor& logvar) {
  require_same_shape(mu, logvar, "kl_standard_normal");
  const double rows = mu.rank() >= 2 ? static_cast<double>(mu.dim(0)) : 1.0;
  const auto m = mu.data().array();
  const auto lv = logvar.data().array();
  const double kl = -0.5 * (1.0 + lv - m.square() - lv.exp()).sum() / rows;
  return make_result("kl_standard_normal", {1}, Vector::Constant(1, kl), {mu, logvar},
                     [rows](Node& self) {
                       Node& pm = parent(self, 0);
                       Node& pl = parent(self, 1);
                       const double g = self.grad[0] / rows;
                       pm.accumulate(g * pm.value);
                       pl.accumulate((-0.5 * g * (1.0 - pl.value.array().exp())).matrix());
                     });
}

Tensor one_hot(const std::vector<Index>& labels, Index classes) {
  const Index n = static_cast<Index>(labels.size());
  if (n == 0) throw DimensionError("one_hot: no labels");
  Vector v = Vector::Zero(n * classes);
  for (Index i = 0; i < n; ++i) {
    const Index l = labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= classes)
      throw LabelError("label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    v[i * classes + l] = 1.0;
  }
  return Tensor({n, classes}, std::move(v));
}

}  // namespace anatgraph
