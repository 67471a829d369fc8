#pragma once

#include <Eigen/Dense>

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "anatgraph/errors.hpp"

namespace anatgraph {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One record of the autodiff graph. Leaves have no backward rule.
struct Node {
  Shape shape;
  Vector value;
  Vector grad;
  bool requires_grad = false;
  bool consumed = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  // Adds `g` into this node's gradient buffer if it participates in the graph.
  template <typename Expr>
  void accumulate(const Expr& g) {
    if (requires_grad) grad += g;
  }
};

}  // namespace detail

/// Dense row-major float64 tensor participating in a reverse-mode autodiff graph.
///
/// Tensors are cheap handles: copies share the underlying node. Every operation
/// in ops.hpp returns a fresh node whose parents are its inputs; calling
/// backward() on a scalar result walks that graph once in reverse topological
/// order and leaves a fully populated grad() on every reachable tensor that
/// requires gradients.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, Vector data, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::initializer_list<double> values, bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor from_matrix(const RowMatrix& m, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  Index dim(int axis) const;
  Index size() const { return data().size(); }

  const Vector& data() const;
  /// Writable storage; only leaves may be mutated in place.
  Vector& mutable_data();
  double item() const;
  double at(std::initializer_list<Index> index) const;
  /// View a rank-2 tensor as a row-major matrix.
  ConstMatrixMap matrix() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  const Vector& grad() const;
  void zero_grad();
  /// Drops the gradient buffer; has_grad() is false afterwards.
  void clear_grad();

  /// Same data, no history.
  Tensor detach() const;
  /// Same data in a new shape; gradients flow back unchanged.
  Tensor reshape(const Shape& shape) const;

  /// Backpropagate from a scalar. Leaf gradients are overwritten unless
  /// `accumulate` is set; calling twice on the same graph throws.
  void backward(bool accumulate = false) const;
  void backward(const Vector& seed, bool accumulate = false) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  const char* op_name() const;

 private:
  const detail::Node& checked() const;
  std::shared_ptr<detail::Node> node_;
};

/// While alive, new operations do not record history (evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

namespace detail {

using BackwardFn = std::function<void(Node&)>;

// Builds the result node of an operation. History is recorded only when grad
// mode is on and some input requires gradients.
Tensor make_result(const char* op, Shape shape, Vector value, const std::vector<Tensor>& inputs,
                   BackwardFn backward);

inline Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace detail

}  // namespace anatgraph
