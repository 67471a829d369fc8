#include "anatgraph/tensor.hpp"

#include <numeric>
#include <sstream>
#include <unordered_set>

namespace anatgraph {

namespace {
thread_local bool g_grad_mode = true;
}  // namespace

Index numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, Vector data, bool requires_grad) {
  for (Index d : shape)
    if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  if (numel(shape) != data.size())
    throw DimensionError("shape " + to_string(shape) + " holds " + std::to_string(numel(shape)) +
                         " values, data has " + std::to_string(data.size()));
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(shape, Vector::Zero(numel(shape)), requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  return Tensor(shape, Vector::Constant(numel(shape), value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, Vector::Constant(1, value), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  const Index n = v.size();
  return Tensor({n}, std::move(v), requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r ? static_cast<Index>(rows.begin()->size()) : 0;
  Vector v(r * c);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != c) throw DimensionError("ragged matrix literal");
    for (double x : row) v[i++] = x;
  }
  return Tensor({r, c}, std::move(v), requires_grad);
}

Tensor Tensor::from_matrix(const RowMatrix& m, bool requires_grad) {
  Vector v = Eigen::Map<const Vector>(m.data(), m.size());
  return Tensor({m.rows(), m.cols()}, std::move(v), requires_grad);
}

const detail::Node& Tensor::checked() const {
  if (!node_) throw AutodiffError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

Index Tensor::dim(int axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  return s[static_cast<std::size_t>(axis)];
}

const Vector& Tensor::data() const { return checked().value; }

Vector& Tensor::mutable_data() {
  checked();
  if (!node_->is_leaf()) throw AutodiffError("only leaf tensors may be modified in place");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return data()[0];
}

double Tensor::at(std::initializer_list<Index> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw DimensionError("index rank mismatch for " + to_string(s));
  Index flat = 0;
  std::size_t k = 0;
  for (Index i : index) {
    if (i < 0 || i >= s[k]) throw DimensionError("index out of range for " + to_string(s));
    flat = flat * s[k++] + i;
  }
  return data()[flat];
}

ConstMatrixMap Tensor::matrix() const {
  if (rank() != 2) throw DimensionError("matrix() needs rank 2, got " + to_string(shape()));
  return ConstMatrixMap(data().data(), shape()[0], shape()[1]);
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

void Tensor::set_requires_grad(bool value) {
  checked();
  if (!node_->is_leaf()) throw AutodiffError("requires_grad can only be set on leaves");
  node_->requires_grad = value;
}

bool Tensor::has_grad() const { return checked().grad.size() == size(); }

const Vector& Tensor::grad() const {
  if (!has_grad()) throw AutodiffError("tensor has no gradient; call backward() first");
  return node_->grad;
}

void Tensor::zero_grad() {
  checked();
  node_->grad = Vector::Zero(node_->value.size());
}

void Tensor::clear_grad() {
  checked();
  node_->grad.resize(0);
}

const char* Tensor::op_name() const { return checked().op; }

Tensor Tensor::detach() const { return Tensor(shape(), data(), false); }

Tensor Tensor::reshape(const Shape& new_shape) const {
  if (numel(new_shape) != size())
    throw DimensionError("cannot reshape " + to_string(shape()) + " to " + to_string(new_shape));
  return detail::make_result("reshape", new_shape, data(), {*this}, [](detail::Node& self) {
    detail::parent(self, 0).accumulate(self.grad);
  });
}

void Tensor::backward(bool accumulate) const {
  if (size() != 1)
    throw AutodiffError("backward() without a seed needs a scalar, got " + to_string(shape()));
  backward(Vector::Ones(1), accumulate);
}

void Tensor::backward(const Vector& seed, bool accumulate) const {
  const detail::Node& root = checked();
  if (!root.requires_grad) throw AutodiffError("backward() on a tensor that does not require grad");
  if (root.consumed)
    throw AutodiffError("backward() called twice on the same graph; re-run the forward pass");
  if (seed.size() != root.value.size())
    throw DimensionError("backward seed has " + std::to_string(seed.size()) + " values for " +
                         to_string(root.shape));

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order)
    if (!n->is_leaf() && n->consumed)
      throw AutodiffError(std::string("graph node '") + n->op +
                          "' was already consumed by an earlier backward()");

  for (detail::Node* n : order) {
    const bool keep = accumulate && n->is_leaf() && n->grad.size() == n->value.size();
    if (!keep) n->grad = Vector::Zero(n->value.size());
  }
  node_->grad += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (!n->is_leaf()) {
      n->backward(*n);
      n->consumed = true;
    }
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

bool grad_mode_enabled() { return g_grad_mode; }

namespace detail {

Tensor make_result(const char* op, Shape shape, Vector value, const std::vector<Tensor>& inputs,
                   BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool any = false;
  if (g_grad_mode)
    for (const auto& t : inputs) any = any || t.requires_grad();
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const auto& t : inputs) node->parents.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace detail
}  // namespace anatgraph
