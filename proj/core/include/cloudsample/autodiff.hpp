#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cloudsample/types.hpp"

/// Dense reverse-mode differentiation over double-precision tensors.
///
/// A tensor's data is kept as a row-major matrix: rank 0 is 1x1, rank 1 is
/// 1xd, and higher ranks fold every leading dimension into the rows. Ops that
/// reduce or normalize along an axis work on the flat data directly, so they
/// accept any rank.
namespace cloudsample::ad {

using Matrix = RowMatrix<double>;
using Shape = std::vector<std::size_t>;

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Shape shape;
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;
  std::string_view op = "leaf";

  /// grad += g, allocating a zero accumulator on first use.
  template <typename Expr>
  void accumulate(const Expr& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    grad += g;
  }
};

std::size_t element_count(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  /// Shape defaults to the matrix dimensions.
  static Tensor constant(Matrix value, std::optional<Shape> shape = std::nullopt);
  static Tensor parameter(Matrix value, std::optional<Shape> shape = std::nullopt);
  static Tensor scalar(double value);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return static_cast<std::size_t>(node_->value.size()); }
  const Matrix& value() const { return node_->value; }
  /// For optimizers and finite differences; does not touch the graph.
  Matrix& mutable_value() { return node_->value; }
  /// Zero matrix when no gradient has reached this tensor.
  Matrix grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad.resize(0, 0); }
  double item() const;

  std::span<const double> data() const {
    return {node_->value.data(), static_cast<std::size_t>(node_->value.size())};
  }

  const NodePtr& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op result. `backward` runs only when some input requires grad.
Tensor make_result(Matrix value, Shape shape, std::vector<Tensor> inputs,
                   BackwardFn backward, std::string_view op);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// x + bias, bias a 1 x cols row repeated over every row of x.
Tensor add_row(const Tensor& x, const Tensor& bias);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor transpose(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Max along `axis`, which is removed from the shape. First max wins ties.
Tensor max_over_axis(const Tensor& a, std::size_t axis);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& a, std::size_t axis);
/// Mean over rows of -log softmax(logits)[label]. Throws BadLabel.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);
/// Value of `forward`, gradient routed unchanged to `surrogate`.
Tensor straight_through(const Tensor& surrogate, Matrix forward);

/// Fills grad of every requires-grad tensor reachable from `root` with
/// d root / d tensor. Leaf gradients add onto what is already there.
void backward(const Tensor& root);

/// max over all entries of |g_ad - g_fd| / max(floor, |g_ad| + |g_fd|),
/// g_fd by central differences with step `eps`.
double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                         double eps = 1e-6, double floor = 1e-12);

}  // namespace cloudsample::ad
