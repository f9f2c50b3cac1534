#include "cloudsample/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace cloudsample::ad {

namespace {

thread_local bool g_grad_enabled = true;

std::pair<Eigen::Index, Eigen::Index> matrix_dims(const Shape& shape) {
  if (shape.empty()) return {1, 1};
  if (shape.size() == 1) return {1, static_cast<Eigen::Index>(shape[0])};
  std::size_t rows = 1;
  for (std::size_t i = 0; i + 1 < shape.size(); ++i) rows *= shape[i];
  return {static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(shape.back())};
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

[[noreturn]] void mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw Error(Errc::ShapeMismatch,
              std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

void require_rank2(std::string_view op, const Tensor& t) {
  if (t.rank() != 2)
    throw Error(Errc::ShapeMismatch,
                std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

// Splits `shape` around `axis` into (outer, length, inner) over flat data.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, std::string_view op) {
  if (axis >= shape.size())
    throw Error(Errc::ShapeMismatch, std::string(op) + ": axis " + std::to_string(axis) +
                                         " out of range for " + shape_string(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor Tensor::constant(Matrix value, std::optional<Shape> maybe_shape) {
  auto node = std::make_shared<Node>();
  Shape shape = maybe_shape ? std::move(*maybe_shape)
                            : Shape{static_cast<std::size_t>(value.rows()),
                                    static_cast<std::size_t>(value.cols())};
  const auto [r, c] = matrix_dims(shape);
  if (r * c != value.size()) mismatch("constant", shape, {static_cast<std::size_t>(value.size())});
  if (value.rows() != r) value = Eigen::Map<Matrix>(value.data(), r, c).eval();
  node->shape = std::move(shape);
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value, std::optional<Shape> shape) {
  Tensor t = constant(std::move(value), std::move(shape));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m), Shape{});
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0)
    return Matrix::Zero(node_->value.rows(), node_->value.cols());
  return node_->grad;
}

double Tensor::item() const {
  if (node_->value.size() != 1)
    throw Error(Errc::NonScalarRoot, "item() on tensor of shape " + shape_string(shape()));
  return node_->value(0, 0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Matrix value, Shape shape, std::vector<Tensor> inputs,
                   BackwardFn backward, std::string_view op) {
  auto node = std::make_shared<Node>();
  const auto [r, c] = matrix_dims(shape);
  if (value.rows() != r || value.cols() != c)
    throw Error(Errc::ShapeMismatch, std::string(op) + ": value does not match shape " +
                                         shape_string(shape));
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  const bool tracked =
      g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                    [](const Tensor& t) { return t.requires_grad(); });
  if (tracked) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (a.dim(1) != b.dim(0)) mismatch("matmul", a.shape(), b.shape());
  Matrix out = a.value() * b.value();
  return make_result(std::move(out), {a.dim(0), b.dim(1)}, {a, b},
                     [](Node& self) {
                       Node& x = input(self, 0);
                       Node& y = input(self, 1);
                       if (x.requires_grad) x.accumulate(self.grad * y.value.transpose());
                       if (y.requires_grad) y.accumulate(x.value.transpose() * self.grad);
                     },
                     "matmul");
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  return make_result(a.value() + b.value(), a.shape(), {a, b},
                     [](Node& self) {
                       input(self, 0).accumulate(self.grad);
                       input(self, 1).accumulate(self.grad);
                     },
                     "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a.shape(), b.shape());
  return make_result(a.value() - b.value(), a.shape(), {a, b},
                     [](Node& self) {
                       input(self, 0).accumulate(self.grad);
                       input(self, 1).accumulate(-self.grad);
                     },
                     "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  return make_result(a.value().cwiseProduct(b.value()), a.shape(), {a, b},
                     [](Node& self) {
                       Node& x = input(self, 0);
                       Node& y = input(self, 1);
                       x.accumulate(self.grad.cwiseProduct(y.value));
                       y.accumulate(self.grad.cwiseProduct(x.value));
                     },
                     "mul");
}

Tensor scale(const Tensor& a, double factor) {
  return make_result(a.value() * factor, a.shape(), {a},
                     [factor](Node& self) { input(self, 0).accumulate(self.grad * factor); },
                     "scale");
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  const auto cols = static_cast<Eigen::Index>(x.value().cols());
  if (bias.value().rows() != 1 || bias.value().cols() != cols)
    mismatch("add_row", x.shape(), bias.shape());
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return make_result(std::move(out), x.shape(), {x, bias},
                     [](Node& self) {
                       input(self, 0).accumulate(self.grad);
                       input(self, 1).accumulate(self.grad.colwise().sum());
                     },
                     "add_row");
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(Errc::ShapeMismatch, "concat_cols of nothing");
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    require_rank2("concat_cols", p);
    if (p.dim(0) != rows) mismatch("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(static_cast<Eigen::Index>(p.dim(1)));
    cols += p.dim(1);
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.value().cols()) = p.value();
    offset += p.value().cols();
  }
  return make_result(std::move(out), {rows, cols}, {parts.begin(), parts.end()},
                     [widths](Node& self) {
                       Eigen::Index off = 0;
                       for (std::size_t i = 0; i < widths.size(); ++i) {
                         input(self, i).accumulate(self.grad.middleCols(off, widths[i]));
                         off += widths[i];
                       }
                     },
                     "concat_cols");
}

Tensor transpose(const Tensor& a) {
  require_rank2("transpose", a);
  Matrix out = a.value().transpose();
  return make_result(std::move(out), {a.dim(1), a.dim(0)}, {a},
                     [](Node& self) { input(self, 0).accumulate(self.grad.transpose()); },
                     "transpose");
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return make_result(std::move(out), a.shape(), {a},
                     [](Node& self) {
                       Node& x = input(self, 0);
                       // Subgradient 0 at the kink.
                       x.accumulate((x.value.array() > 0).select(self.grad, 0.0));
                     },
                     "relu");
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (element_count(shape) != a.size()) mismatch("reshape", a.shape(), shape);
  const auto [r, c] = matrix_dims(shape);
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), r, c);
  return make_result(std::move(out), std::move(shape), {a},
                     [](Node& self) {
                       Node& x = input(self, 0);
                       x.accumulate(Eigen::Map<const Matrix>(self.grad.data(), x.value.rows(),
                                                             x.value.cols()));
                     },
                     "reshape");
}

Tensor max_over_axis(const Tensor& a, std::size_t axis) {
  const auto s = split_axis(a.shape(), axis, "max_over_axis");
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto [r, c] = matrix_dims(out_shape);
  Matrix out(r, c);
  std::vector<std::size_t> argmax(s.outer * s.inner);
  const double* x = a.value().data();
  double* y = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      y[o * s.inner + i] = -std::numeric_limits<double>::infinity();
      argmax[o * s.inner + i] = 0;
    }
    for (std::size_t l = 0; l < s.length; ++l) {
      const double* row = x + (o * s.length + l) * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) {
        if (row[i] > y[o * s.inner + i]) {
          y[o * s.inner + i] = row[i];
          argmax[o * s.inner + i] = l;
        }
      }
    }
  }
  return make_result(std::move(out), std::move(out_shape), {a},
                     [s, argmax = std::move(argmax)](Node& self) {
                       Node& x = input(self, 0);
                       Matrix g = Matrix::Zero(x.value.rows(), x.value.cols());
                       double* gx = g.data();
                       const double* gy = self.grad.data();
                       for (std::size_t o = 0; o < s.outer; ++o)
                         for (std::size_t i = 0; i < s.inner; ++i)
                           gx[(o * s.length + argmax[o * s.inner + i]) * s.inner + i] +=
                               gy[o * s.inner + i];
                       x.accumulate(g);
                     },
                     "max_over_axis");
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return make_result(std::move(out), {}, {a},
                     [](Node& self) {
                       Node& x = input(self, 0);
                       x.accumulate(Matrix::Constant(x.value.rows(), x.value.cols(),
                                                     self.grad(0, 0)));
                     },
                     "sum");
}

Tensor mean(const Tensor& a) {
  const double count = static_cast<double>(a.size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / count;
  return make_result(std::move(out), {}, {a},
                     [count](Node& self) {
                       Node& x = input(self, 0);
                       x.accumulate(Matrix::Constant(x.value.rows(), x.value.cols(),
                                                     self.grad(0, 0) / count));
                     },
                     "mean");
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  const auto s = split_axis(a.shape(), axis, "softmax");
  using Block = Eigen::Map<Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstBlock =
      Eigen::Map<const Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  const auto length = static_cast<Eigen::Index>(s.length);
  const auto inner = static_cast<Eigen::Index>(s.inner);
  const std::size_t stride = s.length * s.inner;
  Matrix out(a.value().rows(), a.value().cols());
  for (std::size_t o = 0; o < s.outer; ++o) {
    const ConstBlock x(a.value().data() + o * stride, length, inner);
    Block y(out.data() + o * stride, length, inner);
    if (inner == 1) {
      y = (x - x.maxCoeff()).exp();
      y /= y.sum();
      continue;
    }
    const Eigen::ArrayXXd peak = x.colwise().maxCoeff();
    Eigen::ArrayXXd total = Eigen::ArrayXXd::Zero(1, inner);
    for (Eigen::Index l = 0; l < length; ++l) {
      y.row(l) = (x.row(l) - peak).exp();
      total += y.row(l);
    }
    const Eigen::ArrayXXd inverse = total.inverse();
    for (Eigen::Index l = 0; l < length; ++l) y.row(l) *= inverse;
  }
  return make_result(std::move(out), a.shape(), {a},
                     [s, length, inner, stride](Node& self) {
                       Node& x = input(self, 0);
                       Matrix g(self.value.rows(), self.value.cols());
                       for (std::size_t o = 0; o < s.outer; ++o) {
                         const ConstBlock y(self.value.data() + o * stride, length, inner);
                         const ConstBlock gy(self.grad.data() + o * stride, length, inner);
                         Block gx(g.data() + o * stride, length, inner);
                         if (inner == 1) {
                           gx = y * (gy - (gy * y).sum());
                           continue;
                         }
                         const Eigen::ArrayXXd dot = (gy * y).colwise().sum();
                         for (Eigen::Index l = 0; l < length; ++l)
                           gx.row(l) = y.row(l) * (gy.row(l) - dot);
                       }
                       x.accumulate(g);
                     },
                     "softmax");
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  require_rank2("cross_entropy", logits);
  const auto& z = logits.value();
  if (static_cast<std::size_t>(z.rows()) != labels.size())
    throw Error(Errc::ShapeMismatch, "cross_entropy: one label per row required");
  if (labels.empty()) throw Error(Errc::ShapeMismatch, "cross_entropy: empty batch");
  const auto classes = static_cast<std::size_t>(z.cols());
  Matrix probs(z.rows(), z.cols());
  double loss = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const std::size_t label = labels[static_cast<std::size_t>(r)];
    if (label >= classes)
      throw Error(Errc::BadLabel, "label " + std::to_string(label) + " with " +
                                      std::to_string(classes) + " classes",
                  static_cast<std::size_t>(r));
    const double peak = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - peak).exp();
    const double total = probs.row(r).sum();
    probs.row(r) /= total;
    loss += peak + std::log(total) - z(r, static_cast<Eigen::Index>(label));
  }
  const double batch = static_cast<double>(z.rows());
  Matrix out(1, 1);
  out(0, 0) = loss / batch;
  std::vector<std::size_t> owned(labels.begin(), labels.end());
  return make_result(std::move(out), {}, {logits},
                     [probs = std::move(probs), owned = std::move(owned), batch](Node& self) {
                       Matrix g = probs;
                       for (std::size_t r = 0; r < owned.size(); ++r)
                         g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(owned[r])) -= 1.0;
                       input(self, 0).accumulate(g * (self.grad(0, 0) / batch));
                     },
                     "cross_entropy");
}

Tensor straight_through(const Tensor& surrogate, Matrix forward) {
  if (forward.rows() != surrogate.value().rows() || forward.cols() != surrogate.value().cols())
    throw Error(Errc::ShapeMismatch, "straight_through: forward value shape differs");
  return make_result(std::move(forward), surrogate.shape(), {surrogate},
                     [](Node& self) { input(self, 0).accumulate(self.grad); },
                     "straight_through");
}

void backward(const Tensor& root) {
  if (!root) throw Error(Errc::NonScalarRoot, "backward on empty tensor");
  if (root.size() != 1)
    throw Error(Errc::NonScalarRoot, "backward root has shape " + shape_string(root.shape()));
  if (!root.requires_grad()) return;

  // Post-order DFS gives a topological order (inputs before consumers).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order)
    if (node->backward) node->grad = Matrix::Zero(node->value.rows(), node->value.cols());
  root.node()->accumulate(Matrix::Ones(1, 1));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                         double eps, double floor) {
  for (auto& p : params) p.zero_grad();
  backward(f());
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  NoGradGuard no_grad;
  double worst = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& v = params[k].mutable_value();
    for (Eigen::Index e = 0; e < v.size(); ++e) {
      const double saved = v.data()[e];
      v.data()[e] = saved + eps;
      const double up = f().item();
      v.data()[e] = saved - eps;
      const double down = f().item();
      v.data()[e] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double exact = analytic[k].data()[e];
      const double err =
          std::abs(exact - numeric) / std::max(floor, std::abs(exact) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace cloudsample::ad
