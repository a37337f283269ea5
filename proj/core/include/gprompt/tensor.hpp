#pragma once

// Dense row-major float64 matrices with tape-free reverse-mode autodiff.
//
// Every Tensor is a handle to a shared node. Nodes created by an operation
// remember their parents and a backward rule only when at least one parent
// requires a gradient, so inference on frozen parameters builds no graph.
// Gradients accumulate (+=) into leaves across backward() calls until
// zero_grad() is called.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace gprompt {

class Tensor;

namespace detail {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

struct TensorAccess;

}  // namespace detail

class Tensor {
public:
  Tensor();
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor ones(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(std::size_t n);

  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->data.size(); }
  bool empty() const { return node_->data.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return node_->data[r * node_->cols + c]; }
  double item() const;

  std::span<const double> data() const { return node_->data; }
  /// Writable view for optimizers and test fixtures. Mutating data that
  /// already fed a recorded graph invalidates that graph's backward pass.
  std::span<double> mutable_data() { return node_->data; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  double grad_at(std::size_t r, std::size_t c) const;
  void zero_grad() { node_->grad.clear(); }

  /// Reverse pass from a 1x1 loss. Throws ContractError otherwise.
  void backward() const;

  /// Same values, no history, no gradient.
  Tensor detach() const;
  /// Deep copy of values and the requires_grad flag; no history.
  Tensor clone() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct detail::TensorAccess;
};

// ---- primitive operations --------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Elementwise sum. `b` may also be a 1 x a.cols() row broadcast over rows
/// or a 1x1 scalar broadcast everywhere.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Hadamard product; same broadcasting rules as add().
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);
/// log(sigmoid(a)) computed without overflow.
Tensor log_sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
/// Natural log. Without eps, any entry <= 0 raises NumericError. With eps,
/// computes log(max(a, 0) + eps).
Tensor log(const Tensor& a, std::optional<double> eps = std::nullopt);

/// Row-wise softmax with row-max subtraction. NaN raises NumericError.
Tensor softmax_rows(const Tensor& a);
/// Row-wise softmax restricted to entries where mask != 0; masked entries
/// output exactly 0. Every row must admit at least one entry.
Tensor masked_softmax_rows(const Tensor& a, std::span<const unsigned char> mask);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// rows x 1
Tensor row_mean(const Tensor& a);
/// 1 x cols
Tensor col_mean(const Tensor& a);

/// Stack tensors that share a column count on top of each other.
Tensor concat_rows(const std::vector<Tensor>& parts);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

}  // namespace gprompt
