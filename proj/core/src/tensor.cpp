#include "gprompt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "gprompt/error.hpp"

namespace gprompt {

namespace detail {

struct TensorAccess {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }

  static Tensor make(std::size_t rows, std::size_t cols, std::vector<double> data,
                     const std::vector<Tensor>& inputs, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->rows = rows;
    node->cols = cols;
    node->data = std::move(data);
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const auto& in : inputs) node->parents.push_back(in.node_);
      node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
  }
};

}  // namespace detail

namespace {

using detail::Node;
using detail::TensorAccess;

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << t.rows() << "x" << t.cols();
  return os.str();
}

Tensor make(std::size_t rows, std::size_t cols, std::vector<double> data, const std::vector<Tensor>& inputs,
            std::function<void(Node&)> fn) {
  return TensorAccess::make(rows, cols, std::move(data), inputs, std::move(fn));
}

// Parent gradient slot, or nullptr when that parent does not want one.
std::vector<double>* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

enum class Broadcast { same, row, scalar };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::same;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::row;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::scalar;
  throw DimensionError(std::string(op) + ": cannot combine " + shape_str(a) + " with " + shape_str(b));
}

std::size_t bindex(Broadcast mode, std::size_t i, std::size_t cols) {
  switch (mode) {
    case Broadcast::same: return i;
    case Broadcast::row: return i % cols;
    case Broadcast::scalar: return 0;
  }
  return 0;
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make(a.rows(), a.cols(), std::move(out), {a}, [deriv](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    const auto& x = self.parents[0]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * deriv(x[i], self.data[i]);
  });
}

void check_finite(const Tensor& a, const char* op) {
  for (double v : a.data())
    if (std::isnan(v)) throw NumericError(std::string(op) + ": NaN input");
}

}  // namespace

// ---- Tensor ------------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  if (data.size() != rows * cols)
    throw DimensionError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  node_->rows = rows;
  node_->cols = cols;
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::ones(std::size_t rows, std::size_t cols) { return filled(rows, cols, 1.0); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor(1, 1, {value}, requires_grad); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) t.node_->data[i * n + i] = 1.0;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_str(*this));
  return node_->data[0];
}

double Tensor::grad_at(std::size_t r, std::size_t c) const {
  return has_grad() ? node_->grad[r * cols() + c] : 0.0;
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->rows = rows();
  node->cols = cols();
  node->data = node_->data;
  return Tensor(std::move(node));
}

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw ContractError("backward() requires a 1x1 loss, got " + shape_str(*this));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS yields a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior nodes start from zero on every pass; leaves keep accumulating.
  for (Node* n : order)
    if (n->backward_fn) n->grad.assign(n->data.size(), 0.0);
  node_->ensure_grad()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---- operations ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: " + shape_str(a) + " times " + shape_str(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  return make(m, n, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& G = self.grad;
    const auto& A = self.parents[0]->data;
    const auto& B = self.parents[1]->data;
    if (auto* ga = grad_of(self, 0)) {
      // dA = G * B^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          (*ga)[i * k + p] += s;
        }
    }
    if (auto* gb = grad_of(self, 1)) {
      // dB = A^T * G
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto in = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
  return make(c, r, std::move(out), {a}, [r, c](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*ga)[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a, b, "add");
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[bindex(mode, i, cols)];
  return make(a.rows(), a.cols(), std::move(out), {a, b}, [mode, cols](Node& self) {
    if (auto* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
    if (auto* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[bindex(mode, i, cols)] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a, b, "mul");
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[bindex(mode, i, cols)];
  return make(a.rows(), a.cols(), std::move(out), {a, b}, [mode, cols](Node& self) {
    const auto& A = self.parents[0]->data;
    const auto& B = self.parents[1]->data;
    if (auto* ga = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i] * B[bindex(mode, i, cols)];
    if (auto* gb = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[bindex(mode, i, cols)] += self.grad[i] * A[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log_sigmoid(const Tensor& a) {
  // log σ(x) = -softplus(-x); d/dx = 1 - σ(x) = σ(-x)
  return unary(
      a, [](double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0.0) {
          const double e = std::exp(-x);
          return e / (1.0 + e);
        }
        return 1.0 / (1.0 + std::exp(x));
      });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a, std::optional<double> eps) {
  if (!eps) {
    for (double v : a.data())
      if (!(v > 0.0)) throw NumericError("log: nonpositive input " + std::to_string(v) + " without eps guard");
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
  }
  const double e = *eps;
  return unary(
      a, [e](double x) { return std::log(std::max(x, 0.0) + e); },
      [e](double x, double) { return x > 0.0 ? 1.0 / (x + e) : (x == 0.0 ? 1.0 / e : 0.0); });
}

Tensor softmax_rows(const Tensor& a) {
  check_finite(a, "softmax_rows");
  std::vector<unsigned char> all(a.size(), 1);
  return masked_softmax_rows(a, all);
}

Tensor masked_softmax_rows(const Tensor& a, std::span<const unsigned char> mask) {
  if (mask.size() != a.size()) throw DimensionError("masked_softmax_rows: mask size mismatch");
  check_finite(a, "masked_softmax_rows");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(a.size(), 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < c; ++j)
      if (mask[i * c + j]) mx = std::max(mx, x[i * c + j]);
    if (mx == -INFINITY) throw ContractError("masked_softmax_rows: row " + std::to_string(i) + " fully masked");
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (mask[i * c + j]) z += (out[i * c + j] = std::exp(x[i * c + j] - mx));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return make(r, c, std::move(out), {a}, [r, c](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    // dx_j = y_j (g_j - Σ_k g_k y_k); masked entries have y = 0.
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.data[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        (*ga)[i * c + j] += self.data[i * c + j] * (self.grad[i * c + j] - dot);
    }
  });
}

Tensor sum(const Tensor& a) {
  if (a.empty()) throw DimensionError("sum of empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make(1, 1, {s}, {a}, [](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    for (double& g : *ga) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.empty()) throw DimensionError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_mean(const Tensor& a) {
  if (a.empty()) throw DimensionError("row_mean of empty tensor");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i] += x[i * c + j];
    out[i] /= static_cast<double>(c);
  }
  return make(r, 1, std::move(out), {a}, [r, c](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*ga)[i * c + j] += self.grad[i] / static_cast<double>(c);
  });
}

Tensor col_mean(const Tensor& a) {
  if (a.empty()) throw DimensionError("col_mean of empty tensor");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(c, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
  for (double& v : out) v /= static_cast<double>(r);
  return make(1, c, std::move(out), {a}, [r, c](Node& self) {
    auto* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) (*ga)[i * c + j] += self.grad[j] / static_cast<double>(r);
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw DimensionError("concat_rows: column mismatch " + shape_str(p));
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make(r, c, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      const std::size_t len = self.parents[i]->data.size();
      if (auto* gp = grad_of(self, i))
        for (std::size_t k = 0; k < len; ++k) (*gp)[k] += self.grad[offset + k];
      offset += len;
    }
  });
}

}  // namespace gprompt
