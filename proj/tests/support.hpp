#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gprompt/graph.hpp"
#include "gprompt/tensor.hpp"

namespace gprompt::testing {

inline Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0,
                            bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(r * c);
  for (auto& e : v) e = u(rng);
  return Tensor(r, c, std::move(v), requires_grad);
}

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (auto& e : m.data) e = u(rng);
  return m;
}

struct GradCheck {
  double max_abs = 0.0;
  double max_rel = 0.0;
  bool ok = true;
};

/// Central differences of `loss` w.r.t. every entry of every tensor in
/// `wrt`, against the gradients left by one backward pass. An entry passes
/// when |analytic - numeric| <= max(abs_tol, rel_tol * max(|a|, |n|)).
inline GradCheck check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> wrt, double h = 1e-5,
                                 double abs_tol = 1e-6, double rel_tol = 1e-4) {
  for (auto& t : wrt) t.zero_grad();
  loss().backward();
  GradCheck out;
  for (auto& t : wrt) {
    std::vector<double> analytic(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double up = loss().item();
      data[i] = keep - h;
      const double down = loss().item();
      data[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double diff = std::abs(analytic[i] - numeric);
      const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
      out.max_abs = std::max(out.max_abs, diff);
      if (scale > 0.0) out.max_rel = std::max(out.max_rel, diff / scale);
      if (diff > std::max(abs_tol, rel_tol * scale)) out.ok = false;
    }
  }
  return out;
}

/// Scalar reduction Σ w ⊙ out with fixed random weights, so every output
/// entry contributes a distinct cotangent.
inline Tensor weighted_sum(const Tensor& out, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  Tensor w = random_tensor(out.rows(), out.cols(), rng, -1.0, 1.0, false);
  return sum(mul(out, w));
}

inline Graph path_graph(std::size_t n, std::size_t d = 1) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
  return Graph::make(n, std::move(e), Matrix(n, d, 1.0));
}

inline Graph complete_graph(std::size_t n, std::size_t d = 1) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return Graph::make(n, std::move(e), Matrix(n, d, 1.0));
}

/// Center 0 with `leaves` spokes.
inline Graph star_graph(std::size_t leaves, std::size_t d = 1) {
  std::vector<Edge> e;
  for (std::size_t i = 1; i <= leaves; ++i) e.emplace_back(0, static_cast<int>(i));
  return Graph::make(leaves + 1, std::move(e), Matrix(leaves + 1, d, 1.0));
}

inline Graph cycle_graph(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i) e.emplace_back(static_cast<int>(i), static_cast<int>((i + 1) % n));
  return Graph::make(n, std::move(e), Matrix(n, 1, 1.0));
}

/// Erdős–Rényi graph with random features.
inline Graph random_graph(std::size_t n, double p, std::size_t d, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) e.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return Graph::make(n, std::move(e), random_matrix(n, d, rng));
}

/// Same graph with node i renamed perm[i].
inline Graph permute_nodes(const Graph& g, const std::vector<int>& perm) {
  std::vector<Edge> e;
  for (auto [u, v] : g.edges) e.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  Matrix x(g.n, g.x.cols);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.x.cols; ++j) x(static_cast<std::size_t>(perm[i]), j) = g.x(i, j);
  std::vector<int> ny;
  if (g.has_node_labels()) {
    ny.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) ny[static_cast<std::size_t>(perm[i])] = g.node_y[i];
  }
  return Graph::make(g.n, std::move(e), std::move(x), g.y, std::move(ny));
}

inline std::vector<int> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Scalar references with no autodiff, for loss oracles.

inline double ref_log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double ref_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h;
}

inline constexpr double kRefEps = 1e-12;

inline double ref_consistency(const std::vector<std::vector<double>>& pw, const std::vector<std::vector<double>>& ph,
                              double tau) {
  double s = 0.0;
  for (std::size_t i = 0; i < pw.size(); ++i) {
    const auto it = std::max_element(pw[i].begin(), pw[i].end());
    if (*it > tau) s -= std::log(ph[i][static_cast<std::size_t>(it - pw[i].begin())] + kRefEps);
  }
  return s / static_cast<double>(pw.size());
}

inline double ref_diversity(const std::vector<std::vector<double>>& ph) {
  std::vector<double> q(ph[0].size(), 0.0);
  for (const auto& r : ph)
    for (std::size_t c = 0; c < r.size(); ++c) q[c] += r[c] / static_cast<double>(ph.size());
  double s = 0.0;
  for (double v : q) s += v * std::log(v + kRefEps);
  return s;
}

inline double ref_disc(const std::vector<double>& da, const std::vector<double>& dp) {
  double s = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) s += ref_log_sigmoid(da[i]) + ref_log_sigmoid(-dp[i]);
  return -s / (2.0 * static_cast<double>(da.size()));
}

inline double ref_adv(const std::vector<double>& dp) {
  double s = 0.0;
  for (double v : dp) s += ref_log_sigmoid(v);
  return -s / static_cast<double>(dp.size());
}

inline double ref_fewshot(const std::vector<std::vector<double>>& pw, const std::vector<std::vector<double>>& ph,
                          double tau, const std::vector<std::size_t>& labeled, const std::vector<int>& labels,
                          double lambda3) {
  double sl = 0.0, su = 0.0;
  for (std::size_t k = 0; k < labeled.size(); ++k)
    sl -= std::log(ph[labeled[k]][static_cast<std::size_t>(labels[k])] + kRefEps);
  for (std::size_t i = 0; i < pw.size(); ++i) {
    const auto it = std::max_element(pw[i].begin(), pw[i].end());
    if (*it > tau) su -= std::log(ph[i][static_cast<std::size_t>(it - pw[i].begin())] + kRefEps);
  }
  return (sl + lambda3 * su) / static_cast<double>(pw.size());
}

/// Class histogram with imbalance ratio 4.72 and normalized entropy 0.941
/// over seven classes and 1354 samples.
inline const std::vector<std::size_t> kCoraTargetCounts{177, 109, 211, 406, 215, 150, 86};

}  // namespace gprompt::testing
