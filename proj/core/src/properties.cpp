#include "gprompt/properties.hpp"

#include <algorithm>
#include <cmath>

#include "gprompt/error.hpp"

namespace gprompt {

double edge_homophily(const Graph& g) {
  if (!g.has_node_labels()) throw ContractError("edge homophily requires node labels");
  if (g.edges.empty()) return kEdgelessHomophily;
  std::size_t same = 0;
  for (auto [u, v] : g.edges) same += g.node_y[u] == g.node_y[v];
  return static_cast<double>(same) / static_cast<double>(g.edges.size());
}

std::vector<double> pagerank(const Graph& g, const PageRankOptions& opt) {
  const std::size_t n = g.n;
  if (n == 0) throw ContractError("pagerank of an empty graph");
  const auto adj = g.adjacency();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, inv_n), next(n);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (adj[u].empty()) dangling += rank[u];
    const double base = (1.0 - opt.damping) * inv_n + opt.damping * dangling * inv_n;
    std::fill(next.begin(), next.end(), base);
    for (std::size_t u = 0; u < n; ++u) {
      if (adj[u].empty()) continue;
      const double share = opt.damping * rank[u] / static_cast<double>(adj[u].size());
      for (int v : adj[u]) next[v] += share;
    }
    double delta = 0.0, total = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      delta += std::abs(next[u] - rank[u]);
      total += next[u];
    }
    for (auto& r : next) r /= total;
    std::swap(rank, next);
    if (delta <= opt.tol) return rank;
  }
  throw NumericError("pagerank did not converge within " + std::to_string(opt.max_iter) + " iterations");
}

namespace {

double local_clustering(const std::vector<std::vector<int>>& adj, int node) {
  const auto& nb = adj[node];
  const std::size_t deg = nb.size();
  if (deg < 2) return 0.0;
  std::size_t links = 0;
  for (std::size_t i = 0; i < deg; ++i)
    for (std::size_t j = i + 1; j < deg; ++j)
      links += std::binary_search(adj[nb[i]].begin(), adj[nb[i]].end(), nb[j]);
  return 2.0 * static_cast<double>(links) / static_cast<double>(deg * (deg - 1));
}

}  // namespace

double clustering_coeff(const Graph& g, int node) {
  if (node < 0 || static_cast<std::size_t>(node) >= g.n) throw ContractError("node out of range");
  return local_clustering(g.adjacency(), node);
}

double mean_clustering_coeff(const Graph& g) {
  if (g.n == 0) return 0.0;
  const auto adj = g.adjacency();
  double s = 0.0;
  for (std::size_t v = 0; v < g.n; ++v) s += local_clustering(adj, static_cast<int>(v));
  return s / static_cast<double>(g.n);
}

double graph_density(const Graph& g) {
  if (g.n == 0) throw ContractError("density of an empty graph");
  if (g.n == 1) return 0.0;
  const double n = static_cast<double>(g.n);
  return 2.0 * static_cast<double>(g.edges.size()) / (n * (n - 1.0));
}

}  // namespace gprompt
