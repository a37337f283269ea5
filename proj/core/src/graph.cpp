#include "gprompt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>

#include "gprompt/error.hpp"

namespace gprompt {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw DimensionError("matrix data length does not match shape");
}

Graph Graph::make(std::size_t n, std::vector<Edge> edges, Matrix x, std::optional<int> y, std::vector<int> node_y) {
  Graph g;
  g.n = n;
  g.edges.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u == v) continue;
    g.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.x = std::move(x);
  g.y = y;
  g.node_y = std::move(node_y);
  g.validate();
  return g;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

void Graph::validate() const {
  if (x.rows != n)
    throw ContractError("feature rows " + std::to_string(x.rows) + " != node count " + std::to_string(n));
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
      throw ContractError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    if (u == v) throw ContractError("self-loop stored at node " + std::to_string(u));
  }
  if (!node_y.empty() && node_y.size() != n) throw ContractError("node label count != node count");
}

void Dataset::validate() const {
  for (const auto& g : graphs) {
    g.validate();
    if (g.feature_dim() != feature_dim) throw ContractError("graph feature dim differs from dataset feature dim");
    if (g.y && (*g.y < 0 || static_cast<std::size_t>(*g.y) >= num_classes))
      throw ContractError("graph label " + std::to_string(*g.y) + " outside [0, C)");
  }
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    if (!g.y) throw ContractError("dataset contains an unlabeled graph");
    out.push_back(*g.y);
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& ids) const {
  Dataset out{name, num_classes, feature_dim, {}};
  out.graphs.reserve(ids.size());
  for (auto id : ids) out.graphs.push_back(graphs.at(id));
  return out;
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  std::unordered_map<int, int> local;
  local.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) local.emplace(nodes[i], static_cast<int>(i));
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges) {
    auto iu = local.find(u), iv = local.find(v);
    if (iu != local.end() && iv != local.end()) edges.emplace_back(iu->second, iv->second);
  }
  Matrix x(nodes.size(), g.x.cols);
  std::vector<int> node_y;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::copy_n(g.x.data.begin() + static_cast<std::ptrdiff_t>(nodes[i] * g.x.cols), g.x.cols,
                x.data.begin() + static_cast<std::ptrdiff_t>(i * g.x.cols));
    if (g.has_node_labels()) node_y.push_back(g.node_y[nodes[i]]);
  }
  return Graph::make(nodes.size(), std::move(edges), std::move(x), std::nullopt, std::move(node_y));
}

Graph ego_subgraph(const Graph& g, int center, int hops) {
  if (center < 0 || static_cast<std::size_t>(center) >= g.n) throw ContractError("ego center out of range");
  if (hops < 1) throw ContractError("ego subgraph needs at least one hop");
  const auto adj = g.adjacency();
  std::vector<int> depth(g.n, -1);
  std::vector<int> order{center};
  std::deque<int> queue{center};
  depth[center] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (depth[u] == hops) continue;
    for (int v : adj[u]) {
      if (depth[v] >= 0) continue;
      depth[v] = depth[u] + 1;
      order.push_back(v);
      queue.push_back(v);
    }
  }
  Graph sub = induced_subgraph(g, order);
  if (g.has_node_labels()) sub.y = g.node_y[center];
  return sub;
}

Dataset unify_node_task(const Graph& g, int hops, std::optional<std::size_t> num_classes, std::string name) {
  if (!g.has_node_labels()) throw ContractError("node-task unification requires node labels");
  std::map<int, int> remap;
  if (num_classes) {
    for (int l : g.node_y)
      if (l < 0 || static_cast<std::size_t>(l) >= *num_classes)
        throw ContractError("node label " + std::to_string(l) + " outside [0, num_classes)");
  } else {
    for (int l : g.node_y) remap.emplace(l, 0);
    int next = 0;
    for (auto& [label, id] : remap) id = next++;
  }
  Dataset ds;
  ds.name = std::move(name);
  ds.num_classes = num_classes ? *num_classes : remap.size();
  ds.feature_dim = g.x.cols;
  ds.graphs.reserve(g.n);
  for (std::size_t v = 0; v < g.n; ++v) {
    Graph sub = ego_subgraph(g, static_cast<int>(v), hops);
    if (!num_classes) sub.y = remap.at(*sub.y);
    ds.graphs.push_back(std::move(sub));
  }
  return ds;
}

ClassStats class_stats(const std::vector<std::size_t>& counts) {
  if (counts.size() < 2) throw StatsError("class statistics need at least two classes");
  ClassStats st;
  st.counts = counts;
  std::size_t total = 0, fmin = counts.front(), fmax = counts.front();
  for (auto c : counts) {
    total += c;
    fmin = std::min(fmin, c);
    fmax = std::max(fmax, c);
  }
  if (fmin == 0) throw StatsError("a class has zero samples; imbalance ratio undefined");
  st.imbalance_ratio = static_cast<double>(fmax) / static_cast<double>(fmin);
  double h = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  st.normalized_entropy = h / std::log(static_cast<double>(counts.size()));
  // Equal counts must report exactly 1 for both.
  if (fmin == fmax) st.normalized_entropy = 1.0;
  return st;
}

ClassStats class_stats(const Dataset& ds) {
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (int y : ds.labels()) counts.at(static_cast<std::size_t>(y))++;
  return class_stats(counts);
}

}  // namespace gprompt
