#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gprompt {

/// Plain row-major matrix used for immutable dataset storage.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

using Edge = std::pair<int, int>;

/// Undirected simple graph with node features and optional labels.
///
/// Edges are stored once with u < v, sorted, without duplicates or
/// self-loops. `node_y` is either empty or holds one label per node.
struct Graph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  Matrix x;
  std::optional<int> y;
  std::vector<int> node_y;

  /// Canonicalizes the edge list (orders endpoints, sorts, dedupes, drops
  /// self-loops) and validates the result.
  static Graph make(std::size_t n, std::vector<Edge> edges, Matrix x, std::optional<int> y = std::nullopt,
                    std::vector<int> node_y = {});

  std::size_t num_edges() const { return edges.size(); }
  std::size_t feature_dim() const { return x.cols; }
  bool has_node_labels() const { return !node_y.empty(); }

  /// Neighbor lists, sorted ascending.
  std::vector<std::vector<int>> adjacency() const;

  /// Throws ContractError if any structural invariant is broken.
  void validate() const;

  bool operator==(const Graph&) const = default;
};

struct Dataset {
  std::string name;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::vector<Graph> graphs;

  std::size_t size() const { return graphs.size(); }
  void validate() const;
  /// Graph labels in order; every graph must be labeled.
  std::vector<int> labels() const;
  /// Subset in the order given by `ids`.
  Dataset subset(const std::vector<std::size_t>& ids) const;

  bool operator==(const Dataset&) const = default;
};

struct ClassStats {
  std::vector<std::size_t> counts;
  double imbalance_ratio = 1.0;     // f_max / f_min
  double normalized_entropy = 1.0;  // H / log C
};

/// Induced subgraph on the k-hop ball around `center`, nodes in BFS
/// discovery order with the center first. Label = node_y[center] when
/// node labels exist.
Graph ego_subgraph(const Graph& g, int center, int hops);

/// Induced subgraph on `nodes` (in the given order); node labels follow.
Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes);

/// One ego subgraph per node. Without `num_classes`, C is the number of
/// distinct node labels and labels are remapped to [0, C) in sorted order.
/// With it, labels are kept and must lie in [0, num_classes); use this when
/// unifying a piece of a larger graph so class ids stay global.
Dataset unify_node_task(const Graph& g, int hops = 2, std::optional<std::size_t> num_classes = std::nullopt,
                        std::string name = "node_task");

ClassStats class_stats(const Dataset& ds);
ClassStats class_stats(const std::vector<std::size_t>& counts);

}  // namespace gprompt
