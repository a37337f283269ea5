#pragma once

#include <vector>

#include "gprompt/graph.hpp"

namespace gprompt {

/// Graphs without edges carry no homophily signal and report this midpoint.
inline constexpr double kEdgelessHomophily = 0.5;

/// Fraction of edges whose endpoints share a node label.
double edge_homophily(const Graph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;
  int max_iter = 1000;
};

/// Power iteration on the undirected graph (every edge is two arcs) with
/// uniform teleport. Dangling nodes spread their mass uniformly. Throws
/// NumericError if the L1 change is still above tol after max_iter sweeps.
std::vector<double> pagerank(const Graph& g, const PageRankOptions& opt = {});

/// Local clustering coefficient; 0 when the node has fewer than two neighbors.
double clustering_coeff(const Graph& g, int node);

/// Average local clustering coefficient over all nodes (0 for n = 0).
double mean_clustering_coeff(const Graph& g);

/// 2|E| / (n(n-1)); 0 for a single node.
double graph_density(const Graph& g);

}  // namespace gprompt
