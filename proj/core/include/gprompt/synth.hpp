#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gprompt/graph.hpp"

namespace gprompt {

struct SynthConfig {
  std::size_t n_graphs = 200;
  std::size_t nodes_per_graph = 16;
  std::size_t num_classes = 3;
  std::size_t feature_dim = 8;
  std::pair<double, double> homophily_range{0.0, 1.0};
  std::uint64_t seed = 0;
  double majority_fraction = 0.6;
  double target_degree = 4.0;
  double noise_sigma = 0.3;
  double class_mean_scale = 0.5;

  bool operator==(const SynthConfig&) const = default;
};

/// Synthetic graph-classification set with per-graph edge homophily drawn
/// from `homophily_range`.
///
/// Each graph gets a class y and a target homophily h. A majority block of
/// nodes carries label y, the rest carry the other labels uniformly. Each
/// new edge is a same-label pair with probability h and a cross-label pair
/// otherwise, drawn without replacement, until the average degree reaches
/// `target_degree` or the chosen pools run dry. Node features are
/// one-hot(node label) + the mean vector of the node's class + N(0, σ²).
/// Throws ConfigError when hi <= lo, C < 2 or feature_dim < C.
Dataset synth_shift_dataset(const SynthConfig& cfg);

/// Covariate shift applied to node features: a global offset, a per-class
/// offset keyed by the graph label, and per-graph random column masking.
struct FeatureShift {
  std::vector<double> offset;                     // empty = none
  std::vector<std::vector<double>> class_offset;  // empty = none
  double mask_prob = 0.0;
  std::uint64_t seed = 0;
};

/// Offsets with the given Euclidean norms along seeded Gaussian directions.
FeatureShift random_feature_shift(std::size_t feature_dim, std::size_t num_classes, double offset_norm,
                                  double class_offset_norm, double mask_prob, std::uint64_t seed);

Dataset apply_feature_shift(const Dataset& ds, const FeatureShift& shift);

}  // namespace gprompt
