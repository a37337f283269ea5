#include "gprompt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gprompt/error.hpp"

namespace gprompt {

namespace {

std::vector<double> gaussian_vector(std::size_t d, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(d);
  double s = 0.0;
  for (auto& x : v) {
    x = normal(rng);
    s += x * x;
  }
  s = std::sqrt(s);
  for (auto& x : v) x = s > 0.0 ? x * norm / s : 0.0;
  return v;
}

Graph synth_graph(const SynthConfig& cfg, int y, double h, const std::vector<std::vector<double>>& means,
                  std::mt19937_64& rng) {
  const std::size_t n = cfg.nodes_per_graph;
  const std::size_t C = cfg.num_classes;
  const auto majority = static_cast<std::size_t>(std::ceil(cfg.majority_fraction * static_cast<double>(n)));

  std::vector<int> node_y(n, y);
  std::uniform_int_distribution<std::size_t> other(0, C - 2);
  for (std::size_t v = majority; v < n; ++v) {
    const auto k = static_cast<int>(other(rng));
    node_y[v] = k >= y ? k + 1 : k;
  }
  std::shuffle(node_y.begin(), node_y.end(), rng);

  std::vector<Edge> same, cross;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      (node_y[u] == node_y[v] ? same : cross).emplace_back(static_cast<int>(u), static_cast<int>(v));
  std::shuffle(same.begin(), same.end(), rng);
  std::shuffle(cross.begin(), cross.end(), rng);

  const auto target = static_cast<std::size_t>(std::llround(cfg.target_degree * static_cast<double>(n) / 2.0));
  std::vector<Edge> edges;
  std::bernoulli_distribution pick_same(h);
  std::size_t attempts = 0;
  while (edges.size() < target && (!same.empty() || !cross.empty()) && attempts++ < 50 * (target + 1)) {
    auto& pool = pick_same(rng) ? same : cross;
    if (pool.empty()) continue;
    edges.push_back(pool.back());
    pool.pop_back();
  }

  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  Matrix x(n, cfg.feature_dim);
  for (std::size_t v = 0; v < n; ++v) {
    const auto label = static_cast<std::size_t>(node_y[v]);
    for (std::size_t j = 0; j < cfg.feature_dim; ++j)
      x(v, j) = (j == label ? 1.0 : 0.0) + means[label][j] + noise(rng);
  }
  return Graph::make(n, std::move(edges), std::move(x), y, std::move(node_y));
}

}  // namespace

Dataset synth_shift_dataset(const SynthConfig& cfg) {
  const auto [lo, hi] = cfg.homophily_range;
  if (!(hi > lo)) throw ConfigError("homophily range needs hi > lo");
  if (lo < 0.0 || hi > 1.0) throw ConfigError("homophily range must lie in [0, 1]");
  if (cfg.num_classes < 2) throw ConfigError("synthetic data needs at least two classes");
  if (cfg.feature_dim < cfg.num_classes) throw ConfigError("feature_dim must be >= num_classes for one-hot labels");
  if (cfg.nodes_per_graph < 1) throw ConfigError("nodes_per_graph must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < cfg.num_classes; ++c)
    means.push_back(gaussian_vector(cfg.feature_dim, cfg.class_mean_scale, rng));

  Dataset ds;
  ds.name = "synth";
  ds.num_classes = cfg.num_classes;
  ds.feature_dim = cfg.feature_dim;
  std::uniform_int_distribution<int> cls(0, static_cast<int>(cfg.num_classes) - 1);
  std::uniform_real_distribution<double> homophily(lo, hi);
  for (std::size_t i = 0; i < cfg.n_graphs; ++i) {
    const int y = cls(rng);
    const double h = homophily(rng);
    ds.graphs.push_back(synth_graph(cfg, y, h, means, rng));
  }
  return ds;
}

FeatureShift random_feature_shift(std::size_t feature_dim, std::size_t num_classes, double offset_norm,
                                  double class_offset_norm, double mask_prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureShift s;
  s.mask_prob = mask_prob;
  s.seed = seed ^ 0x9e3779b97f4a7c15ULL;
  if (offset_norm != 0.0) s.offset = gaussian_vector(feature_dim, offset_norm, rng);
  if (class_offset_norm != 0.0)
    for (std::size_t c = 0; c < num_classes; ++c) s.class_offset.push_back(gaussian_vector(feature_dim, class_offset_norm, rng));
  return s;
}

Dataset apply_feature_shift(const Dataset& ds, const FeatureShift& shift) {
  const std::size_t d = ds.feature_dim;
  if (!shift.offset.empty() && shift.offset.size() != d) throw DimensionError("shift offset has wrong dimension");
  for (const auto& co : shift.class_offset)
    if (co.size() != d) throw DimensionError("class shift offset has wrong dimension");

  Dataset out = ds;
  std::mt19937_64 rng(shift.seed);
  std::bernoulli_distribution mask(shift.mask_prob);
  for (auto& g : out.graphs) {
    std::vector<double> delta(d, 0.0);
    if (!shift.offset.empty())
      for (std::size_t j = 0; j < d; ++j) delta[j] += shift.offset[j];
    if (!shift.class_offset.empty() && g.y) {
      const auto& co = shift.class_offset.at(static_cast<std::size_t>(*g.y));
      for (std::size_t j = 0; j < d; ++j) delta[j] += co[j];
    }
    std::vector<bool> masked(d, false);
    if (shift.mask_prob > 0.0)
      for (std::size_t j = 0; j < d; ++j) masked[j] = mask(rng);
    for (std::size_t v = 0; v < g.n; ++v)
      for (std::size_t j = 0; j < d; ++j) g.x(v, j) = masked[j] ? 0.0 : g.x(v, j) + delta[j];
  }
  return out;
}

}  // namespace gprompt
