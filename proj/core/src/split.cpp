#include "gprompt/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gprompt/error.hpp"
#include "gprompt/properties.hpp"

namespace gprompt {

std::string to_string(ShiftProperty p) {
  switch (p) {
    case ShiftProperty::edge_homophily: return "edge_homophily";
    case ShiftProperty::pagerank: return "pagerank";
    case ShiftProperty::clustering_coeff: return "clustering_coeff";
    case ShiftProperty::graph_density: return "graph_density";
  }
  return "?";
}

std::string to_string(TaskKind t) { return t == TaskKind::graph ? "graph" : "node"; }

std::string to_string(Role r) {
  switch (r) {
    case Role::train: return "train";
    case Role::val: return "val";
    case Role::test: return "test";
  }
  return "?";
}

std::string to_string(Side s) { return s == Side::source ? "source" : "target"; }

ShiftProperty parse_shift_property(const std::string& name) {
  for (auto p : {ShiftProperty::edge_homophily, ShiftProperty::pagerank, ShiftProperty::clustering_coeff,
                 ShiftProperty::graph_density})
    if (to_string(p) == name) return p;
  throw UsageError("unknown shift property '" + name + "'");
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "graph") return TaskKind::graph;
  if (name == "node") return TaskKind::node;
  throw UsageError("unknown task '" + name + "' (expected graph or node)");
}

Role parse_role(const std::string& name) {
  for (auto r : {Role::train, Role::val, Role::test})
    if (to_string(r) == name) return r;
  throw FormatError("unknown role '" + name + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

HalfSplit weighted_half_split(std::span<const double> scores, std::uint64_t seed) {
  const std::size_t n = scores.size();
  if (n < 2) throw SplitError("weighted half split needs at least two items");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite split score");

  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> w(n, 1.0);
  if (hi > lo)
    for (std::size_t i = 0; i < n; ++i) w[i] = (scores[i] - lo) / (hi - lo) + 1e-3;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<bool> taken(n, false);
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  HalfSplit out;
  for (std::size_t draw = 0; draw < n / 2; ++draw) {
    const double u = unit(rng) * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      pick = i;  // falls through to the last available item on round-off
      acc += w[i];
      if (u < acc) break;
    }
    taken[pick] = true;
    total -= w[pick];
    out.source.push_back(pick);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!taken[i]) out.target.push_back(i);
  std::sort(out.source.begin(), out.source.end());
  return out;
}

std::map<std::size_t, Role> role_split(const std::vector<std::size_t>& ids, const RoleRatios& ratios,
                                       std::uint64_t seed) {
  const double r[3] = {ratios.train, ratios.val, ratios.test};
  for (double v : r)
    if (v < 0.0) throw SplitError("negative role ratio");
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw SplitError("role ratios must sum to 1");
  const std::size_t active = static_cast<std::size_t>(r[0] > 0) + (r[1] > 0) + (r[2] > 0);
  const std::size_t n = ids.size();
  if (n < active) throw SplitError("fewer ids than roles");

  std::size_t counts[3];
  for (int k = 0; k < 2; ++k) counts[k] = static_cast<std::size_t>(std::llround(r[k] * static_cast<double>(n)));
  counts[0] = std::min(counts[0], n);
  counts[1] = std::min(counts[1], n - counts[0]);
  counts[2] = n - counts[0] - counts[1];
  // Every role with a positive ratio receives at least one id.
  for (int k = 0; k < 3; ++k) {
    if (r[k] > 0 && counts[k] == 0) {
      const int donor = static_cast<int>(std::max_element(counts, counts + 3) - counts);
      --counts[donor];
      ++counts[k];
    }
  }

  std::vector<std::size_t> perm = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::map<std::size_t, Role> roles;
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k)
    for (std::size_t c = 0; c < counts[k]; ++c) roles[perm[pos++]] = static_cast<Role>(k);
  return roles;
}

std::vector<std::size_t> SplitManifest::ids(Side side, Role role) const {
  std::vector<std::size_t> out;
  for (auto id : side == Side::source ? source_ids : target_ids) {
    auto it = roles.find(id);
    if (it != roles.end() && it->second == role) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void SplitManifest::validate(std::size_t num_samples) const {
  std::set<std::size_t> seen;
  for (const auto* side : {&source_ids, &target_ids})
    for (auto id : *side) {
      if (id >= num_samples) throw FormatError("manifest id " + std::to_string(id) + " out of range");
      if (!seen.insert(id).second) throw FormatError("manifest id " + std::to_string(id) + " appears twice");
    }
  if (seen.size() != num_samples) throw FormatError("manifest does not cover every sample");
  for (auto& [id, role] : roles)
    if (!seen.count(id)) throw FormatError("role assigned to unknown id");
}

nlohmann::json manifest_to_json(const SplitManifest& m) {
  nlohmann::json roles = nlohmann::json::object();
  for (auto& [id, role] : m.roles) roles[std::to_string(id)] = to_string(role);
  return {{"seed", m.seed},
          {"property", to_string(m.property)},
          {"source", m.source_ids},
          {"target", m.target_ids},
          {"roles", roles}};
}

SplitManifest manifest_from_json(const nlohmann::json& j) {
  try {
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.property = parse_shift_property(j.at("property").get<std::string>());
    m.source_ids = j.at("source").get<std::vector<std::size_t>>();
    m.target_ids = j.at("target").get<std::vector<std::size_t>>();
    for (auto& [key, value] : j.at("roles").items())
      m.roles[static_cast<std::size_t>(std::stoull(key))] = parse_role(value.get<std::string>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

std::vector<double> graph_property_scores(const Dataset& ds, ShiftProperty p) {
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& g : ds.graphs) {
    switch (p) {
      case ShiftProperty::edge_homophily: out.push_back(edge_homophily(g)); break;
      case ShiftProperty::clustering_coeff: out.push_back(mean_clustering_coeff(g)); break;
      case ShiftProperty::graph_density: out.push_back(graph_density(g)); break;
      case ShiftProperty::pagerank:
        throw UsageError("pagerank is a node-level property; use it with the node task");
    }
  }
  return out;
}

std::vector<double> node_property_scores(const Graph& g, ShiftProperty p) {
  switch (p) {
    case ShiftProperty::pagerank: return pagerank(g);
    case ShiftProperty::clustering_coeff: {
      std::vector<double> out(g.n);
      for (std::size_t v = 0; v < g.n; ++v) out[v] = clustering_coeff(g, static_cast<int>(v));
      return out;
    }
    default: throw UsageError(to_string(p) + " is a graph-level property; use it with the graph task");
  }
}

SplitManifest make_manifest(std::span<const double> scores, ShiftProperty p, std::uint64_t seed,
                            const RoleRatios& ratios) {
  SplitManifest m;
  m.seed = seed;
  m.property = p;
  auto half = weighted_half_split(scores, derive_seed(seed, 0));
  m.source_ids = std::move(half.source);
  m.target_ids = std::move(half.target);
  for (auto& [id, role] : role_split(m.source_ids, ratios, derive_seed(seed, 1))) m.roles[id] = role;
  for (auto& [id, role] : role_split(m.target_ids, ratios, derive_seed(seed, 2))) m.roles[id] = role;
  return m;
}

}  // namespace gprompt
