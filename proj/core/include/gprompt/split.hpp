#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gprompt/graph.hpp"

namespace gprompt {

enum class ShiftProperty { edge_homophily, pagerank, clustering_coeff, graph_density };
enum class TaskKind { graph, node };
enum class Role { train, val, test };
enum class Side { source, target };

std::string to_string(ShiftProperty p);
std::string to_string(TaskKind t);
std::string to_string(Role r);
std::string to_string(Side s);
/// UsageError on unknown names.
ShiftProperty parse_shift_property(const std::string& name);
TaskKind parse_task_kind(const std::string& name);
Role parse_role(const std::string& name);

/// Independent child seed for a named stream of a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct HalfSplit {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

/// Draws floor(N/2) items into the source side without replacement, each
/// draw proportional to min-max-normalized score + 1e-3 over the items
/// still available. Identical scores fall back to uniform sampling.
/// Both output lists are sorted ascending.
HalfSplit weighted_half_split(std::span<const double> scores, std::uint64_t seed);

struct RoleRatios {
  double train = 0.6;
  double val = 0.1;
  double test = 0.3;

  bool operator==(const RoleRatios&) const = default;
};

inline constexpr RoleRatios kGraphTaskRatios{0.6, 0.1, 0.3};
inline constexpr RoleRatios kNodeTaskRatios{0.3, 0.1, 0.6};

/// Random permutation followed by a contiguous train/val/test cut.
std::map<std::size_t, Role> role_split(const std::vector<std::size_t>& ids, const RoleRatios& ratios,
                                       std::uint64_t seed);

struct SplitManifest {
  std::uint64_t seed = 0;
  ShiftProperty property = ShiftProperty::edge_homophily;
  std::vector<std::size_t> source_ids;
  std::vector<std::size_t> target_ids;
  std::map<std::size_t, Role> roles;

  /// Ids of one side holding one role, ascending.
  std::vector<std::size_t> ids(Side side, Role role) const;
  void validate(std::size_t num_samples) const;

  bool operator==(const SplitManifest&) const = default;
};

nlohmann::json manifest_to_json(const SplitManifest& m);
SplitManifest manifest_from_json(const nlohmann::json& j);

/// Per-graph scores for graph-level tasks. PageRank is a node property and
/// raises UsageError here; clustering uses the graph's mean coefficient.
std::vector<double> graph_property_scores(const Dataset& ds, ShiftProperty p);

/// Per-node scores for node-level tasks (pagerank or clustering_coeff).
std::vector<double> node_property_scores(const Graph& g, ShiftProperty p);

/// weighted_half_split followed by role_split on each side.
SplitManifest make_manifest(std::span<const double> scores, ShiftProperty p, std::uint64_t seed,
                            const RoleRatios& ratios);

}  // namespace gprompt
