#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gprompt/gnn.hpp"
#include "gprompt/graph.hpp"
#include "gprompt/prompt.hpp"
#include "gprompt/split.hpp"
#include "gprompt/synth.hpp"
#include "gprompt/trainer.hpp"

namespace gprompt {

/// Covariate shift applied to the target side only.
struct ShiftSpec {
  double offset_norm = 0.0;
  double class_offset_norm = 0.0;
  double mask_prob = 0.0;
  std::uint64_t seed = 0;

  bool active() const { return offset_norm > 0.0 || class_offset_norm > 0.0 || mask_prob > 0.0; }
  bool operator==(const ShiftSpec&) const = default;
};

struct ExperimentConfig {
  std::string dataset;  // TU directory or native JSON; empty = synthetic
  SynthConfig synth;
  TaskKind task = TaskKind::graph;
  ShiftProperty property = ShiftProperty::edge_homophily;
  GnnKind base_gnn = GnnKind::gcn;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  int hops = 2;
  PretrainOptions pretrain;
  PromptConfig prompt;
  RoleRatios ratios = kGraphTaskRatios;
  ShiftSpec shift;
  std::size_t n_seeds = 10;
  std::size_t n_trials = 5;
  std::uint64_t seed = 0;
  std::string output_dir = "results";

  /// ConfigError on invalid values.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

// Config files are flat `key = value` lines; `#` starts a comment.
// Keys mirror serialize_config(). Unknown keys raise ConfigError.
// When no ratios.* key is present the task's default ratios apply.

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);
/// Sets one key; used for files and for command-line overrides.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const ExperimentConfig& cfg);

/// A TU directory or a native JSON file.
Dataset load_any_dataset(const std::filesystem::path& path);
/// The configured dataset, or a synthetic one seeded from `seed`.
Dataset experiment_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

struct SideData {
  Dataset train, val, test;
  // Manifest ids parallel to the graphs of each role.
  std::vector<std::size_t> train_ids, val_ids, test_ids;
};

struct PreparedSplit {
  SplitManifest manifest;
  SideData source, target;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
};

/// Property scores over graphs (graph task) or over the nodes of the single
/// input graph (node task).
std::vector<double> split_scores(const Dataset& ds, TaskKind task, ShiftProperty p);
SplitManifest make_split(const Dataset& ds, TaskKind task, ShiftProperty p, std::uint64_t seed,
                         const RoleRatios& ratios);
/// Builds the six role datasets from a manifest. The node task turns every
/// node of a side into its ego subgraph inside that side's induced graph.
PreparedSplit materialize_split(const Dataset& ds, const SplitManifest& m, TaskKind task, int hops,
                                const ShiftSpec& shift);

struct RunRecord {
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  double base_f1 = 0.0;
  double prompt_f1 = 0.0;
  double source_test_f1 = 0.0;
  bool frozen_intact = true;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<std::string> failures;
};

/// Pretrain on source train/val, evaluate the BaseModel on target test,
/// train a prompt on target train/val and evaluate it on target test.
RunRecord run_trial(const ExperimentConfig& cfg, const PreparedSplit& split, std::uint64_t seed, std::size_t trial);

/// Every (seed, trial) pair. A failing pair is recorded in `failures` and
/// reported on `log`; the remaining pairs still run.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// `seed,trial,method,f1,imp` with method base or ugprompt, f1 as a
/// fraction and imp in percent relative to the base row of the same run.
void write_results_csv(std::ostream& os, const ExperimentResult& r);

struct SummaryRow {
  std::string method;
  std::size_t n = 0;
  double f1_mean = 0.0;
  double f1_std = 0.0;  // population standard deviation
  double imp = 0.0;     // from the two mean F1 values
};
std::vector<SummaryRow> summarize(const ExperimentResult& r);
/// `method,n,f1_mean,f1_std,imp,cell` with cell like `49.1\std{0.6}` (percent).
void write_summary_csv(std::ostream& os, const ExperimentResult& r);

/// Writes results.csv, summary.csv and config.txt into `dir`.
void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                              const ExperimentResult& r);

struct EmbeddingEntry {
  std::size_t id = 0;
  Side side = Side::source;
  const Graph* graph = nullptr;
};

/// `id,side,label,variant,z0..z{d-1}`; one non-prompted and one prompted row
/// per entry.
void write_embeddings_csv(std::ostream& os, const GnnModel& model, const PromptFunction& prompt,
                          const std::vector<EmbeddingEntry>& entries);

}  // namespace gprompt
