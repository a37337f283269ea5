#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"
#include "gprompt/experiment.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace gprompt {
namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.synth.n_graphs = 40;
  c.synth.nodes_per_graph = 8;
  c.synth.feature_dim = 4;
  c.hidden_dim = 8;
  c.pretrain.epochs = 2;
  c.prompt.epochs = 2;
  c.prompt.n_t = 2;
  c.n_seeds = 2;
  c.n_trials = 2;
  return c;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

TEST(Config, ParseBasics) {
  ExperimentConfig c = parse_config(
      "# comment\n"
      "task = node   # trailing\n"
      "base_gnn = gat\n"
      "prompt.tau = 0.9\n"
      "prompt.threshold_mode = class_dynamic\n"
      "prompt.aug_kind = edge_drop\n"
      "\n"
      "n_seeds = 3\n");
  EXPECT_EQ(c.task, TaskKind::node);
  EXPECT_EQ(c.base_gnn, GnnKind::gat);
  EXPECT_EQ(c.prompt.tau, 0.9);
  EXPECT_EQ(c.prompt.threshold_mode, ThresholdMode::class_dynamic);
  EXPECT_EQ(c.prompt.aug_kind, AugmentKind::edge_drop);
  EXPECT_EQ(c.n_seeds, 3u);
  EXPECT_EQ(c.ratios, kNodeTaskRatios);
  EXPECT_EQ(parse_config("").ratios, kGraphTaskRatios);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("prompt.tau = high\n"), ConfigError);
  EXPECT_THROW(parse_config("n_seeds = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("base_gnn = gin\n"), ConfigError);
  EXPECT_THROW(parse_config("n_seeds = 0\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("ratios.train = 0.9\n").validate(), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.txt"), IngestionError);
}

TEST(Config, RoundTrip) {
  ExperimentConfig c = tiny_config();
  c.dataset = "data/x.json";
  c.task = TaskKind::node;
  c.property = ShiftProperty::pagerank;
  c.ratios = kNodeTaskRatios;
  c.prompt.tau = 0.123456789012345678;
  c.prompt.lr = 1e-3;
  c.prompt.label_fraction = 0.1;
  c.shift.class_offset_norm = 1.25;
  c.synth.homophily_range = {0.2, 0.8};
  const std::string text = serialize_config(c);
  ExperimentConfig back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), text);
}

TEST(Config, EveryGridValueExpressible) {
  ExperimentConfig c;
  for (const char* lr : {"0.01", "0.001"}) EXPECT_NO_THROW(apply_setting(c, "prompt.lr", lr));
  for (const char* nt : {"10", "20", "30", "50"}) EXPECT_NO_THROW(apply_setting(c, "prompt.n_t", nt));
  for (const char* tau : {"0.5", "0.7", "0.9", "0.95"}) EXPECT_NO_THROW(apply_setting(c, "prompt.tau", tau));
  EXPECT_NO_THROW(apply_setting(c, "prompt.lambda3", "0.5"));
  EXPECT_THROW(apply_setting(c, "prompt.unknown", "1"), ConfigError);
}

TEST(Split, NodeTaskMaterializesEgoGraphs) {
  SynthConfig sc;
  sc.n_graphs = 1;
  sc.nodes_per_graph = 40;
  Dataset one = synth_shift_dataset(sc);
  SplitManifest m = make_split(one, TaskKind::node, ShiftProperty::pagerank, 3, kNodeTaskRatios);
  EXPECT_EQ(m.source_ids.size(), 20u);
  PreparedSplit p = materialize_split(one, m, TaskKind::node, 2, ShiftSpec{});
  EXPECT_EQ(p.source.train.size() + p.source.val.size() + p.source.test.size(), 20u);
  EXPECT_EQ(p.target.train.size() + p.target.val.size() + p.target.test.size(), 20u);
  EXPECT_EQ(p.source.train.size(), 6u);
  EXPECT_EQ(p.source.test.size(), 12u);
  const auto& ny = one.graphs[0].node_y;
  for (std::size_t k = 0; k < p.source.train.size(); ++k)
    EXPECT_EQ(*p.source.train.graphs[k].y, ny[p.source.train_ids[k]]);
  EXPECT_THROW(make_split(one, TaskKind::graph, ShiftProperty::pagerank, 3, kGraphTaskRatios), UsageError);
}

TEST(Split, ShiftTouchesTargetOnly) {
  ExperimentConfig c = tiny_config();
  Dataset ds = experiment_dataset(c, 1);
  SplitManifest m = make_split(ds, TaskKind::graph, ShiftProperty::edge_homophily, 2, kGraphTaskRatios);
  PreparedSplit plain = materialize_split(ds, m, TaskKind::graph, 2, ShiftSpec{});
  PreparedSplit moved = materialize_split(ds, m, TaskKind::graph, 2, ShiftSpec{1.0, 0.5, 0.2, 9});
  EXPECT_EQ(plain.source.train, moved.source.train);
  EXPECT_EQ(plain.source.test, moved.source.test);
  EXPECT_NE(plain.target.train, moved.target.train);
  EXPECT_EQ(plain.target.train.labels(), moved.target.train.labels());
}

TEST(Run, DeterministicCsv) {
  ExperimentConfig c = tiny_config();
  auto csv = [&] {
    std::ostringstream os;
    write_results_csv(os, run_experiment(c));
    return os.str();
  };
  const std::string a = csv();
  EXPECT_EQ(a, csv());
  auto rows = lines_of(a);
  ASSERT_EQ(rows.size(), 1u + 2u * 4u);
  EXPECT_EQ(rows[0], "seed,trial,method,f1,imp");
}

TEST(Run, ProtocolRowCount) {
  ExperimentConfig c = tiny_config();
  c.synth.n_graphs = 24;
  c.pretrain.epochs = 1;
  c.prompt.epochs = 1;
  c.n_seeds = 10;
  c.n_trials = 5;
  ExperimentResult r = run_experiment(c);
  EXPECT_TRUE(r.failures.empty());
  ASSERT_EQ(r.runs.size(), 50u);
  std::set<std::pair<std::uint64_t, std::size_t>> keys;
  for (const auto& run : r.runs) {
    keys.emplace(run.seed, run.trial);
    EXPECT_TRUE(run.frozen_intact);
  }
  EXPECT_EQ(keys.size(), 50u);
  auto s = summarize(r);
  EXPECT_EQ(s[0].n, 50u);
  EXPECT_EQ(s[1].n, 50u);
}

TEST(Run, InertPromptingMatchesBase) {
  ExperimentConfig c = tiny_config();
  c.prompt.lambda1 = 0.0;
  c.prompt.lambda2 = 0.0;
  c.prompt.tau = 1.0;
  c.prompt.lr = 0.0;
  ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.runs.size(), 4u);
  for (const auto& run : r.runs) EXPECT_EQ(run.prompt_f1, run.base_f1);
}

TEST(Run, FailingSeedIsSkippedNotFatal) {
  ExperimentConfig c = tiny_config();
  c.synth.n_graphs = 3;
  c.n_trials = 1;
  std::ostringstream log;
  ExperimentResult r = run_experiment(c, &log);
  EXPECT_EQ(r.failures.size(), 2u);
  EXPECT_TRUE(r.runs.empty());
  EXPECT_NE(log.str().find("skipped seed 0 trial 0"), std::string::npos);
}

TEST(Summary, RecomputableFromRows) {
  ExperimentResult r;
  r.runs = {{0, 0, 0.5, 0.6, 1.0, true}, {0, 1, 0.4, 0.45, 1.0, true}, {1, 0, 0.6, 0.66, 1.0, true}};
  std::ostringstream rows, summary;
  write_results_csv(rows, r);
  write_summary_csv(summary, r);

  double sb = 0, sp = 0, qb = 0, qp = 0;
  int nb = 0, np = 0;
  auto rl = lines_of(rows.str());
  for (std::size_t i = 1; i < rl.size(); ++i) {
    auto f = fields_of(rl[i]);
    const double v = std::stod(f[3]);
    if (f[2] == "base") {
      sb += v;
      qb += v * v;
      ++nb;
      EXPECT_EQ(f[4], "0");
    } else {
      sp += v;
      qp += v * v;
      ++np;
    }
  }
  auto sl = lines_of(summary.str());
  ASSERT_EQ(sl.size(), 3u);
  EXPECT_EQ(sl[0], "method,n,f1_mean,f1_std,imp,cell");
  auto base = fields_of(sl[1]), ug = fields_of(sl[2]);
  const double mb = sb / nb, mp = sp / np;
  EXPECT_NEAR(std::stod(base[2]), mb, 1e-9);
  EXPECT_NEAR(std::stod(base[3]), std::sqrt(qb / nb - mb * mb), 1e-9);
  EXPECT_NEAR(std::stod(ug[2]), mp, 1e-9);
  EXPECT_NEAR(std::stod(ug[3]), std::sqrt(qp / np - mp * mp), 1e-9);
  EXPECT_NEAR(std::stod(ug[4]), 100.0 * (mp - mb) / mb, 1e-9);
  EXPECT_EQ(base[5], "50.0\\std{8.2}");
}

TEST(Summary, PerRunImp) {
  ExperimentResult r;
  r.runs = {{0, 0, 0.477, 0.491, 1.0, true}, {0, 1, 0.0, 0.3, 1.0, true}};
  std::ostringstream os;
  write_results_csv(os, r);
  auto rl = lines_of(os.str());
  EXPECT_NEAR(std::stod(fields_of(rl[2])[4]), 100.0 * (0.491 - 0.477) / 0.477, 1e-12);
  EXPECT_EQ(fields_of(rl[4])[4], "");
}

TEST(Outputs, FilesWritten) {
  fs::path dir = fs::temp_directory_path() / "gprompt_experiment_outputs";
  fs::remove_all(dir);
  ExperimentConfig c = tiny_config();
  ExperimentResult r;
  r.runs = {{0, 0, 0.5, 0.6, 1.0, true}};
  write_experiment_outputs(dir, c, r);
  for (const char* f : {"results.csv", "summary.csv", "config.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(load_config(dir / "config.txt"), c);
}

TEST(Embeddings, RowsAndColumns) {
  SynthConfig sc;
  sc.n_graphs = 10;
  Dataset ds = synth_shift_dataset(sc);
  GnnModel m(ModelSpec{GnnKind::gcn, ds.feature_dim, 6, 2, ds.num_classes, 0.2}, 1);
  std::vector<EmbeddingEntry> entries;
  for (std::size_t i = 0; i < ds.size(); ++i) entries.push_back({i, i % 2 ? Side::target : Side::source, &ds.graphs[i]});

  std::ostringstream zero_os;
  write_embeddings_csv(zero_os, m, AdditivePrompt(2, ds.feature_dim, 0, 0.0), entries);
  auto rows = lines_of(zero_os.str());
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(fields_of(rows[0]).size(), 4u + 6u);
  for (std::size_t k = 1; k < rows.size(); k += 2) {
    auto a = fields_of(rows[k]), b = fields_of(rows[k + 1]);
    EXPECT_EQ(a[3], "non-prompted");
    EXPECT_EQ(b[3], "prompted");
    EXPECT_EQ(a.size(), 10u);
    for (std::size_t j = 4; j < a.size(); ++j) EXPECT_EQ(a[j], b[j]);
  }

  std::ostringstream os;
  write_embeddings_csv(os, m, AdditivePrompt(2, ds.feature_dim, 0, 1.0), entries);
  auto moved = lines_of(os.str());
  EXPECT_NE(fields_of(moved[1])[4], fields_of(moved[2])[4]);
}

TEST(Datasets, LoadAnyDispatches) {
  EXPECT_EQ(load_any_dataset(fs::path(GPROMPT_FIXTURE_DIR) / "TINY").size(), 2u);
  SynthConfig sc;
  sc.n_graphs = 3;
  fs::path f = fs::temp_directory_path() / "gprompt_experiment_any.json";
  save_dataset(synth_shift_dataset(sc), f);
  EXPECT_EQ(load_any_dataset(f).size(), 3u);
}

}  // namespace
}  // namespace gprompt
