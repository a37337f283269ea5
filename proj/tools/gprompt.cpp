// gprompt: command-line front end for splitting, pretraining, prompt
// training, evaluation and full seeded experiments.
//
// Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gprompt/checkpoint.hpp"
#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"
#include "gprompt/experiment.hpp"
#include "gprompt/metrics.hpp"
#include "gprompt/synth.hpp"
#include "gprompt/trainer.hpp"

namespace gp = gprompt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct SplitArgs {
  std::string dataset;
  std::string manifest;
  std::string task = "graph";
  int hops = 2;
  double shift_offset = 0.0;
  double shift_class_offset = 0.0;
  double shift_mask = 0.0;
  std::uint64_t shift_seed = 0;
};

void add_split_args(CLI::App* cmd, SplitArgs& a) {
  cmd->add_option("--dataset", a.dataset, "TU directory or native JSON dataset")->required();
  cmd->add_option("--manifest", a.manifest, "split manifest JSON")->required();
  cmd->add_option("--task", a.task, "graph or node")->capture_default_str();
  cmd->add_option("--hops", a.hops, "ego-graph radius for the node task")->capture_default_str();
  cmd->add_option("--shift-offset", a.shift_offset, "norm of a global feature offset on the target side");
  cmd->add_option("--shift-class-offset", a.shift_class_offset, "norm of per-class feature offsets on the target");
  cmd->add_option("--shift-mask", a.shift_mask, "per-graph column mask probability on the target");
  cmd->add_option("--shift-seed", a.shift_seed, "seed of the target shift");
}

gp::PreparedSplit load_split(const SplitArgs& a) {
  const gp::Dataset ds = gp::load_any_dataset(a.dataset);
  const gp::SplitManifest m = gp::manifest_from_json(gp::read_json_file(a.manifest));
  gp::ShiftSpec shift{a.shift_offset, a.shift_class_offset, a.shift_mask, a.shift_seed};
  return gp::materialize_split(ds, m, gp::parse_task_kind(a.task), a.hops, shift);
}

gp::GnnModel load_checkpoint_or_usage(const std::string& path) {
  if (!std::filesystem::exists(path)) throw gp::UsageError("model checkpoint not found: " + path);
  return gp::load_model(path);
}

std::string pct(double f1) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", f1);
  return buf;
}

void add_prompt_args(CLI::App* cmd, gp::PromptConfig& c, std::string& mode, std::string& aug) {
  cmd->add_option("--tau", c.tau)->capture_default_str();
  cmd->add_option("--threshold-mode", mode, "fixed or class_dynamic")->capture_default_str();
  cmd->add_option("--lambda1", c.lambda1)->capture_default_str();
  cmd->add_option("--lambda2", c.lambda2)->capture_default_str();
  cmd->add_option("--lambda3", c.lambda3)->capture_default_str();
  cmd->add_option("--p-w", c.p_w)->capture_default_str();
  cmd->add_option("--p-s", c.p_s)->capture_default_str();
  cmd->add_option("--aug", aug, "feature_mask or edge_drop")->capture_default_str();
  cmd->add_option("--n-t", c.n_t, "number of prompt tokens")->capture_default_str();
  cmd->add_option("--lr", c.lr)->capture_default_str();
  cmd->add_option("--lr-disc", c.lr_disc)->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd->add_option("--epochs", c.epochs)->capture_default_str();
  cmd->add_option("--seed", c.seed)->capture_default_str();
  cmd->add_option("--label-fraction", c.label_fraction)->capture_default_str();
}

std::string output_dir(const std::string& configured) {
  if (const char* env = std::getenv("GPROMPT_OUTPUT_DIR"); env && *env) return env;
  return configured;
}

int run(int argc, char** argv) {
  CLI::App app{"Unsupervised graph prompting on a frozen GNN"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic graph-classification dataset");
  gp::SynthConfig sc;
  std::string synth_out;
  double h_min = 0.0, h_max = 1.0;
  double s_off = 0.0, s_class = 0.0, s_mask = 0.0;
  synth->add_option("--out", synth_out, "output JSON file")->required();
  synth->add_option("--n-graphs", sc.n_graphs)->capture_default_str();
  synth->add_option("--nodes", sc.nodes_per_graph)->capture_default_str();
  synth->add_option("--classes", sc.num_classes)->capture_default_str();
  synth->add_option("--dim", sc.feature_dim)->capture_default_str();
  synth->add_option("--h-min", h_min)->capture_default_str();
  synth->add_option("--h-max", h_max)->capture_default_str();
  synth->add_option("--degree", sc.target_degree)->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();
  synth->add_option("--shift-offset", s_off, "apply a global feature offset of this norm");
  synth->add_option("--shift-class-offset", s_class, "apply per-class feature offsets of this norm");
  synth->add_option("--shift-mask", s_mask, "apply per-graph column masking");
  synth->callback([&] {
    sc.homophily_range = {h_min, h_max};
    gp::Dataset ds = gp::synth_shift_dataset(sc);
    if (s_off > 0.0 || s_class > 0.0 || s_mask > 0.0)
      ds = gp::apply_feature_shift(
          ds, gp::random_feature_shift(ds.feature_dim, ds.num_classes, s_off, s_class, s_mask, sc.seed + 1));
    gp::save_dataset(ds, synth_out);
    std::cout << "wrote " << ds.size() << " graphs to " << synth_out << "\n";
  });

  // split
  auto* split = app.add_subcommand("split", "covariate-shift split into source and target halves");
  std::string sp_dataset, sp_property, sp_task = "graph", sp_out = "manifest.json";
  std::uint64_t sp_seed = 0;
  std::vector<double> sp_ratios;
  split->add_option("--dataset", sp_dataset)->required();
  split->add_option("--property", sp_property, "edge_homophily, clustering_coeff, graph_density or pagerank")
      ->required();
  split->add_option("--seed", sp_seed)->capture_default_str();
  split->add_option("--task", sp_task, "graph or node")->capture_default_str();
  split->add_option("--ratios", sp_ratios, "train val test")->expected(3);
  split->add_option("--out", sp_out)->capture_default_str();
  split->callback([&] {
    const auto task = gp::parse_task_kind(sp_task);
    const auto prop = gp::parse_shift_property(sp_property);
    gp::RoleRatios ratios = task == gp::TaskKind::node ? gp::kNodeTaskRatios : gp::kGraphTaskRatios;
    if (!sp_ratios.empty()) ratios = {sp_ratios[0], sp_ratios[1], sp_ratios[2]};
    const gp::Dataset ds = gp::load_any_dataset(sp_dataset);
    const auto scores = gp::split_scores(ds, task, prop);
    const gp::SplitManifest m = gp::make_manifest(scores, prop, sp_seed, ratios);
    gp::write_json_file(gp::manifest_to_json(m), sp_out);
    auto mean_of = [&](const std::vector<std::size_t>& ids) {
      double s = 0.0;
      for (auto i : ids) s += scores[i];
      return ids.empty() ? 0.0 : s / static_cast<double>(ids.size());
    };
    std::printf("source: %zu samples, mean %s %.6f\n", m.source_ids.size(), sp_property.c_str(), mean_of(m.source_ids));
    std::printf("target: %zu samples, mean %s %.6f\n", m.target_ids.size(), sp_property.c_str(), mean_of(m.target_ids));
  });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "supervised pretraining on the source side");
  SplitArgs pre_split;
  add_split_args(pre, pre_split);
  std::string pre_gnn = "gcn", pre_out = "model.json";
  gp::PretrainOptions po;
  std::size_t pre_hidden = 64, pre_layers = 2;
  pre->add_option("--base-gnn", pre_gnn, "gcn or gat")->capture_default_str();
  pre->add_option("--hidden", pre_hidden)->capture_default_str();
  pre->add_option("--layers", pre_layers)->capture_default_str();
  pre->add_option("--epochs", po.epochs)->capture_default_str();
  pre->add_option("--lr", po.lr)->capture_default_str();
  pre->add_option("--batch-size", po.batch_size)->capture_default_str();
  pre->add_option("--seed", po.seed)->capture_default_str();
  pre->add_option("--out", pre_out)->capture_default_str();
  pre->callback([&] {
    const auto split_data = load_split(pre_split);
    gp::ModelSpec spec{gp::parse_gnn_kind(pre_gnn), split_data.feature_dim, pre_hidden, pre_layers,
                       split_data.num_classes, 0.2};
    gp::GnnModel model(spec, gp::derive_seed(po.seed, 1));
    const auto r = gp::pretrain(model, split_data.source.train, split_data.source.val, po);
    gp::save_model(model, pre_out);
    std::cout << "best source val macro-F1 " << pct(r.best_val_f1) << " at epoch " << r.best_epoch << "\n";
    if (split_data.source.test.size() > 0)
      std::cout << "source test macro-F1 "
                << pct(gp::evaluate(gp::infer(model, split_data.source.test), split_data.source.test.labels()).macro_f1)
                << "\n";
  });

  // prompt-train
  auto* pt = app.add_subcommand("prompt-train", "train a prompt on the unlabeled target side");
  SplitArgs pt_split;
  add_split_args(pt, pt_split);
  gp::PromptConfig pc;
  std::string pt_mode = "fixed", pt_aug = "feature_mask", pt_model, pt_out = "prompt.json", pt_log;
  add_prompt_args(pt, pc, pt_mode, pt_aug);
  pt->add_option("--model", pt_model, "pretrained model checkpoint")->required();
  pt->add_option("--out", pt_out)->capture_default_str();
  pt->add_option("--log", pt_log, "per-epoch CSV log file");
  pt->callback([&] {
    pc.threshold_mode = gp::parse_threshold_mode(pt_mode);
    pc.aug_kind = gp::parse_augment_kind(pt_aug);
    const auto split_data = load_split(pt_split);
    gp::GnnModel model = load_checkpoint_or_usage(pt_model);
    std::ofstream log_file;
    if (!pt_log.empty()) {
      log_file.open(pt_log);
      if (!log_file) throw gp::IngestionError("cannot write " + pt_log);
    }
    const auto r = gp::train_prompt(model, split_data.target.train, split_data.target.val, pc,
                                    pt_log.empty() ? nullptr : &log_file);
    gp::save_prompt(r.prompt, pt_out);
    std::cout << "best target val macro-F1 " << pct(r.best_val_f1) << " at epoch " << r.best_epoch << "\n";
  });

  // eval
  auto* ev = app.add_subcommand("eval", "macro-F1 of the base model and the prompted model");
  SplitArgs ev_split;
  add_split_args(ev, ev_split);
  std::string ev_model, ev_prompt, ev_side = "target", ev_role = "test";
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--prompt", ev_prompt, "trained prompt checkpoint");
  ev->add_option("--side", ev_side, "source or target")->capture_default_str();
  ev->add_option("--role", ev_role, "train, val or test")->capture_default_str();
  ev->callback([&] {
    const auto split_data = load_split(ev_split);
    const gp::GnnModel model = load_checkpoint_or_usage(ev_model);
    const gp::SideData& side = ev_side == "source" ? split_data.source
                               : ev_side == "target"
                                   ? split_data.target
                                   : throw gp::UsageError("--side must be source or target");
    const gp::Role role = gp::parse_role(ev_role);
    const gp::Dataset& ds = role == gp::Role::train ? side.train : role == gp::Role::val ? side.val : side.test;
    const auto labels = ds.labels();
    const auto base = gp::evaluate(gp::infer(model, ds), labels);
    std::cout << "base macro-F1 " << pct(base.macro_f1) << "\n";
    if (!ev_prompt.empty()) {
      if (!std::filesystem::exists(ev_prompt)) throw gp::UsageError("prompt checkpoint not found: " + ev_prompt);
      const auto prompt = gp::load_prompt(ev_prompt);
      const auto prompted = gp::evaluate(gp::infer(model, prompt, ds), labels);
      std::cout << "ugprompt macro-F1 " << pct(prompted.macro_f1) << "\n";
      if (base.macro_f1 > 0.0) std::printf("IMP %.1f\n", gp::round1(gp::imp(prompted.macro_f1, base.macro_f1)));
    }
  });

  // run
  auto* rn = app.add_subcommand("run", "full seeded experiment: split, pretrain, prompt, evaluate");
  std::string rn_config, rn_outdir;
  std::vector<std::string> rn_set;
  rn->add_option("--config", rn_config, "key = value config file");
  rn->add_option("--set", rn_set, "override, e.g. --set prompt.tau=0.9");
  rn->add_option("--output-dir", rn_outdir, "overrides output_dir");
  rn->callback([&] {
    gp::ExperimentConfig cfg = rn_config.empty() ? gp::ExperimentConfig{} : gp::load_config(rn_config);
    for (const auto& kv : rn_set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw gp::UsageError("--set expects key=value, got '" + kv + "'");
      gp::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!rn_outdir.empty()) cfg.output_dir = rn_outdir;
    cfg.output_dir = output_dir(cfg.output_dir);
    const auto result = gp::run_experiment(cfg, &std::cerr);
    gp::write_experiment_outputs(cfg.output_dir, cfg, result);
    for (const auto& row : gp::summarize(result))
      std::printf("%-9s n=%zu f1=%.2f std=%.2f\n", row.method.c_str(), row.n, 100.0 * row.f1_mean,
                  100.0 * row.f1_std);
    std::cout << "results in " << cfg.output_dir << "\n";
    if (result.runs.empty()) throw gp::SplitError("every (seed, trial) run failed");
  });

  // export-embeddings
  auto* ex = app.add_subcommand("export-embeddings", "graph embeddings with and without the prompt as CSV");
  SplitArgs ex_split;
  add_split_args(ex, ex_split);
  std::string ex_model, ex_prompt, ex_out = "embeddings.csv";
  ex->add_option("--model", ex_model)->required();
  ex->add_option("--prompt", ex_prompt, "trained prompt; a zero prompt when omitted");
  ex->add_option("--out", ex_out)->capture_default_str();
  ex->callback([&] {
    const auto split_data = load_split(ex_split);
    const gp::GnnModel model = load_checkpoint_or_usage(ex_model);
    std::optional<gp::AdditivePrompt> prompt;
    if (!ex_prompt.empty()) {
      if (!std::filesystem::exists(ex_prompt)) throw gp::UsageError("prompt checkpoint not found: " + ex_prompt);
      prompt = gp::load_prompt(ex_prompt);
    } else {
      prompt = gp::AdditivePrompt(gp::Tensor::zeros(1, model.spec().in_dim));
    }
    std::vector<gp::EmbeddingEntry> entries;
    for (gp::Side s : {gp::Side::source, gp::Side::target}) {
      const gp::SideData& side = s == gp::Side::source ? split_data.source : split_data.target;
      auto add = [&](const gp::Dataset& ds, const std::vector<std::size_t>& ids) {
        for (std::size_t k = 0; k < ds.size(); ++k) entries.push_back({ids[k], s, &ds.graphs[k]});
      };
      add(side.train, side.train_ids);
      add(side.val, side.val_ids);
      add(side.test, side.test_ids);
    }
    std::ofstream out(ex_out);
    if (!out) throw gp::IngestionError("cannot write " + ex_out);
    gp::write_embeddings_csv(out, model, *prompt, entries);
    std::cout << "wrote " << 2 * entries.size() << " rows to " << ex_out << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gp::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const gp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const gp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
