#include "gprompt/experiment.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"
#include "gprompt/metrics.hpp"

namespace gprompt {

namespace {

enum Stream : std::uint64_t { kSplit = 11, kSynth = 12, kShift = 13 };
constexpr std::uint64_t kPretrainBase = 1000, kModelBase = 2000, kPromptBase = 3000;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  if (v.empty() || v[0] == '-') throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + v + "'");
  const unsigned long long out = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + v + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Ordered as written by serialize_config().
const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = [] {
    std::vector<std::pair<std::string, Key>> t;
    auto dbl = [&t](const std::string& name, std::function<double&(ExperimentConfig&)> ref) {
      t.emplace_back(name, Key{[name, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_double(name, v); },
                               [ref](const ExperimentConfig& c) {
                                 return fmt_double(ref(const_cast<ExperimentConfig&>(c)));
                               }});
    };
    auto uns = [&t](const std::string& name, std::function<std::size_t&(ExperimentConfig&)> ref) {
      t.emplace_back(name, Key{[name, ref](ExperimentConfig& c, const std::string& v) {
                                 ref(c) = static_cast<std::size_t>(parse_uint(name, v));
                               },
                               [ref](const ExperimentConfig& c) {
                                 return std::to_string(ref(const_cast<ExperimentConfig&>(c)));
                               }});
    };
    auto str = [&t](const std::string& name, std::function<void(ExperimentConfig&, const std::string&)> set,
                    std::function<std::string(const ExperimentConfig&)> get) {
      t.emplace_back(name, Key{std::move(set), std::move(get)});
    };

    str("dataset", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; },
        [](const ExperimentConfig& c) { return c.dataset; });
    str("task", [](ExperimentConfig& c, const std::string& v) { c.task = parse_task_kind(v); },
        [](const ExperimentConfig& c) { return to_string(c.task); });
    str("property", [](ExperimentConfig& c, const std::string& v) { c.property = parse_shift_property(v); },
        [](const ExperimentConfig& c) { return to_string(c.property); });
    str("base_gnn", [](ExperimentConfig& c, const std::string& v) { c.base_gnn = parse_gnn_kind(v); },
        [](const ExperimentConfig& c) { return to_string(c.base_gnn); });
    uns("hidden_dim", [](ExperimentConfig& c) -> std::size_t& { return c.hidden_dim; });
    uns("num_layers", [](ExperimentConfig& c) -> std::size_t& { return c.num_layers; });
    str("hops", [](ExperimentConfig& c, const std::string& v) { c.hops = static_cast<int>(parse_uint("hops", v)); },
        [](const ExperimentConfig& c) { return std::to_string(c.hops); });
    str("seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); });
    uns("n_seeds", [](ExperimentConfig& c) -> std::size_t& { return c.n_seeds; });
    uns("n_trials", [](ExperimentConfig& c) -> std::size_t& { return c.n_trials; });
    str("output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
        [](const ExperimentConfig& c) { return c.output_dir; });

    dbl("ratios.train", [](ExperimentConfig& c) -> double& { return c.ratios.train; });
    dbl("ratios.val", [](ExperimentConfig& c) -> double& { return c.ratios.val; });
    dbl("ratios.test", [](ExperimentConfig& c) -> double& { return c.ratios.test; });

    dbl("pretrain.lr", [](ExperimentConfig& c) -> double& { return c.pretrain.lr; });
    uns("pretrain.epochs", [](ExperimentConfig& c) -> std::size_t& { return c.pretrain.epochs; });
    uns("pretrain.batch_size", [](ExperimentConfig& c) -> std::size_t& { return c.pretrain.batch_size; });

    dbl("prompt.tau", [](ExperimentConfig& c) -> double& { return c.prompt.tau; });
    str("prompt.threshold_mode",
        [](ExperimentConfig& c, const std::string& v) { c.prompt.threshold_mode = parse_threshold_mode(v); },
        [](const ExperimentConfig& c) { return to_string(c.prompt.threshold_mode); });
    dbl("prompt.lambda1", [](ExperimentConfig& c) -> double& { return c.prompt.lambda1; });
    dbl("prompt.lambda2", [](ExperimentConfig& c) -> double& { return c.prompt.lambda2; });
    dbl("prompt.lambda3", [](ExperimentConfig& c) -> double& { return c.prompt.lambda3; });
    dbl("prompt.p_w", [](ExperimentConfig& c) -> double& { return c.prompt.p_w; });
    dbl("prompt.p_s", [](ExperimentConfig& c) -> double& { return c.prompt.p_s; });
    str("prompt.aug_kind", [](ExperimentConfig& c, const std::string& v) { c.prompt.aug_kind = parse_augment_kind(v); },
        [](const ExperimentConfig& c) { return to_string(c.prompt.aug_kind); });
    uns("prompt.n_t", [](ExperimentConfig& c) -> std::size_t& { return c.prompt.n_t; });
    dbl("prompt.lr", [](ExperimentConfig& c) -> double& { return c.prompt.lr; });
    dbl("prompt.lr_disc", [](ExperimentConfig& c) -> double& { return c.prompt.lr_disc; });
    uns("prompt.batch_size", [](ExperimentConfig& c) -> std::size_t& { return c.prompt.batch_size; });
    uns("prompt.epochs", [](ExperimentConfig& c) -> std::size_t& { return c.prompt.epochs; });
    dbl("prompt.label_fraction", [](ExperimentConfig& c) -> double& { return c.prompt.label_fraction; });

    uns("synth.n_graphs", [](ExperimentConfig& c) -> std::size_t& { return c.synth.n_graphs; });
    uns("synth.nodes_per_graph", [](ExperimentConfig& c) -> std::size_t& { return c.synth.nodes_per_graph; });
    uns("synth.num_classes", [](ExperimentConfig& c) -> std::size_t& { return c.synth.num_classes; });
    uns("synth.feature_dim", [](ExperimentConfig& c) -> std::size_t& { return c.synth.feature_dim; });
    dbl("synth.homophily_min", [](ExperimentConfig& c) -> double& { return c.synth.homophily_range.first; });
    dbl("synth.homophily_max", [](ExperimentConfig& c) -> double& { return c.synth.homophily_range.second; });
    dbl("synth.majority_fraction", [](ExperimentConfig& c) -> double& { return c.synth.majority_fraction; });
    dbl("synth.target_degree", [](ExperimentConfig& c) -> double& { return c.synth.target_degree; });
    dbl("synth.noise_sigma", [](ExperimentConfig& c) -> double& { return c.synth.noise_sigma; });
    dbl("synth.class_mean_scale", [](ExperimentConfig& c) -> double& { return c.synth.class_mean_scale; });

    dbl("shift.offset_norm", [](ExperimentConfig& c) -> double& { return c.shift.offset_norm; });
    dbl("shift.class_offset_norm", [](ExperimentConfig& c) -> double& { return c.shift.class_offset_norm; });
    dbl("shift.mask_prob", [](ExperimentConfig& c) -> double& { return c.shift.mask_prob; });
    return t;
  }();
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& [k, key] : keys())
    if (k == name) return &key;
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_seeds == 0) throw ConfigError("n_seeds must be at least 1");
  if (n_trials == 0) throw ConfigError("n_trials must be at least 1");
  if (hidden_dim == 0 || num_layers == 0) throw ConfigError("hidden_dim and num_layers must be positive");
  if (hops < 0) throw ConfigError("hops must be nonnegative");
  if (pretrain.batch_size == 0) throw ConfigError("pretrain.batch_size must be positive");
  if (!(pretrain.lr >= 0.0)) throw ConfigError("pretrain.lr must be nonnegative");
  if (!(ratios.train >= 0.0 && ratios.val >= 0.0 && ratios.test >= 0.0) ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ConfigError("ratios must be nonnegative and sum to 1");
  if (!(shift.mask_prob >= 0.0 && shift.mask_prob <= 1.0)) throw ConfigError("shift.mask_prob must lie in [0, 1]");
  if (!(shift.offset_norm >= 0.0 && shift.class_offset_norm >= 0.0))
    throw ConfigError("shift norms must be nonnegative");
  prompt.validate();
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown config key '" + key + "'");
  try {
    k->set(cfg, value);
  } catch (const UsageError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool ratios_given = false;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(seen[key]) + ")");
    seen[key] = lineno;
    if (key.rfind("ratios.", 0) == 0) ratios_given = true;
    apply_setting(cfg, key, value);
  }
  if (!ratios_given) cfg.ratios = cfg.task == TaskKind::node ? kNodeTaskRatios : kGraphTaskRatios;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IngestionError("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(cfg) + "\n";
  return out;
}

Dataset load_any_dataset(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_tu_dataset(path);
  return load_dataset(path);
}

Dataset experiment_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.dataset.empty()) return load_any_dataset(cfg.dataset);
  SynthConfig sc = cfg.synth;
  sc.seed = derive_seed(seed, kSynth);
  return synth_shift_dataset(sc);
}

std::vector<double> split_scores(const Dataset& ds, TaskKind task, ShiftProperty p) {
  if (task == TaskKind::graph) return graph_property_scores(ds, p);
  if (ds.size() != 1) throw ConfigError("the node task expects a dataset holding exactly one graph");
  return node_property_scores(ds.graphs[0], p);
}

SplitManifest make_split(const Dataset& ds, TaskKind task, ShiftProperty p, std::uint64_t seed,
                         const RoleRatios& ratios) {
  const auto scores = split_scores(ds, task, p);
  return make_manifest(scores, p, seed, ratios);
}

namespace {

Dataset shifted(const Dataset& ds, const ShiftSpec& shift, std::uint64_t stream) {
  if (!shift.active() || ds.size() == 0) return ds;
  FeatureShift fs = random_feature_shift(ds.feature_dim, ds.num_classes, shift.offset_norm, shift.class_offset_norm,
                                         shift.mask_prob, shift.seed);
  fs.seed = derive_seed(fs.seed, stream);
  return apply_feature_shift(ds, fs);
}

SideData graph_side(const Dataset& ds, const SplitManifest& m, Side side) {
  SideData out;
  out.train_ids = m.ids(side, Role::train);
  out.val_ids = m.ids(side, Role::val);
  out.test_ids = m.ids(side, Role::test);
  out.train = ds.subset(out.train_ids);
  out.val = ds.subset(out.val_ids);
  out.test = ds.subset(out.test_ids);
  return out;
}

SideData node_side(const Graph& g, const SplitManifest& m, Side side, int hops, std::size_t num_classes,
                   const std::string& name) {
  const auto& ids = side == Side::source ? m.source_ids : m.target_ids;
  std::vector<int> nodes(ids.begin(), ids.end());
  const Dataset egos = unify_node_task(induced_subgraph(g, nodes), hops, num_classes, name + "_" + to_string(side));
  SideData out;
  std::vector<std::size_t> tr, va, te;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    switch (m.roles.at(ids[k])) {
      case Role::train: tr.push_back(k); out.train_ids.push_back(ids[k]); break;
      case Role::val: va.push_back(k); out.val_ids.push_back(ids[k]); break;
      case Role::test: te.push_back(k); out.test_ids.push_back(ids[k]); break;
    }
  }
  out.train = egos.subset(tr);
  out.val = egos.subset(va);
  out.test = egos.subset(te);
  return out;
}

}  // namespace

PreparedSplit materialize_split(const Dataset& ds, const SplitManifest& m, TaskKind task, int hops,
                                const ShiftSpec& shift) {
  PreparedSplit out;
  out.manifest = m;
  if (task == TaskKind::graph) {
    m.validate(ds.size());
    out.source = graph_side(ds, m, Side::source);
    out.target = graph_side(ds, m, Side::target);
    out.num_classes = ds.num_classes;
  } else {
    if (ds.size() != 1) throw ConfigError("the node task expects a dataset holding exactly one graph");
    const Graph& g = ds.graphs[0];
    if (!g.has_node_labels()) throw ContractError("the node task needs node labels");
    m.validate(g.n);
    out.num_classes = static_cast<std::size_t>(*std::max_element(g.node_y.begin(), g.node_y.end())) + 1;
    out.source = node_side(g, m, Side::source, hops, out.num_classes, ds.name);
    out.target = node_side(g, m, Side::target, hops, out.num_classes, ds.name);
  }
  out.feature_dim = ds.feature_dim;
  out.target.train = shifted(out.target.train, shift, 0);
  out.target.val = shifted(out.target.val, shift, 1);
  out.target.test = shifted(out.target.test, shift, 2);
  return out;
}

RunRecord run_trial(const ExperimentConfig& cfg, const PreparedSplit& split, std::uint64_t seed, std::size_t trial) {
  const SideData& src = split.source;
  const SideData& tgt = split.target;
  if (src.train.size() == 0 || tgt.train.size() == 0 || tgt.test.size() == 0)
    throw SplitError("a source or target role is empty");

  ModelSpec spec{cfg.base_gnn, split.feature_dim, cfg.hidden_dim, cfg.num_layers, split.num_classes, 0.2};
  GnnModel model(spec, derive_seed(seed, kModelBase + trial));
  PretrainOptions po = cfg.pretrain;
  po.seed = derive_seed(seed, kPretrainBase + trial);
  pretrain(model, src.train, src.val, po);
  model.set_frozen(true);
  const auto frozen = model.snapshot();

  RunRecord rec;
  rec.seed = seed;
  rec.trial = trial;
  if (src.test.size() > 0) rec.source_test_f1 = evaluate(infer(model, src.test), src.test.labels()).macro_f1;
  const auto test_labels = tgt.test.labels();
  rec.base_f1 = evaluate(infer(model, tgt.test), test_labels).macro_f1;

  PromptConfig pc = cfg.prompt;
  pc.seed = derive_seed(seed, kPromptBase + trial);
  const PromptTrainResult res = train_prompt(model, tgt.train, tgt.val, pc);
  rec.prompt_f1 = evaluate(infer(model, res.prompt, tgt.test), test_labels).macro_f1;
  rec.frozen_intact = model.snapshot() == frozen;
  if (!rec.frozen_intact) throw ContractError("frozen model parameters changed during prompt training");
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ExperimentResult out;
  auto fail = [&](std::uint64_t seed, std::size_t trial, const std::string& why) {
    std::string msg = "seed " + std::to_string(seed) + " trial " + std::to_string(trial) + ": " + why;
    if (log) *log << "skipped " << msg << "\n";
    out.failures.push_back(std::move(msg));
  };
  for (std::size_t k = 0; k < cfg.n_seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    PreparedSplit split;
    try {
      const Dataset ds = experiment_dataset(cfg, seed);
      const SplitManifest m = make_split(ds, cfg.task, cfg.property, derive_seed(seed, kSplit), cfg.ratios);
      ShiftSpec shift = cfg.shift;
      shift.seed = derive_seed(seed, kShift);
      split = materialize_split(ds, m, cfg.task, cfg.hops, shift);
    } catch (const Error& e) {
      for (std::size_t t = 0; t < cfg.n_trials; ++t) fail(seed, t, e.what());
      continue;
    }
    for (std::size_t t = 0; t < cfg.n_trials; ++t) {
      try {
        RunRecord rec = run_trial(cfg, split, seed, t);
        if (log) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "seed %llu trial %zu base %.4f ugprompt %.4f\n",
                        static_cast<unsigned long long>(seed), t, rec.base_f1, rec.prompt_f1);
          *log << buf << std::flush;
        }
        out.runs.push_back(rec);
      } catch (const Error& e) {
        fail(seed, t, e.what());
      }
    }
  }
  return out;
}

void write_results_csv(std::ostream& os, const ExperimentResult& r) {
  os << "seed,trial,method,f1,imp\n";
  for (const auto& run : r.runs) {
    os << run.seed << ',' << run.trial << ",base," << fmt_double(run.base_f1) << ",0\n";
    os << run.seed << ',' << run.trial << ",ugprompt," << fmt_double(run.prompt_f1) << ',';
    if (run.base_f1 > 0.0) os << fmt_double(imp(run.prompt_f1, run.base_f1));
    os << '\n';
  }
}

std::vector<SummaryRow> summarize(const ExperimentResult& r) {
  auto stats = [&](const std::string& method, double RunRecord::*field) {
    SummaryRow row;
    row.method = method;
    row.n = r.runs.size();
    if (row.n == 0) return row;
    double s = 0.0;
    for (const auto& run : r.runs) s += run.*field;
    row.f1_mean = s / static_cast<double>(row.n);
    double ss = 0.0;
    for (const auto& run : r.runs) ss += (run.*field - row.f1_mean) * (run.*field - row.f1_mean);
    row.f1_std = std::sqrt(ss / static_cast<double>(row.n));
    return row;
  };
  SummaryRow base = stats("base", &RunRecord::base_f1);
  SummaryRow prompted = stats("ugprompt", &RunRecord::prompt_f1);
  if (base.f1_mean > 0.0) prompted.imp = imp(prompted.f1_mean, base.f1_mean);
  return {base, prompted};
}

void write_summary_csv(std::ostream& os, const ExperimentResult& r) {
  os << "method,n,f1_mean,f1_std,imp,cell\n";
  for (const auto& row : summarize(r)) {
    char cell[64];
    std::snprintf(cell, sizeof cell, "%.1f\\std{%.1f}", 100.0 * row.f1_mean, 100.0 * row.f1_std);
    os << row.method << ',' << row.n << ',' << fmt_double(row.f1_mean) << ',' << fmt_double(row.f1_std) << ','
       << fmt_double(row.imp) << ',' << cell << '\n';
  }
}

void write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                              const ExperimentResult& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IngestionError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("results.csv");
    write_results_csv(f, r);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, r);
  }
  {
    auto f = open("config.txt");
    f << serialize_config(cfg);
  }
}

void write_embeddings_csv(std::ostream& os, const GnnModel& model, const PromptFunction& prompt,
                          const std::vector<EmbeddingEntry>& entries) {
  const std::size_t d = model.spec().hidden_dim;
  os << "id,side,label,variant";
  for (std::size_t j = 0; j < d; ++j) os << ",z" << j;
  os << '\n';
  auto row = [&](const EmbeddingEntry& e, const char* variant, const Tensor& z) {
    os << e.id << ',' << to_string(e.side) << ',';
    if (e.graph->y) os << *e.graph->y;
    os << ',' << variant;
    for (double v : z.data()) os << ',' << fmt_double(v);
    os << '\n';
  };
  for (const auto& e : entries) {
    if (!e.graph) throw ContractError("embedding entry without a graph");
    row(e, "non-prompted", model.encode(*e.graph));
    PromptedGraph pg = prompt.apply(*e.graph);
    row(e, "prompted", model.encode(pg.graph, pg.x.detach()));
  }
}

}  // namespace gprompt
