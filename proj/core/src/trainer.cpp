#include "gprompt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "gprompt/error.hpp"
#include "gprompt/split.hpp"

namespace gprompt {

namespace {

enum Stream : std::uint64_t { kPromptInit = 101, kAugment = 102, kShuffle = 103, kDiscInit = 104, kLabels = 105 };

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

std::vector<Tensor> tensors_of(const NamedTensors& named) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

bool any_grad(const NamedTensors& named) {
  return std::any_of(named.begin(), named.end(), [](const auto& p) { return p.second.has_grad(); });
}

}  // namespace

void PromptConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0)) throw ConfigError("lambdas must be nonnegative");
  if (!in_unit(p_w) || !in_unit(p_s)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  if (n_t == 0) throw ConfigError("n_t must be at least 1");
  if (!(lr >= 0.0 && lr_disc >= 0.0)) throw ConfigError("learning rates must be nonnegative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!in_unit(label_fraction)) throw ConfigError("label_fraction must lie in [0, 1]");
}

void write_epoch_log_header(std::ostream& os) { os << "epoch,L_c,L_div,L_adv,L_disc,confident_fraction,val_f1\n"; }

void write_epoch_log(std::ostream& os, const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.l_c, e.l_div, e.l_adv,
                e.l_disc, e.confident_fraction, e.val_f1);
  os << buf;
}

PromptTrainer::PromptTrainer(GnnModel& model, const PromptConfig& cfg)
    : PromptTrainer(model, cfg, AdditivePrompt(cfg.n_t, model.spec().in_dim, derive_seed(cfg.seed, kPromptInit))) {}

PromptTrainer::PromptTrainer(GnnModel& model, const PromptConfig& cfg, AdditivePrompt initial)
    : model_(model),
      cfg_(cfg),
      prompt_(std::move(initial)),
      disc_(model.spec().hidden_dim, derive_seed(cfg.seed, kDiscInit)),
      prompt_opt_({prompt_.tokens()}, cfg.lr),
      disc_opt_(tensors_of(disc_.parameters()), cfg.lr_disc),
      thresholds_(cfg.threshold_mode, cfg.tau, model.spec().num_classes),
      rng_(derive_seed(cfg.seed, kAugment)) {
  cfg_.validate();
  if (prompt_.dim() != model.spec().in_dim) throw DimensionError("prompt token dim does not match model input dim");
  model_.set_frozen(true);
}

StepStats PromptTrainer::step(const std::vector<const Graph*>& batch, const std::vector<int>& labels) {
  if (batch.empty()) throw ContractError("empty batch");
  if (!labels.empty() && labels.size() != batch.size()) throw ContractError("one label slot per graph required");
  const AugmentConfig aug = cfg_.augment();

  std::vector<Tensor> za, zp;
  for (const Graph* g : batch) {
    AugmentedPair pair = make_augmented_pair(*g, aug, prompt_, rng_);
    za.push_back(model_.encode(pair.weak));
    zp.push_back(model_.encode(pair.prompted.graph, pair.prompted.x));
  }
  const Tensor z_a = concat_rows(za);
  const Tensor z_p = concat_rows(zp);

  StepStats st;
  st.batch = batch.size();

  prompt_opt_.zero_grad();
  disc_opt_.zero_grad();
  Tensor l_disc = discriminator_loss(disc_, z_a, z_p);
  l_disc.backward();
  if (prompt_.tokens().has_grad() || any_grad(model_.parameters()))
    throw ContractError("discriminator step leaked gradient outside the discriminator");
  disc_opt_.step();
  st.l_disc = l_disc.item();

  const Tensor p_weak = softmax_rows(model_.head(z_a));
  const Tensor p_hat = softmax_rows(model_.head(z_p));
  const BatchPredictions bp = make_batch_predictions(p_weak, p_hat, thresholds_.thresholds());

  Tensor l_c;
  std::vector<std::size_t> labeled, unlabeled;
  std::vector<int> ys;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!labels.empty() && labels[i] >= 0) {
      labeled.push_back(i);
      ys.push_back(labels[i]);
    } else {
      unlabeled.push_back(i);
    }
  }
  l_c = labeled.empty() ? consistency_loss(bp) : fewshot_consistency_loss(bp, labeled, ys, unlabeled, cfg_.lambda3);
  Tensor l_div = diversity_loss(p_hat);
  Tensor l_adv = adversarial_loss(disc_, z_p);
  Tensor loss = total_loss(l_c, l_div, l_adv, cfg_.lambda1, cfg_.lambda2);
  if (!std::isfinite(loss.item())) throw NumericError("prompt objective is not finite");

  disc_opt_.zero_grad();
  loss.backward();
  if (any_grad(disc_.parameters()) || any_grad(model_.parameters()))
    throw ContractError("prompt step leaked gradient outside the prompt");
  prompt_opt_.step();

  thresholds_.observe(bp);
  st.l_c = l_c.item();
  st.l_div = l_div.item();
  st.l_adv = l_adv.item();
  st.confident = bp.confident();
  return st;
}

PromptTrainResult train_prompt(GnnModel& model, const Dataset& train, const Dataset& val, const PromptConfig& cfg,
                               std::ostream* log_out) {
  if (train.size() == 0) throw ContractError("prompt training needs at least one target graph");
  cfg.validate();
  if (!cfg.augment().is_standard())
    std::cerr << "warning: p_w >= p_s; the weak view is not milder than the strong view\n";

  PromptTrainer trainer(model, cfg);

  std::vector<int> labels(train.size(), -1);
  if (cfg.label_fraction > 0.0) {
    const auto truth = train.labels();
    std::vector<std::size_t> ids(train.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::mt19937_64 pick(derive_seed(cfg.seed, kLabels));
    std::shuffle(ids.begin(), ids.end(), pick);
    const auto k = static_cast<std::size_t>(std::llround(cfg.label_fraction * static_cast<double>(train.size())));
    for (std::size_t i = 0; i < k; ++i) labels[ids[i]] = truth[ids[i]];
  }

  std::vector<int> val_labels;
  if (val.size() > 0) val_labels = val.labels();

  double best_ce = 0.0;
  PromptTrainResult result{AdditivePrompt(trainer.prompt().tokens().clone()), -1.0, 0, {}};
  if (log_out) write_epoch_log_header(*log_out);

  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, kShuffle));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    trainer.begin_epoch();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog e;
    e.epoch = epoch;
    std::size_t steps = 0, confident = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Graph*> batch;
      std::vector<int> ys;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(&train.graphs[order[k]]);
        ys.push_back(labels[order[k]]);
      }
      const StepStats st = trainer.step(batch, ys);
      e.l_c += st.l_c;
      e.l_div += st.l_div;
      e.l_adv += st.l_adv;
      e.l_disc += st.l_disc;
      confident += st.confident;
      ++steps;
    }
    const double s = static_cast<double>(steps);
    e.l_c /= s;
    e.l_div /= s;
    e.l_adv /= s;
    e.l_disc /= s;
    e.confident_fraction = static_cast<double>(confident) / static_cast<double>(train.size());
    double val_ce = 0.0;
    if (val.size() > 0) {
      const auto scores = infer(model, trainer.prompt(), val);
      e.val_f1 = evaluate(scores, val_labels).macro_f1;
      for (std::size_t i = 0; i < scores.size(); ++i)
        val_ce -= std::log(scores[i][static_cast<std::size_t>(val_labels[i])] + kLogEps);
    }

    if (val.size() == 0 || e.val_f1 > result.best_val_f1 || (e.val_f1 == result.best_val_f1 && val_ce < best_ce)) {
      result.best_val_f1 = e.val_f1;
      best_ce = val_ce;
      result.best_epoch = epoch;
      result.prompt = AdditivePrompt(trainer.prompt().tokens().clone());
    }
    if (log_out) write_epoch_log(*log_out, e);
    result.log.push_back(e);
  }
  return result;
}

std::vector<std::vector<double>> infer(const GnnModel& model, const PromptFunction& prompt, const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.size());
  for (const auto& g : ds.graphs) {
    PromptedGraph pg = prompt.apply(g);
    Tensor p = softmax_rows(model.head(model.encode(pg.graph, pg.x.detach())));
    out.emplace_back(p.data().begin(), p.data().end());
  }
  return out;
}

std::vector<std::vector<double>> infer(const GnnModel& model, const Dataset& ds) {
  std::vector<std::vector<double>> out;
  out.reserve(ds.size());
  for (const auto& g : ds.graphs) {
    Tensor p = softmax_rows(model.forward(g));
    out.emplace_back(p.data().begin(), p.data().end());
  }
  return out;
}

}  // namespace gprompt
