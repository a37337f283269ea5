#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "gprompt/gnn.hpp"
#include "gprompt/graph.hpp"
#include "gprompt/metrics.hpp"
#include "gprompt/objectives.hpp"
#include "gprompt/optim.hpp"
#include "gprompt/prompt.hpp"

namespace gprompt {

struct PromptConfig {
  double tau = 0.7;
  ThresholdMode threshold_mode = ThresholdMode::fixed;
  double lambda1 = 1.0;
  double lambda2 = 0.5;
  double lambda3 = 1.0;
  double p_w = 0.1;
  double p_s = 0.3;
  AugmentKind aug_kind = AugmentKind::feature_mask;
  std::size_t n_t = 10;
  double lr = 0.01;
  double lr_disc = 0.001;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double label_fraction = 0.0;

  /// ConfigError on out-of-range values.
  void validate() const;
  AugmentConfig augment() const { return {aug_kind, p_w, p_s}; }
  bool operator==(const PromptConfig&) const = default;
};

struct StepStats {
  double l_c = 0.0;
  double l_div = 0.0;
  double l_adv = 0.0;
  double l_disc = 0.0;
  std::size_t confident = 0;
  std::size_t batch = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double l_c = 0.0;
  double l_div = 0.0;
  double l_adv = 0.0;
  double l_disc = 0.0;
  double confident_fraction = 0.0;
  double val_f1 = 0.0;
};

/// Header `epoch,L_c,L_div,L_adv,L_disc,confident_fraction,val_f1`.
void write_epoch_log_header(std::ostream& os);
void write_epoch_log(std::ostream& os, const EpochLog& e);

/// One prompting run against a frozen model: owns the prompt, the
/// discriminator, both optimizers and the threshold state.
class PromptTrainer {
public:
  /// Freezes `model`. The model must outlive the trainer.
  PromptTrainer(GnnModel& model, const PromptConfig& cfg);
  PromptTrainer(GnnModel& model, const PromptConfig& cfg, AdditivePrompt initial);

  /// One discriminator step then one prompt step on `batch`.
  /// `labels[i] < 0` marks graph i as unlabeled; an empty vector means
  /// every graph is unlabeled.
  StepStats step(const std::vector<const Graph*>& batch, const std::vector<int>& labels = {});

  void begin_epoch() { thresholds_.reset(); }

  const AdditivePrompt& prompt() const { return prompt_; }
  AdditivePrompt& prompt() { return prompt_; }
  const Discriminator& discriminator() const { return disc_; }
  const ThresholdState& thresholds() const { return thresholds_; }
  const PromptConfig& config() const { return cfg_; }
  std::mt19937_64& rng() { return rng_; }

private:
  GnnModel& model_;
  PromptConfig cfg_;
  AdditivePrompt prompt_;
  Discriminator disc_;
  Adam prompt_opt_;
  Adam disc_opt_;
  ThresholdState thresholds_;
  std::mt19937_64 rng_;
};

struct PromptTrainResult {
  AdditivePrompt prompt;
  double best_val_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> log;
};

/// Trains a prompt on the unlabeled `train` graphs (labels of a seeded
/// label_fraction subset feed the few-shot loss) and keeps the tokens of
/// the epoch with the best macro-F1 on `val`, ties going to the lower
/// validation cross-entropy. `log_out`, when given,
/// receives the per-epoch CSV.
PromptTrainResult train_prompt(GnnModel& model, const Dataset& train, const Dataset& val, const PromptConfig& cfg,
                               std::ostream* log_out = nullptr);

/// Softmax scores of model(f(g)) for every graph, without augmentation.
std::vector<std::vector<double>> infer(const GnnModel& model, const PromptFunction& prompt, const Dataset& ds);
/// Softmax scores of the plain model.
std::vector<std::vector<double>> infer(const GnnModel& model, const Dataset& ds);

}  // namespace gprompt
