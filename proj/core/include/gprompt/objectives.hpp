#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gprompt/gnn.hpp"
#include "gprompt/tensor.hpp"

namespace gprompt {

/// Added inside every log of a probability.
inline constexpr double kLogEps = 1e-12;

/// Scores of one batch on the weak view (p_weak, no history) and on the
/// prompted strong view (p_hat, differentiable), with hard pseudo-labels
/// and the confidence mask derived from p_weak.
struct BatchPredictions {
  Tensor p_weak;               // |B| x C
  Tensor p_hat;                // |B| x C
  std::vector<int> pseudo;     // argmax of p_weak rows, ties to the lowest index
  std::vector<unsigned char> mask;  // max p_weak > threshold of the pseudo class

  std::size_t batch_size() const { return pseudo.size(); }
  std::size_t confident() const;
};

/// `thresholds` holds one value per class. `p_weak` is detached here.
BatchPredictions make_batch_predictions(const Tensor& p_weak, const Tensor& p_hat,
                                        const std::vector<double>& thresholds);
BatchPredictions make_batch_predictions(const Tensor& p_weak, const Tensor& p_hat, double tau);

enum class ThresholdMode { fixed, class_dynamic };

std::string to_string(ThresholdMode m);
ThresholdMode parse_threshold_mode(const std::string& name);

/// Confidence thresholds. In class_dynamic mode each class c keeps a count
/// σ_c of confident samples pseudo-labeled c; with β_c = σ_c / max(max σ, 1)
/// the class threshold is τ·β_c / (2 − β_c).
class ThresholdState {
public:
  ThresholdState(ThresholdMode mode, double tau, std::size_t num_classes);

  ThresholdMode mode() const { return mode_; }
  double tau() const { return tau_; }
  const std::vector<double>& counts() const { return sigma_; }

  std::vector<double> thresholds() const;
  /// Adds the samples of `bp` whose max p_weak exceeds the base τ.
  void observe(const BatchPredictions& bp);
  void reset();
  /// Overwrites the counts (fixtures and resumption).
  void set_counts(std::vector<double> sigma);

private:
  ThresholdMode mode_;
  double tau_;
  std::vector<double> sigma_;
};

/// observe() followed by thresholds().
std::vector<double> update_threshold(ThresholdState& state, const BatchPredictions& bp);

/// (1/|B|) Σ_i mask_i · CE(pseudo_i, p_hat_i).
Tensor consistency_loss(const BatchPredictions& bp);

/// Σ_c q_c log(q_c + eps) with q the column mean of p_hat.
Tensor diversity_loss(const Tensor& p_hat);

/// Two-layer perceptron d_h -> d_h -> 1 with a ReLU hidden layer and a raw
/// scalar output.
class Discriminator {
public:
  Discriminator(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  /// B x d_h -> B x 1. With `detach_params`, no gradient reaches θ_d.
  Tensor forward(const Tensor& z, bool detach_params = false) const;
  NamedTensors parameters() const;
  std::vector<std::vector<double>> snapshot() const;

private:
  std::size_t dim_;
  Tensor w1_, b1_, w2_, b2_;
};

/// −(1/2|B|) Σ [log σ(d_a) + log(1 − σ(d_p))] on raw discriminator outputs.
Tensor discriminator_loss(const Tensor& logits_real, const Tensor& logits_fake);
/// Same loss with z_a and z_p detached, so only θ_d receives gradients.
Tensor discriminator_loss(const Discriminator& d, const Tensor& z_a, const Tensor& z_p);

/// −(1/|B|) Σ log σ(d_p) on raw discriminator outputs.
Tensor adversarial_loss(const Tensor& logits_fake);
/// Same loss through a detached θ_d, so only z_p's inputs receive gradients.
Tensor adversarial_loss(const Discriminator& d, const Tensor& z_p);

Tensor total_loss(const Tensor& l_c, const Tensor& l_div, const Tensor& l_adv, double lambda1, double lambda2);

/// (1/|B|)(Σ_{S_l} CE(y, p_hat) + λ3 Σ_B mask·CE(pseudo, p_hat)).
/// The pseudo-label term runs over the whole batch, labeled rows included.
/// `labeled` and `unlabeled` must partition the batch rows; `labels` runs
/// parallel to `labeled`. ContractError otherwise.
Tensor fewshot_consistency_loss(const BatchPredictions& bp, const std::vector<std::size_t>& labeled,
                                const std::vector<int>& labels, const std::vector<std::size_t>& unlabeled,
                                double lambda3);

}  // namespace gprompt
