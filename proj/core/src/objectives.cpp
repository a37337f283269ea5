#include "gprompt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gprompt/error.hpp"
#include "gprompt/metrics.hpp"

namespace gprompt {

std::size_t BatchPredictions::confident() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

BatchPredictions make_batch_predictions(const Tensor& p_weak, const Tensor& p_hat,
                                        const std::vector<double>& thresholds) {
  if (p_weak.rows() == 0) throw ContractError("empty batch");
  if (p_weak.rows() != p_hat.rows() || p_weak.cols() != p_hat.cols())
    throw DimensionError("weak and prompted score shapes differ");
  if (thresholds.size() != p_weak.cols()) throw DimensionError("one threshold per class required");
  BatchPredictions bp{p_weak.detach(), p_hat, argmax_rows(p_weak), {}};
  bp.mask.resize(bp.pseudo.size());
  for (std::size_t i = 0; i < bp.pseudo.size(); ++i) {
    const auto c = static_cast<std::size_t>(bp.pseudo[i]);
    bp.mask[i] = p_weak(i, c) > thresholds[c] ? 1 : 0;
  }
  return bp;
}

BatchPredictions make_batch_predictions(const Tensor& p_weak, const Tensor& p_hat, double tau) {
  return make_batch_predictions(p_weak, p_hat, std::vector<double>(p_weak.cols(), tau));
}

std::string to_string(ThresholdMode m) { return m == ThresholdMode::fixed ? "fixed" : "class_dynamic"; }

ThresholdMode parse_threshold_mode(const std::string& name) {
  if (name == "fixed") return ThresholdMode::fixed;
  if (name == "class_dynamic") return ThresholdMode::class_dynamic;
  throw UsageError("unknown threshold mode '" + name + "' (expected fixed or class_dynamic)");
}

ThresholdState::ThresholdState(ThresholdMode mode, double tau, std::size_t num_classes)
    : mode_(mode), tau_(tau), sigma_(num_classes, 0.0) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("threshold tau must lie in (0, 1]");
  if (num_classes == 0) throw ConfigError("threshold state needs at least one class");
}

std::vector<double> ThresholdState::thresholds() const {
  if (mode_ == ThresholdMode::fixed) return std::vector<double>(sigma_.size(), tau_);
  const double top = std::max(*std::max_element(sigma_.begin(), sigma_.end()), 1.0);
  std::vector<double> out(sigma_.size());
  for (std::size_t c = 0; c < sigma_.size(); ++c) {
    const double beta = sigma_[c] / top;
    out[c] = tau_ * beta / (2.0 - beta);
  }
  return out;
}

void ThresholdState::observe(const BatchPredictions& bp) {
  if (mode_ == ThresholdMode::fixed) return;
  if (bp.p_weak.cols() != sigma_.size()) throw DimensionError("batch class count differs from threshold state");
  for (std::size_t i = 0; i < bp.pseudo.size(); ++i) {
    const auto c = static_cast<std::size_t>(bp.pseudo[i]);
    if (bp.p_weak(i, c) > tau_) sigma_[c] += 1.0;
  }
}

void ThresholdState::reset() { std::fill(sigma_.begin(), sigma_.end(), 0.0); }

void ThresholdState::set_counts(std::vector<double> sigma) {
  if (sigma.size() != sigma_.size()) throw DimensionError("one count per class required");
  for (double s : sigma)
    if (!(s >= 0.0)) throw ContractError("threshold counts must be nonnegative");
  sigma_ = std::move(sigma);
}

std::vector<double> update_threshold(ThresholdState& state, const BatchPredictions& bp) {
  state.observe(bp);
  return state.thresholds();
}

namespace {

// Σ_i w_i · (−log(p_hat[i, target_i] + eps)) as a differentiable scalar.
Tensor weighted_ce_sum(const Tensor& p_hat, const std::vector<int>& target, const std::vector<double>& weight) {
  const std::size_t c = p_hat.cols();
  Tensor sel = Tensor::zeros(p_hat.rows(), c);
  auto s = sel.mutable_data();
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (weight[i] == 0.0) continue;
    if (target[i] < 0 || static_cast<std::size_t>(target[i]) >= c) throw ContractError("label outside [0, C)");
    s[i * c + static_cast<std::size_t>(target[i])] = weight[i];
  }
  return scale(sum(mul(sel, log(p_hat, kLogEps))), -1.0);
}

}  // namespace

Tensor consistency_loss(const BatchPredictions& bp) {
  if (bp.batch_size() == 0) throw ContractError("empty batch");
  std::vector<double> w(bp.mask.begin(), bp.mask.end());
  return scale(weighted_ce_sum(bp.p_hat, bp.pseudo, w), 1.0 / static_cast<double>(bp.batch_size()));
}

Tensor diversity_loss(const Tensor& p_hat) {
  if (p_hat.rows() == 0) throw ContractError("empty batch");
  Tensor q = col_mean(p_hat);
  return sum(mul(q, log(q, kLogEps)));
}

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> w(rows * cols);
  for (auto& v : w) v = u(rng);
  return Tensor(rows, cols, std::move(w), true);
}

}  // namespace

Discriminator::Discriminator(std::size_t dim, std::uint64_t seed) : dim_(dim) {
  if (dim == 0) throw ConfigError("discriminator input dim must be positive");
  std::mt19937_64 rng(seed);
  w1_ = glorot(dim, dim, rng);
  b1_ = Tensor::zeros(1, dim, true);
  w2_ = glorot(dim, 1, rng);
  b2_ = Tensor::zeros(1, 1, true);
}

Tensor Discriminator::forward(const Tensor& z, bool detach_params) const {
  if (z.cols() != dim_) throw DimensionError("discriminator input width does not match");
  auto p = [&](const Tensor& t) { return detach_params ? t.detach() : t; };
  Tensor h = relu(add(matmul(z, p(w1_)), p(b1_)));
  return add(matmul(h, p(w2_)), p(b2_));
}

NamedTensors Discriminator::parameters() const {
  return {{"disc.W1", w1_}, {"disc.b1", b1_}, {"disc.W2", w2_}, {"disc.b2", b2_}};
}

std::vector<std::vector<double>> Discriminator::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& [name, t] : parameters()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

Tensor discriminator_loss(const Tensor& logits_real, const Tensor& logits_fake) {
  if (logits_real.rows() != logits_fake.rows() || logits_real.rows() == 0)
    throw ContractError("discriminator batches must be nonempty and of equal size");
  const double b = static_cast<double>(logits_real.rows());
  Tensor real = sum(log_sigmoid(logits_real));
  Tensor fake = sum(log_sigmoid(scale(logits_fake, -1.0)));  // log(1 − σ(x)) = log σ(−x)
  return scale(add(real, fake), -1.0 / (2.0 * b));
}

Tensor discriminator_loss(const Discriminator& d, const Tensor& z_a, const Tensor& z_p) {
  return discriminator_loss(d.forward(z_a.detach()), d.forward(z_p.detach()));
}

Tensor adversarial_loss(const Tensor& logits_fake) {
  if (logits_fake.rows() == 0) throw ContractError("empty batch");
  return scale(sum(log_sigmoid(logits_fake)), -1.0 / static_cast<double>(logits_fake.rows()));
}

Tensor adversarial_loss(const Discriminator& d, const Tensor& z_p) { return adversarial_loss(d.forward(z_p, true)); }

Tensor total_loss(const Tensor& l_c, const Tensor& l_div, const Tensor& l_adv, double lambda1, double lambda2) {
  return add(add(l_c, scale(l_div, lambda1)), scale(l_adv, lambda2));
}

Tensor fewshot_consistency_loss(const BatchPredictions& bp, const std::vector<std::size_t>& labeled,
                                const std::vector<int>& labels, const std::vector<std::size_t>& unlabeled,
                                double lambda3) {
  const std::size_t b = bp.batch_size();
  if (b == 0) throw ContractError("empty batch");
  if (labels.size() != labeled.size()) throw ContractError("one label per labeled row required");
  std::vector<unsigned char> seen(b, 0);
  for (const auto* set : {&labeled, &unlabeled})
    for (std::size_t i : *set) {
      if (i >= b) throw ContractError("batch index out of range");
      if (seen[i]) throw ContractError("labeled and unlabeled sets overlap");
      seen[i] = 1;
    }
  if (labeled.size() + unlabeled.size() != b) throw ContractError("labeled and unlabeled sets must cover the batch");

  std::vector<int> target(b, 0);
  std::vector<double> wl(b, 0.0), wu(b, 0.0);
  for (std::size_t k = 0; k < labeled.size(); ++k) {
    target[labeled[k]] = labels[k];
    wl[labeled[k]] = 1.0;
  }
  std::vector<int> pseudo = bp.pseudo;
  for (std::size_t i = 0; i < b; ++i) wu[i] = bp.mask[i] ? lambda3 : 0.0;
  Tensor l_l = weighted_ce_sum(bp.p_hat, target, wl);
  Tensor l_u = weighted_ce_sum(bp.p_hat, pseudo, wu);
  return scale(add(l_l, l_u), 1.0 / static_cast<double>(b));
}

}  // namespace gprompt
