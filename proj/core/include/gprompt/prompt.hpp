#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "gprompt/gnn.hpp"
#include "gprompt/graph.hpp"
#include "gprompt/tensor.hpp"

namespace gprompt {

enum class AugmentKind { feature_mask, edge_drop };

std::string to_string(AugmentKind k);
AugmentKind parse_augment_kind(const std::string& name);

struct AugmentConfig {
  AugmentKind kind = AugmentKind::feature_mask;
  double p_weak = 0.1;
  double p_strong = 0.3;

  /// The weak view is expected to be the milder one (p_weak < p_strong).
  /// Other settings are allowed for ablations; callers may warn on false.
  bool is_standard() const { return p_weak < p_strong; }
};

/// feature_mask: one Bernoulli(p) draw per feature column, selected columns
/// zeroed on every node. edge_drop: each edge removed independently with
/// probability p. Labels are never touched.
Graph augment(const Graph& g, double p, AugmentKind kind, std::mt19937_64& rng);

/// Graph structure plus node features that may carry autodiff history.
struct PromptedGraph {
  Graph graph;  // structure and labels; graph.x holds the input features
  Tensor x;     // prompted features
};

/// A learnable map applied to input graphs in front of a frozen GNN.
class PromptFunction {
public:
  virtual ~PromptFunction() = default;
  virtual PromptedGraph apply(const Graph& g) const = 0;
  virtual NamedTensors parameters() const = 0;
  virtual std::unique_ptr<PromptFunction> clone() const = 0;
};

/// x_i ← x_i + Σ_j α_ij t_j with α_i = softmax_j(x_iᵀ t_j), differentiable
/// in the tokens. `x` is n x d, `tokens` is n_t x d.
Tensor prompt_features(const Tensor& x, const Tensor& tokens);

/// Token mixture prompt: n_t learnable vectors in feature space.
class AdditivePrompt final : public PromptFunction {
public:
  /// Tokens drawn from N(0, init_std²).
  AdditivePrompt(std::size_t n_tokens, std::size_t dim, std::uint64_t seed, double init_std = 0.01);
  explicit AdditivePrompt(Tensor tokens);

  PromptedGraph apply(const Graph& g) const override;
  NamedTensors parameters() const override { return {{"prompt.tokens", tokens_}}; }
  std::unique_ptr<PromptFunction> clone() const override;

  const Tensor& tokens() const { return tokens_; }
  Tensor& tokens() { return tokens_; }
  std::size_t n_tokens() const { return tokens_.rows(); }
  std::size_t dim() const { return tokens_.cols(); }

  /// Mixing weights α (n x n_t) for a feature matrix.
  Matrix attention(const Matrix& x) const;

private:
  Tensor tokens_;
};

/// Materialized prompted graph (no autodiff history).
Graph prompt(const Graph& g, const PromptFunction& f);

struct AugmentedPair {
  Graph weak;              // G_w
  PromptedGraph prompted;  // G_p = f(G_s)
};

/// Weak view aug(g, p_weak) and prompted strong view f(aug(g, p_strong)),
/// drawing fresh randomness from `rng`.
AugmentedPair make_augmented_pair(const Graph& g, const AugmentConfig& cfg, const PromptFunction& f,
                                  std::mt19937_64& rng);

nlohmann::json prompt_to_json(const AdditivePrompt& p);
AdditivePrompt prompt_from_json(const nlohmann::json& j);
void save_prompt(const AdditivePrompt& p, const std::filesystem::path& file);
AdditivePrompt load_prompt(const std::filesystem::path& file);

}  // namespace gprompt
