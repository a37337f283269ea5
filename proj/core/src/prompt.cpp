#include "gprompt/prompt.hpp"

#include <cmath>

#include "gprompt/checkpoint.hpp"
#include "gprompt/dataset_io.hpp"
#include "gprompt/error.hpp"

namespace gprompt {

std::string to_string(AugmentKind k) { return k == AugmentKind::feature_mask ? "feature_mask" : "edge_drop"; }

AugmentKind parse_augment_kind(const std::string& name) {
  if (name == "feature_mask") return AugmentKind::feature_mask;
  if (name == "edge_drop") return AugmentKind::edge_drop;
  throw UsageError("unknown augmentation '" + name + "' (expected feature_mask or edge_drop)");
}

Graph augment(const Graph& g, double p, AugmentKind kind, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probability must lie in [0, 1]");
  Graph out = g;
  std::bernoulli_distribution drop(p);
  if (kind == AugmentKind::feature_mask) {
    const std::size_t d = g.x.cols;
    std::vector<bool> masked(d);
    for (std::size_t j = 0; j < d; ++j) masked[j] = drop(rng);
    for (std::size_t v = 0; v < g.n; ++v)
      for (std::size_t j = 0; j < d; ++j)
        if (masked[j]) out.x(v, j) = 0.0;
  } else {
    out.edges.clear();
    for (const auto& e : g.edges)
      if (!drop(rng)) out.edges.push_back(e);
  }
  return out;
}

Tensor prompt_features(const Tensor& x, const Tensor& tokens) {
  if (x.cols() != tokens.cols())
    throw DimensionError("prompt token dim " + std::to_string(tokens.cols()) + " != feature dim " +
                         std::to_string(x.cols()));
  Tensor alpha = softmax_rows(matmul(x, transpose(tokens)));  // n x n_t
  return add(x, matmul(alpha, tokens));
}

AdditivePrompt::AdditivePrompt(std::size_t n_tokens, std::size_t dim, std::uint64_t seed, double init_std) {
  if (n_tokens == 0) throw ConfigError("a prompt needs at least one token");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  std::vector<double> t(n_tokens * dim);
  for (auto& v : t) v = init_std > 0.0 ? normal(rng) : 0.0;
  tokens_ = Tensor(n_tokens, dim, std::move(t), true);
}

AdditivePrompt::AdditivePrompt(Tensor tokens) : tokens_(std::move(tokens)) {
  if (tokens_.rows() == 0) throw ConfigError("a prompt needs at least one token");
  tokens_.set_requires_grad(true);
}

PromptedGraph AdditivePrompt::apply(const Graph& g) const {
  return {g, prompt_features(feature_tensor(g), tokens_)};
}

std::unique_ptr<PromptFunction> AdditivePrompt::clone() const {
  return std::make_unique<AdditivePrompt>(tokens_.clone());
}

Matrix AdditivePrompt::attention(const Matrix& x) const {
  Tensor alpha = softmax_rows(matmul(Tensor(x.rows, x.cols, x.data), transpose(tokens_.detach())));
  return Matrix(alpha.rows(), alpha.cols(), std::vector<double>(alpha.data().begin(), alpha.data().end()));
}

Graph prompt(const Graph& g, const PromptFunction& f) {
  PromptedGraph pg = f.apply(g);
  Graph out = std::move(pg.graph);
  out.x = Matrix(pg.x.rows(), pg.x.cols(), std::vector<double>(pg.x.data().begin(), pg.x.data().end()));
  return out;
}

AugmentedPair make_augmented_pair(const Graph& g, const AugmentConfig& cfg, const PromptFunction& f,
                                  std::mt19937_64& rng) {
  Graph weak = augment(g, cfg.p_weak, cfg.kind, rng);
  Graph strong = augment(g, cfg.p_strong, cfg.kind, rng);
  return {std::move(weak), f.apply(strong)};
}

nlohmann::json prompt_to_json(const AdditivePrompt& p) {
  return {{"architecture", {{"kind", "additive"}, {"n_tokens", p.n_tokens()}, {"dim", p.dim()}}},
          {"tensors", tensors_to_json(p.parameters())}};
}

AdditivePrompt prompt_from_json(const nlohmann::json& j) {
  try {
    const auto& a = j.at("architecture");
    if (a.at("kind").get<std::string>() != "additive") throw FormatError("unsupported prompt kind");
    AdditivePrompt p(a.at("n_tokens").get<std::size_t>(), a.at("dim").get<std::size_t>(), 0, 0.0);
    tensors_from_json(j.at("tensors"), p.parameters());
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed prompt checkpoint: ") + e.what());
  }
}

void save_prompt(const AdditivePrompt& p, const std::filesystem::path& file) { write_json_file(prompt_to_json(p), file); }

AdditivePrompt load_prompt(const std::filesystem::path& file) { return prompt_from_json(read_json_file(file)); }

}  // namespace gprompt
