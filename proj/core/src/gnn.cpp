#include "gprompt/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gprompt/error.hpp"
#include "gprompt/metrics.hpp"
#include "gprompt/optim.hpp"
#include "gprompt/split.hpp"

namespace gprompt {

std::string to_string(GnnKind k) { return k == GnnKind::gcn ? "gcn" : "gat"; }

GnnKind parse_gnn_kind(const std::string& name) {
  if (name == "gcn") return GnnKind::gcn;
  if (name == "gat") return GnnKind::gat;
  throw UsageError("unknown base GNN '" + name + "' (expected gcn or gat)");
}

Tensor feature_tensor(const Graph& g) { return Tensor(g.x.rows, g.x.cols, g.x.data); }

Tensor normalized_adjacency(const Graph& g) {
  const std::size_t n = g.n;
  std::vector<double> a(n * n, 0.0);
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
  for (auto [u, v] : g.edges) {
    a[u * n + v] = a[v * n + u] = 1.0;
    deg[u] += 1.0;
    deg[v] += 1.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i * n + j] != 0.0) a[i * n + j] /= std::sqrt(deg[i] * deg[j]);
  return Tensor(n, n, std::move(a));
}

Tensor gcn_layer(const Tensor& x, const Tensor& norm_adj, const Tensor& weight, bool activate) {
  if (x.cols() != weight.rows()) throw DimensionError("gcn_layer: feature dim does not match weight rows");
  if (norm_adj.rows() != x.rows()) throw DimensionError("gcn_layer: adjacency does not match node count");
  Tensor out = matmul(norm_adj, matmul(x, weight));
  return activate ? relu(out) : out;
}

Tensor gcn_layer(const Tensor& x, const Graph& g, const Tensor& weight, bool activate) {
  return gcn_layer(x, normalized_adjacency(g), weight, activate);
}

namespace {

// Constant selectors that cut a (2d x 1) attention vector into halves.
Tensor half_selector(std::size_t d, bool second) {
  Tensor s = Tensor::zeros(d, 2 * d);
  auto data = s.mutable_data();
  for (std::size_t i = 0; i < d; ++i) data[i * 2 * d + i + (second ? d : 0)] = 1.0;
  return s;
}

std::vector<unsigned char> self_neighbor_mask(const Graph& g) {
  std::vector<unsigned char> mask(g.n * g.n, 0);
  for (std::size_t i = 0; i < g.n; ++i) mask[i * g.n + i] = 1;
  for (auto [u, v] : g.edges) mask[u * g.n + v] = mask[v * g.n + u] = 1;
  return mask;
}

}  // namespace

Tensor gat_layer(const Tensor& x, const Graph& g, const Tensor& weight, const Tensor& attention, double slope,
                 bool activate) {
  if (x.cols() != weight.rows()) throw DimensionError("gat_layer: feature dim does not match weight rows");
  const std::size_t d = weight.cols();
  if (attention.rows() != 2 * d || attention.cols() != 1)
    throw DimensionError("gat_layer: attention vector must be (2*d_out) x 1");
  const std::size_t n = x.rows();

  Tensor h = matmul(x, weight);                                     // n x d
  Tensor s_self = matmul(h, matmul(half_selector(d, false), attention));  // n x 1
  Tensor s_nbr = matmul(h, matmul(half_selector(d, true), attention));    // n x 1
  Tensor e = add(matmul(s_self, Tensor::ones(1, n)), matmul(Tensor::ones(n, 1), transpose(s_nbr)));
  Tensor alpha = masked_softmax_rows(leaky_relu(e, slope), self_neighbor_mask(g));
  Tensor out = matmul(alpha, h);
  return activate ? relu(out) : out;
}

Tensor readout_mean(const Tensor& node_embeds) {
  if (node_embeds.rows() == 0) throw ContractError("readout of a graph without nodes");
  return col_mean(node_embeds);
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> w(rows * cols);
  for (auto& v : w) v = u(rng);
  return Tensor(rows, cols, std::move(w), true);
}

}  // namespace

GnnModel::GnnModel(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
  if (spec.in_dim == 0 || spec.hidden_dim == 0 || spec.num_layers == 0 || spec.num_classes == 0)
    throw ConfigError("model dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::size_t in = spec.in_dim;
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    weights_.push_back(glorot(in, spec.hidden_dim, in, spec.hidden_dim, rng));
    if (spec.kind == GnnKind::gat) attention_.push_back(glorot(2 * spec.hidden_dim, 1, 2 * spec.hidden_dim, 1, rng));
    in = spec.hidden_dim;
  }
  head_weight_ = glorot(spec.hidden_dim, spec.num_classes, spec.num_classes, spec.hidden_dim, rng);
  head_bias_ = Tensor::zeros(1, spec.num_classes, true);
}

Tensor GnnModel::encode(const Graph& g) const { return encode(g, feature_tensor(g)); }

Tensor GnnModel::encode(const Graph& g, const Tensor& x) const {
  if (x.cols() != spec_.in_dim)
    throw DimensionError("input feature dim " + std::to_string(x.cols()) + " != model in_dim " +
                         std::to_string(spec_.in_dim));
  if (x.rows() != g.n) throw DimensionError("feature rows do not match node count");
  Tensor h = x;
  if (spec_.kind == GnnKind::gcn) {
    const Tensor adj = normalized_adjacency(g);
    for (std::size_t l = 0; l < weights_.size(); ++l) h = gcn_layer(h, adj, weights_[l], l + 1 < weights_.size());
  } else {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      h = gat_layer(h, g, weights_[l], attention_[l], spec_.leaky_slope, l + 1 < weights_.size());
  }
  return readout_mean(h);
}

Tensor GnnModel::head(const Tensor& z) const {
  if (z.cols() != spec_.hidden_dim) throw DimensionError("embedding width does not match head input");
  return add(matmul(z, transpose(head_weight_)), head_bias_);
}

Tensor GnnModel::forward(const Graph& g) const { return head(encode(g)); }

NamedTensors GnnModel::encoder_parameters() const {
  NamedTensors out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.emplace_back("encoder.W" + std::to_string(l), weights_[l]);
    if (spec_.kind == GnnKind::gat) out.emplace_back("encoder.a" + std::to_string(l), attention_[l]);
  }
  return out;
}

NamedTensors GnnModel::head_parameters() const { return {{"head.W", head_weight_}, {"head.b", head_bias_}}; }

NamedTensors GnnModel::parameters() const {
  NamedTensors out = encoder_parameters();
  for (auto& p : head_parameters()) out.push_back(std::move(p));
  return out;
}

void GnnModel::set_frozen(bool frozen) {
  for (auto& [name, t] : parameters()) {
    t.set_requires_grad(!frozen);
    if (frozen) t.zero_grad();
  }
}

bool GnnModel::frozen() const {
  for (const auto& [name, t] : parameters())
    if (t.requires_grad()) return false;
  return true;
}

std::vector<std::vector<double>> GnnModel::snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& [name, t] : parameters()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

void GnnModel::restore(const std::vector<std::vector<double>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw DimensionError("snapshot does not match model parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto dst = params[k].second.mutable_data();
    if (values[k].size() != dst.size()) throw DimensionError("snapshot tensor size mismatch");
    std::copy(values[k].begin(), values[k].end(), dst.begin());
  }
}

GnnModel GnnModel::clone() const {
  GnnModel m;
  m.spec_ = spec_;
  for (const auto& w : weights_) m.weights_.push_back(w.clone());
  for (const auto& a : attention_) m.attention_.push_back(a.clone());
  m.head_weight_ = head_weight_.clone();
  m.head_bias_ = head_bias_.clone();
  return m;
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows()) throw DimensionError("one label per logit row required");
  Tensor onehot = Tensor::zeros(logits.rows(), logits.cols());
  auto oh = onehot.mutable_data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= logits.cols())
      throw ContractError("label outside [0, C)");
    oh[i * logits.cols() + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  Tensor logp = log(softmax_rows(logits), 1e-12);
  return scale(sum(mul(onehot, logp)), -1.0 / static_cast<double>(labels.size()));
}

std::vector<int> predict(const GnnModel& model, const Dataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const auto& g : ds.graphs) out.push_back(argmax_rows(model.forward(g)).front());
  return out;
}

PretrainResult pretrain(GnnModel& model, const Dataset& train, const Dataset& val, const PretrainOptions& opt) {
  if (train.size() == 0) throw ContractError("pretraining needs at least one labeled graph");
  if (opt.batch_size == 0) throw ConfigError("batch size must be positive");
  model.set_frozen(false);
  const auto train_labels = train.labels();
  std::vector<Tensor> params;
  for (auto& [name, t] : model.parameters()) params.push_back(t);
  Adam adam(params, opt.lr);

  std::mt19937_64 rng(derive_seed(opt.seed, 17));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t C = model.spec().num_classes;
  PretrainResult best;
  best.best_val_f1 = -1.0;
  std::vector<std::vector<double>> best_params = model.snapshot();
  double best_loss = 0.0;
  std::vector<int> val_labels;
  if (val.size() > 0) val_labels = val.labels();
  auto val_loss = [&] {
    std::vector<Tensor> zs;
    for (const auto& g : val.graphs) zs.push_back(model.encode(g));
    return softmax_cross_entropy(model.head(concat_rows(zs)).detach(), val_labels).item();
  };

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      std::vector<Tensor> zs;
      std::vector<int> ys;
      for (std::size_t k = start; k < stop; ++k) {
        zs.push_back(model.encode(train.graphs[order[k]]));
        ys.push_back(train_labels[order[k]]);
      }
      adam.zero_grad();
      softmax_cross_entropy(model.head(concat_rows(zs)), ys).backward();
      adam.step();
    }
    if (val.size() > 0) {
      const double f1 = macro_f1(predict(model, val), val_labels, C).macro_f1;
      const double loss = val_loss();
      if (f1 > best.best_val_f1 || (f1 == best.best_val_f1 && loss < best_loss)) {
        best.best_val_f1 = f1;
        best.best_epoch = epoch;
        best_loss = loss;
        best_params = model.snapshot();
      }
    }
  }
  if (val.size() > 0 && opt.epochs > 0) {
    model.restore(best_params);
  } else {
    best.best_val_f1 = 0.0;
    best.best_epoch = opt.epochs;
  }
  adam.zero_grad();
  best.train_f1 = macro_f1(predict(model, train), train_labels, C).macro_f1;
  return best;
}

}  // namespace gprompt
