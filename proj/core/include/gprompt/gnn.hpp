#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gprompt/graph.hpp"
#include "gprompt/tensor.hpp"

namespace gprompt {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

enum class GnnKind { gcn, gat };

std::string to_string(GnnKind k);
GnnKind parse_gnn_kind(const std::string& name);

struct ModelSpec {
  GnnKind kind = GnnKind::gcn;
  std::size_t in_dim = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_classes = 2;
  double leaky_slope = 0.2;  // GAT attention only

  bool operator==(const ModelSpec&) const = default;
};

/// Node features of a graph as a constant tensor.
Tensor feature_tensor(const Graph& g);

/// D̃^{-1/2}(A+I)D̃^{-1/2} with D̃ the degree matrix of A+I, as a constant.
Tensor normalized_adjacency(const Graph& g);

Tensor gcn_layer(const Tensor& x, const Tensor& norm_adj, const Tensor& weight, bool activate);
Tensor gcn_layer(const Tensor& x, const Graph& g, const Tensor& weight, bool activate = true);

/// Single-head attention over neighbors plus self:
/// e_uv = leaky_relu(aᵀ[W x_u ‖ W x_v]), α_u = softmax_v(e_uv), out_u = Σ α_uv W x_v.
/// `attention` is (2·d_out) x 1.
Tensor gat_layer(const Tensor& x, const Graph& g, const Tensor& weight, const Tensor& attention, double slope = 0.2,
                 bool activate = true);

/// Column mean over nodes: n x d -> 1 x d.
Tensor readout_mean(const Tensor& node_embeds);

/// Encoder g (GCN or GAT stack + mean readout) followed by a linear head h.
///
/// Copies share parameter storage; use clone() for an independent model.
class GnnModel {
public:
  /// Glorot-uniform weights and zero head bias drawn from `seed`.
  GnnModel(const ModelSpec& spec, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }

  /// Graph embedding z (1 x hidden_dim) from the graph's own features.
  Tensor encode(const Graph& g) const;
  /// Same, with node features supplied as a (possibly differentiable) tensor.
  Tensor encode(const Graph& g, const Tensor& x) const;
  /// Logits for a stack of embeddings: B x hidden -> B x C.
  Tensor head(const Tensor& z) const;
  /// Pre-softmax logits, 1 x C.
  Tensor forward(const Graph& g) const;

  NamedTensors parameters() const;
  NamedTensors encoder_parameters() const;
  NamedTensors head_parameters() const;

  /// Toggles requires_grad on every encoder and head tensor and drops any
  /// stored gradients when freezing.
  void set_frozen(bool frozen);
  bool frozen() const;

  /// Bitwise copy of all parameter values, in parameters() order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

  GnnModel clone() const;

private:
  GnnModel() = default;
  ModelSpec spec_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> attention_;
  Tensor head_weight_;  // C x hidden
  Tensor head_bias_;    // 1 x C
};

/// Mean cross-entropy of row-wise softmax(logits) against integer labels.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

struct PretrainOptions {
  double lr = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  bool operator==(const PretrainOptions&) const = default;
};

struct PretrainResult {
  double best_val_f1 = 0.0;
  std::size_t best_epoch = 0;
  double train_f1 = 0.0;  // of the selected parameters
};

/// Supervised training of every parameter with Adam on mean batch CE.
/// Keeps the parameters of the epoch with the best validation macro-F1,
/// ties going to the lower validation cross-entropy (the last epoch when
/// `val` is empty). Leaves the model unfrozen.
PretrainResult pretrain(GnnModel& model, const Dataset& train, const Dataset& val, const PretrainOptions& opt);

/// Argmax predictions of the plain model, ties to the lowest index.
std::vector<int> predict(const GnnModel& model, const Dataset& ds);

}  // namespace gprompt
