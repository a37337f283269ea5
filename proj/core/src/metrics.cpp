#include "gprompt/metrics.hpp"

#include <cmath>

#include "gprompt/error.hpp"

namespace gprompt {

F1Report macro_f1(const std::vector<int>& predicted, const std::vector<int>& truth, std::size_t num_classes) {
  if (predicted.empty()) throw ContractError("macro F1 of an empty prediction set");
  if (predicted.size() != truth.size()) throw ContractError("prediction and label counts differ");
  if (num_classes == 0) throw ContractError("macro F1 needs at least one class");
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= num_classes || t >= num_classes) throw ContractError("class id outside [0, num_classes)");
    if (p == t) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  F1Report r;
  r.per_class.resize(num_classes, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    r.per_class[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    total += r.per_class[c];
  }
  r.macro_f1 = total / static_cast<double>(num_classes);
  return r;
}

F1Report evaluate(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels) {
  if (scores.empty()) throw ContractError("evaluate: no scores");
  if (scores.size() != labels.size()) throw ContractError("evaluate: score and label counts differ");
  const std::size_t C = scores.front().size();
  std::vector<int> pred;
  pred.reserve(scores.size());
  for (const auto& row : scores) {
    if (row.size() != C) throw ContractError("evaluate: ragged score rows");
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (row[c] > row[best]) best = c;
    pred.push_back(static_cast<int>(best));
  }
  return macro_f1(pred, labels, C);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out[i] = static_cast<int>(best);
  }
  return out;
}

double imp(double f1, double f1_base) {
  if (f1_base == 0.0) throw ContractError("IMP undefined for a zero base F1");
  return 100.0 * (f1 - f1_base) / f1_base;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

}  // namespace gprompt
