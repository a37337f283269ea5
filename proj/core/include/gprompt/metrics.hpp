#pragma once

#include <cstddef>
#include <vector>

#include "gprompt/tensor.hpp"

namespace gprompt {

struct F1Report {
  double macro_f1 = 0.0;
  std::vector<double> per_class;
};

/// Macro-averaged F1 over `num_classes` classes. Classes absent from both
/// predictions and truth score 0 and still count in the average.
F1Report macro_f1(const std::vector<int>& predicted, const std::vector<int>& truth, std::size_t num_classes);

/// Argmax of each score row (ties to the lowest index), then macro_f1.
/// ContractError on empty or misaligned input.
F1Report evaluate(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels);

std::vector<int> argmax_rows(const Tensor& scores);

/// Relative improvement in percent: 100 (f1 - base) / base.
/// ContractError when base is zero.
double imp(double f1, double f1_base);

/// Rounded to one decimal place, as printed in result tables.
double round1(double value);

}  // namespace gprompt
