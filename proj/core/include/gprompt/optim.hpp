#pragma once

#include <cstddef>
#include <vector>

#include "gprompt/tensor.hpp"

namespace gprompt {

/// Adam with bias correction. Parameters without a gradient are skipped.
class Adam {
public:
  explicit Adam(std::vector<Tensor> params, double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step();
  void zero_grad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::size_t steps() const { return t_; }
  const std::vector<Tensor>& params() const { return params_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

}  // namespace gprompt
