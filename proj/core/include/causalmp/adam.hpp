#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "causalmp/matrix.hpp"

namespace causalmp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled (AdamW-style): p -= lr * weight_decay * p.
  double weight_decay = 0.0;
};

// Bias-corrected Adam over an ordered list of parameter tensors. Moments are
// created on the first step and bound to the shapes seen there.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix* const> grads);

  std::int64_t steps() const noexcept { return step_; }
  const AdamConfig& config() const noexcept { return config_; }
  const std::vector<DenseMatrix>& first_moments() const noexcept { return m_; }
  const std::vector<DenseMatrix>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig config_;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
  std::int64_t step_ = 0;
};

}  // namespace causalmp
