#pragma once

#include <span>
#include <vector>

namespace causalmp {

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logit
};

// Mean binary cross-entropy on raw logits, stable for large |logit|.
BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets);

double sigmoid(double x);

}  // namespace causalmp
