#include "causalmp/loss.hpp"

#include <algorithm>
#include <cmath>

#include "causalmp/error.hpp"

namespace causalmp {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

BceResult bce_with_logits(std::span<const double> logits, std::span<const double> targets) {
  if (logits.empty()) throw Error(ErrorCode::kInvalidArgument, "bce_with_logits: empty input");
  if (logits.size() != targets.size()) {
    throw Error(ErrorCode::kShape, "bce_with_logits: logits and targets differ in length");
  }
  const double count = static_cast<double>(logits.size());
  BceResult out;
  out.grad.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    const double t = targets[i];
    if (t != 0.0 && t != 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "bce_with_logits: targets must be 0 or 1");
    }
    total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    out.grad[i] = (sigmoid(x) - t) / count;
  }
  out.loss = total / count;
  return out;
}

}  // namespace causalmp
