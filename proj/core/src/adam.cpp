#include "causalmp/adam.hpp"

#include <cmath>

#include "causalmp/error.hpp"

namespace causalmp {

void Adam::step(std::span<DenseMatrix* const> params, std::span<const DenseMatrix* const> grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShape, "Adam::step: parameter and gradient counts differ");
  }
  if (m_.empty()) {
    for (const DenseMatrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) {
    throw Error(ErrorCode::kShape, "Adam::step: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "Adam::step");
    require_same_shape(*params[i], m_[i], "Adam::step moments");
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= config_.lr * (m_hat / (std::sqrt(v_hat) + config_.eps) + config_.weight_decay * p[k]);
    }
  }
}

}  // namespace causalmp
