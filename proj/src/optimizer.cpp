#include "wayfarer/optimizer.hpp"

#include <cmath>

#include "wayfarer/error.hpp"

namespace wayfarer::train {

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) fail(ErrorKind::invalid_argument, "adam: parameter/gradient size mismatch");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  } else if (m_.size() != params.size()) {
    fail(ErrorKind::invalid_argument, "adam: parameter count changed between steps");
  }
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
  }
}

}  // namespace wayfarer::train
