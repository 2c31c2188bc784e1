#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wayfarer::train {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // Descent step: params -= f(grad).
  virtual void step(std::span<double> params, std::span<const double> grad) = 0;
};

// Adaptive moment estimation.
class Adam final : public Optimizer {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(std::span<double> params, std::span<const double> grad) override;

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace wayfarer::train
