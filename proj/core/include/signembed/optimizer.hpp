#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "signembed/common.hpp"

namespace signembed {

// Adam with bias correction. Moments are kept in double regardless of the
// parameter precision.
template <typename S>
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  // lr_scale multiplies the base rate (warmup schedules).
  void step(std::vector<S>& params, const std::vector<S>& grads, double lr_scale = 1.0) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ValidationError("optimizer size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double rate = lr_ * lr_scale;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = static_cast<double>(grads[i]);
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] = static_cast<S>(static_cast<double>(params[i]) -
                                 rate * mhat / (std::sqrt(vhat) + eps_));
    }
  }

  std::size_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

// Linear warmup to 1 over warmup_steps, then constant.
inline double warmup_scale(std::size_t step, std::size_t warmup_steps) {
  if (warmup_steps == 0 || step >= warmup_steps) return 1.0;
  return static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
}

}  // namespace signembed
