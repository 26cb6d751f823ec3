#ifndef DST_OPTIM_H_
#define DST_OPTIM_H_

#include <cmath>
#include <span>
#include <vector>

#include "dst/linalg.h"

namespace dst {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.9999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;  // decoupled, applied to every parameter
};

// Adam with decoupled weight decay over a flat parameter vector.
class Adam {
 public:
  Adam(size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  void Step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= config_.learning_rate *
                   (mhat / (std::sqrt(vhat) + config_.epsilon) + config_.weight_decay * params[i]);
    }
  }

  long steps() const { return t_; }

 private:
  AdamConfig config_;
  Vec m_;
  Vec v_;
  long t_ = 0;
};

}  // namespace dst

#endif  // DST_OPTIM_H_
