#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

namespace remap {

/// Adam with bias-corrected moments. Parameters are registered as blocks of
/// contiguous doubles; step() expects gradients in the same block order.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void add_block(Eigen::Index size) {
    m_.push_back(Eigen::ArrayXd::Zero(size));
    v_.push_back(Eigen::ArrayXd::Zero(size));
  }

  void begin_step() {
    ++t_;
    c1_ = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    c2_ = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  }

  /// Update block `k` in place.
  void update(std::size_t k, double* param, const double* grad) {
    auto& m = m_[k];
    auto& v = v_[k];
    Eigen::Map<Eigen::ArrayXd> p(param, m.size());
    Eigen::Map<const Eigen::ArrayXd> g(grad, m.size());
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.square();
    p -= lr_ * (m / c1_) / ((v / c2_).sqrt() + eps_);
  }

  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  double c1_ = 1.0, c2_ = 1.0;
  std::vector<Eigen::ArrayXd> m_, v_;
};

}  // namespace remap
