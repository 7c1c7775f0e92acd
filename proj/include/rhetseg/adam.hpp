#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace rhetseg {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over one flat parameter vector; callers pack their tensors.
class Adam {
  AdamConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;

 public:
  explicit Adam(long dim, AdamConfig cfg = {})
      : cfg_(cfg), m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {}

  void step(Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    param.array() -= cfg_.lr * (m_.array() / bc1) /
                     ((v_.array() / bc2).sqrt() + cfg_.eps);
  }
};

}  // namespace rhetseg
