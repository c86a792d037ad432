#pragma once

#include <Eigen/Dense>

#include "cposterior/random.hpp"

namespace cposterior {

/// Univariate skew-normal SN(location, scale, shape), direct parameterization.
struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;

  SkewNormalParams() = default;
  SkewNormalParams(double location, double scale, double shape);

  double delta() const;
};

/// Multivariate skew-normal SN_d(Omega, a) with zero location. Omega must be
/// symmetric positive definite with unit diagonal.
class MultiSkewNormalParams {
 public:
  MultiSkewNormalParams(Eigen::MatrixXd omega, Eigen::VectorXd shape);

  const Eigen::MatrixXd& omega() const { return omega_; }
  const Eigen::VectorXd& shape() const { return shape_; }
  const Eigen::VectorXd& delta() const { return delta_; }
  Eigen::Index dim() const { return shape_.size(); }

 private:
  friend Eigen::VectorXd sample_skew_normal(const MultiSkewNormalParams&, RandomSource&);

  Eigen::MatrixXd omega_;
  Eigen::VectorXd shape_;
  Eigen::VectorXd delta_;
  // Lower Cholesky factor of Omega - delta delta^T.
  Eigen::MatrixXd residual_chol_;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

double sample_skew_normal(const SkewNormalParams& params, RandomSource& rng);

/// Hidden-truncation draw: delta |U0| + W with W ~ N(0, Omega - delta delta^T).
Eigen::VectorXd sample_skew_normal(const MultiSkewNormalParams& params, RandomSource& rng);

Moments skew_normal_moments(const SkewNormalParams& params);
Moments skew_normal_moments(const MultiSkewNormalParams& params);

double skew_normal_logpdf(double x, const SkewNormalParams& params);

}  // namespace cposterior
