#include "cposterior/skew_normal.hpp"

#include <cmath>
#include <numbers>

#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"

namespace cposterior {

namespace {
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;
}

SkewNormalParams::SkewNormalParams(double location, double scale, double shape)
    : location(location), scale(scale), shape(shape) {
  if (!(scale > 0.0)) throw DomainError("skew-normal scale must be positive");
}

double SkewNormalParams::delta() const { return shape / std::sqrt(1.0 + shape * shape); }

MultiSkewNormalParams::MultiSkewNormalParams(Eigen::MatrixXd omega, Eigen::VectorXd shape)
    : omega_(std::move(omega)), shape_(std::move(shape)) {
  const auto d = shape_.size();
  if (omega_.rows() != d || omega_.cols() != d) throw ShapeError("skew-normal: Omega must be d x d");
  if (!omega_.isApprox(omega_.transpose(), 1e-12)) throw DomainError("skew-normal: Omega must be symmetric");
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::abs(omega_(j, j) - 1.0) > 1e-12) throw DomainError("skew-normal: Omega must have unit diagonal");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(omega_);
  if (llt.info() != Eigen::Success) throw DomainError("skew-normal: Omega must be positive definite");

  const Eigen::VectorXd omega_a = omega_ * shape_;
  delta_ = omega_a / std::sqrt(1.0 + shape_.dot(omega_a));
  Eigen::LLT<Eigen::MatrixXd> residual(omega_ - delta_ * delta_.transpose());
  if (residual.info() != Eigen::Success) throw NumericalError("skew-normal: Omega - delta delta^T not PD");
  residual_chol_ = residual.matrixL();
}

double sample_skew_normal(const SkewNormalParams& params, RandomSource& rng) {
  const double delta = params.delta();
  const double u0 = rng.normal();
  const double u1 = rng.normal();
  const double z = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
  return params.location + params.scale * z;
}

Eigen::VectorXd sample_skew_normal(const MultiSkewNormalParams& params, RandomSource& rng) {
  const double u0 = std::abs(rng.normal());
  Eigen::VectorXd w(params.dim());
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = rng.normal();
  return params.delta_ * u0 + params.residual_chol_ * w;
}

Moments skew_normal_moments(const SkewNormalParams& params) {
  const double delta = params.delta();
  Moments m{Eigen::VectorXd(1), Eigen::VectorXd(1)};
  m.mean[0] = params.location + params.scale * std::sqrt(kTwoOverPi) * delta;
  m.sd[0] = params.scale * std::sqrt(1.0 - kTwoOverPi * delta * delta);
  return m;
}

Moments skew_normal_moments(const MultiSkewNormalParams& params) {
  Moments m;
  m.mean = std::sqrt(kTwoOverPi) * params.delta();
  m.sd = (params.omega().diagonal().array() - kTwoOverPi * params.delta().array().square()).sqrt();
  return m;
}

double skew_normal_logpdf(double x, const SkewNormalParams& params) {
  const double z = (x - params.location) / params.scale;
  return std::log(2.0) + normal_logpdf(z, 0.0, 1.0) - std::log(params.scale) +
         std::log(normal_cdf(params.shape * z));
}

}  // namespace cposterior
