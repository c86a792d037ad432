#include "cposterior/coarsening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "cposterior/special.hpp"

namespace cposterior {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(const SimplexVector& p, const SimplexVector& q, const char* op) {
  if (p.size() != q.size()) {
    throw ShapeError(std::string(op) + ": length mismatch (" + std::to_string(p.size()) + " vs " +
                     std::to_string(q.size()) + ")");
  }
}

void require_positive(const SimplexVector& q, const char* op) {
  if (!q.strictly_positive()) throw DomainError(std::string(op) + ": reference vector must be strictly positive");
}
}  // namespace

CoarseningConfig::CoarseningConfig(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0)) throw DomainError("coarsening alpha must be positive (or inf)");
}

CoarseningConfig CoarseningConfig::standard() { return CoarseningConfig(kInf); }

bool CoarseningConfig::is_standard() const { return std::isinf(alpha_); }

double zeta(std::uint64_t n, const CoarseningConfig& cfg) {
  if (n == 0 || cfg.is_standard()) return 1.0;
  return 1.0 / (1.0 + static_cast<double>(n) / cfg.alpha());
}

double effective_sample_size(std::uint64_t n, const CoarseningConfig& cfg) {
  return static_cast<double>(n) * zeta(n, cfg);
}

SimplexVector::SimplexVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ShapeError("SimplexVector: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("SimplexVector: entries must be finite and >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("SimplexVector: entries must sum to 1 (got " + std::to_string(total) + ")");
  }
}

SimplexVector SimplexVector::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("SimplexVector: entries must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw NumericalError("SimplexVector: weights have zero total");
  for (double& w : weights) w /= total;
  return SimplexVector(std::move(weights));
}

SimplexVector SimplexVector::uniform(std::size_t size) {
  return SimplexVector::normalized(std::vector<double>(size, 1.0));
}

std::size_t SimplexVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
}

bool SimplexVector::strictly_positive() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
}

double relative_entropy(const SimplexVector& p, const SimplexVector& q) {
  require_same_size(p, q, "relative_entropy");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    d += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can push D for p == q marginally below zero.
  return std::max(d, 0.0);
}

double chi_squared(const SimplexVector& p, const SimplexVector& q) {
  require_same_size(p, q, "chi_squared");
  require_positive(q, "chi_squared");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - q[i];
    total += diff * diff / q[i];
  }
  return total;
}

double mahalanobis_chi_squared(const SimplexVector& p, const SimplexVector& q) {
  require_same_size(p, q, "mahalanobis_chi_squared");
  require_positive(q, "mahalanobis_chi_squared");
  const std::size_t k = p.size();
  if (k < 2) throw ShapeError("mahalanobis_chi_squared: need at least two categories");
  const std::size_t d = k - 1;
  const double inv_last = 1.0 / q[k - 1];
  // Explicit quadratic form with C^{-1}_{ij} = 1(i=j)/q_i + 1/q_k.
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double di = p[i] - q[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double cinv = (i == j ? 1.0 / q[i] : 0.0) + inv_last;
      total += di * cinv * (p[j] - q[j]);
    }
  }
  return total;
}

double small_sample_rhs(const SimplexVector& p, const SimplexVector& s, std::uint64_t n,
                        const CoarseningConfig& cfg) {
  require_same_size(p, s, "small_sample_rhs");
  require_positive(s, "small_sample_rhs");
  if (cfg.is_standard()) throw DomainError("small_sample_rhs: correction undefined for alpha = inf");
  if (n == 0) throw DomainError("small_sample_rhs: n must be >= 1");
  const double eff = effective_sample_size(n, cfg);
  const double half_dim = 0.5 * static_cast<double>(p.size() - 1);
  return std::exp(half_dim * std::log(eff / cfg.alpha()) - eff * relative_entropy(p, s));
}

McEstimate small_sample_lhs_mc(const SimplexVector& p, const SimplexVector& s, std::uint64_t n,
                               const CoarseningConfig& cfg, std::uint64_t draws, RandomSource& rng) {
  require_same_size(p, s, "small_sample_lhs_mc");
  if (draws == 0) throw DomainError("small_sample_lhs_mc: draws must be >= 1");
  if (n == 0) throw DomainError("small_sample_lhs_mc: n must be >= 1");
  const std::size_t k = s.size();
  std::vector<double> counts(k);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t draw = 0; draw < draws; ++draw) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (std::uint64_t i = 0; i < n; ++i) counts[draw_categorical(rng, s.weights())] += 1.0;
    // D(p || s_hat) directly from counts; an empty cell under positive p gives D = inf.
    double d = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (p[j] == 0.0) continue;
      if (counts[j] == 0.0) {
        d = kInf;
        break;
      }
      d += p[j] * std::log(p[j] * static_cast<double>(n) / counts[j]);
    }
    const double value = std::isinf(d) ? 0.0 : std::exp(-cfg.alpha() * std::max(d, 0.0));
    sum += value;
    sum_sq += value * value;
  }
  const double m = static_cast<double>(draws);
  const double mean = sum / m;
  const double var = draws > 1 ? std::max(0.0, (sum_sq - m * mean * mean) / (m - 1.0)) : 0.0;
  return {mean, std::sqrt(var / m)};
}

SimplexVector asymptotic_reweight(const SimplexVector& prior, std::span<const double> distances,
                                  const CoarseningConfig& cfg) {
  if (distances.size() != prior.size()) throw ShapeError("asymptotic_reweight: length mismatch");
  const std::size_t k = prior.size();
  std::vector<double> out(k, 0.0);
  if (cfg.is_standard()) {
    double best = kInf;
    for (std::size_t i = 0; i < k; ++i) {
      if (prior[i] > 0.0) best = std::min(best, distances[i]);
    }
    if (std::isinf(best)) throw NumericalError("asymptotic_reweight: no finite distance with prior mass");
    for (std::size_t i = 0; i < k; ++i) out[i] = (prior[i] > 0.0 && distances[i] == best) ? prior[i] : 0.0;
    return SimplexVector::normalized(std::move(out));
  }
  std::vector<double> logw(k);
  for (std::size_t i = 0; i < k; ++i) {
    logw[i] = prior[i] > 0.0 ? std::log(prior[i]) - cfg.alpha() * distances[i] : -kInf;
  }
  const double norm = log_sum_exp(logw);
  if (!std::isfinite(norm)) throw NumericalError("asymptotic_reweight: all weights underflow");
  for (std::size_t i = 0; i < k; ++i) out[i] = std::exp(logw[i] - norm);
  return SimplexVector::normalized(std::move(out));
}

}  // namespace cposterior
