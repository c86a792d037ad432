#include <doctest.h>

#include <cmath>
#include <vector>

#include "cposterior/arorder.hpp"
#include "cposterior/distributions.hpp"
#include "cposterior/errors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace cposterior;

TEST_CASE("AR sufficient statistics") {
  const std::vector<double> one{1.0};
  const ARSuffStats s1 = ar_suff_stats(one, 1, 1.0);
  CHECK(s1.M(0, 0) == 0.0);
  CHECK(s1.v[0] == 0.0);
  const std::vector<double> two{1.0, 2.0};
  const ARSuffStats s2 = ar_suff_stats(two, 1, 1.0);
  CHECK(s2.M(0, 0) == 1.0);
  CHECK(s2.v[0] == 2.0);
  const ARSuffStats s0 = ar_suff_stats(two, 0, 1.0);
  CHECK(s0.M.size() == 0);
  CHECK(s0.v.size() == 0);
  // sigma scales both statistics by 1 / sigma^2.
  const ARSuffStats scaled = ar_suff_stats(two, 1, 2.0);
  CHECK(scaled.M(0, 0) == 0.25);
  CHECK(scaled.v[0] == 0.5);
}

TEST_CASE("leading blocks equal statistics computed at lower order") {
  RandomSource rng(301);
  std::vector<double> x(50);
  for (auto& v : x) v = rng.normal();
  const ARSuffStats full = ar_suff_stats(x, 6, 1.3);
  for (std::size_t k = 0; k <= 6; ++k) {
    const ARSuffStats direct = ar_suff_stats(x, k, 1.3);
    const ARSuffStats lead = full.leading(k);
    REQUIRE(lead.M.rows() == static_cast<Eigen::Index>(k));
    REQUIRE(lead.v.size() == static_cast<Eigen::Index>(k));
    if (k == 0) continue;
    CHECK((direct.M - lead.M).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((direct.v - lead.v).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((direct.M - direct.M.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(direct.M).eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS((ARModelSpec{1, 0.0, 1.0}.validate()), DomainError);
  CHECK_THROWS_AS((ARModelSpec{1, 1.0, -1.0}.validate()), DomainError);
  CHECK_NOTHROW((ARModelSpec{0, 1.0, 1.0}.validate()));
}

TEST_CASE("closed-form marginal reduces correctly at k = 0 and n = 1") {
  const std::vector<double> x{0.7, -1.2, 2.5};
  const CoarseningConfig cfg(10.0);
  const double z = zeta(x.size(), cfg);
  double base = 0.0;
  for (double v : x) base += normal_logpdf(v, 0.0, 1.5);
  CHECK(std::abs(log_coarsened_marginal(x, ARModelSpec{0, 1.5, 2.0}, cfg) - z * base) < 1e-13);

  const std::vector<double> single{1.7};
  const double z1 = zeta(1, cfg);
  CHECK(std::abs(log_coarsened_marginal(single, ARModelSpec{1, 1.0, 3.0}, cfg) -
                 z1 * normal_logpdf(1.7, 0.0, 1.0)) < 1e-13);
}

TEST_CASE("closed-form marginal matches quadrature for orders one and two") {
  RandomSource rng(307);
  for (std::size_t k : {1u, 2u}) {
    for (int seed = 0; seed < 10; ++seed) {
      RandomSource local = rng.split(k * 100 + static_cast<std::uint64_t>(seed));
      const std::size_t n = 3 + static_cast<std::size_t>(local.next_u64() % 8);
      std::vector<double> x(n);
      for (auto& v : x) v = local.normal() * 1.2;
      const double sigma = 0.8 + 0.6 * local.uniform();
      const double sigma0 = 0.5 + local.uniform();
      const CoarseningConfig cfg(seed % 3 == 0 ? 10.0 : 2.0 + 20.0 * local.uniform());
      const double closed = log_coarsened_marginal(x, ARModelSpec{k, sigma, sigma0}, cfg);
      const double quad = oracles::ar_log_marginal_by_quadrature(x, k, sigma, sigma0, zeta(n, cfg));
      CHECK(std::abs(closed - quad) < 1e-8);
    }
  }
}

TEST_CASE("coarsened marginal converges to the standard marginal as alpha grows") {
  RandomSource rng(311);
  std::vector<double> x(40);
  for (auto& v : x) v = rng.normal();
  const ARModelSpec spec{3, 1.0, 1.0};
  const double standard = log_coarsened_marginal(x, spec, CoarseningConfig::standard());
  double prev = INFINITY;
  for (double alpha : {10.0, 100.0, 1e3, 1e4, 1e6, 1e9, 1e12}) {
    const double gap = std::abs(log_coarsened_marginal(x, spec, CoarseningConfig(alpha)) - standard);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("order posterior behaviour") {
  const std::vector<double> zeros(30, 0.0);
  const OrderPosterior flat = cposterior_over_orders(zeros, 5, 1.0, 1.0, CoarseningConfig(50.0));
  for (double p : flat.posterior) CHECK(std::abs(p - 1.0 / 6.0) < 1e-12);

  RandomSource rng(313);
  const std::vector<double> theta = default_misspec_theta();
  const std::vector<double> x = generate_misspec_ar(400, theta, 1.0, 0.5, rng);
  const OrderPosterior standard = cposterior_over_orders(x, 8, 1.0, 1.0, CoarseningConfig::standard());
  for (std::size_t k = 0; k <= 8; ++k) {
    const ARModelSpec spec{k, 1.0, 1.0};
    CHECK(standard.log_marginal[k] == log_coarsened_marginal(x, spec, CoarseningConfig::standard()));
  }
  const SimplexVector prior({0.5, 0.1, 0.1, 0.1, 0.1, 0.02, 0.02, 0.02, 0.04});
  const OrderPosterior weighted = cposterior_over_orders(x, 8, 1.0, 1.0, CoarseningConfig(100.0), prior);
  const OrderPosterior uniform = cposterior_over_orders(x, 8, 1.0, 1.0, CoarseningConfig(100.0));
  for (std::size_t k = 0; k <= 8; ++k) {
    CHECK(std::abs(weighted.posterior[k] / uniform.posterior[k] / prior[k] -
                   weighted.posterior[0] / uniform.posterior[0] / prior[0]) < 1e-8);
  }
  CHECK_THROWS_AS(cposterior_over_orders(x, 8, 1.0, 1.0, CoarseningConfig(100.0), SimplexVector::uniform(3)),
                  ShapeError);
}

TEST_CASE("misspecified AR generator") {
  RandomSource a(317);
  RandomSource b(317);
  const std::vector<double> theta = default_misspec_theta();
  CHECK(theta == std::vector<double>{0.25, 0.25, -0.25, 0.25});
  const std::vector<double> x = generate_misspec_ar(200, theta, 1.0, 0.5, a);
  // Reconstruct the noise and check it is standard normal.
  RandomSource c(319);
  const std::vector<double> y = generate_misspec_ar(20000, theta, 1.0, 0.5, c);
  std::vector<double> eps(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    double mean = 0.5 * std::sin(static_cast<double>(t + 1));
    for (std::size_t l = 1; l <= 4; ++l) {
      if (t >= l) mean += theta[l - 1] * y[t - l];
    }
    eps[t] = y[t] - mean;
  }
  CHECK(testsupport::ks_statistic(eps, normal_cdf) < testsupport::ks_critical_001(eps.size()));
  CHECK(x == generate_misspec_ar(200, theta, 1.0, 0.5, b));

  RandomSource d(321);
  const std::vector<double> flat = generate_misspec_ar(50, std::vector<double>{1.0}, 0.0, 0.0, d);
  for (double v : flat) CHECK(v == 0.0);
  RandomSource e(323);
  const std::vector<double> white = generate_misspec_ar(20000, std::vector<double>{}, 2.0, 0.0, e);
  CHECK(testsupport::ks_statistic(white, [](double t) { return normal_cdf(t / 2.0); }) <
        testsupport::ks_critical_001(white.size()));
}
