#include <catch_amalgamated.hpp>

#include <random>

#include "fhci/intervals.hpp"
#include "fhci/mse.hpp"
#include "test_support.hpp"

using Catch::Approx;
using namespace fhci;
using test::kZ975;

TEST_CASE("balanced MSE pieces") {
  Vector y = Vector::LinSpaced(15, -1.0, 1.0);
  const FayHerriotDataset d(y, Vector::Ones(15), intercept_design(15));
  const auto g = mse_approx(d, 0, 1.0, BetaMethod::GLS);
  CHECK(g.g1 == Approx(0.5).epsilon(1e-14));
  CHECK(g.g2 == Approx(0.5 / 15.0).epsilon(1e-12));
  CHECK(g.g3 == Approx(2.0 / 8.0 / 3.75).epsilon(1e-12));
  CHECK(g.total == Approx(0.6).epsilon(1e-12));
  CHECK(g.g1 == Approx(posterior_sd(1.0, 1.0) * posterior_sd(1.0, 1.0)));
}

TEST_CASE("OLS g2 is never below GLS g2") {
  std::mt19937_64 gen(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = test::random_dataset(gen, 20, 3, 1.0, 0.1, 6.0);
    for (std::size_t i = 0; i < d.m(); i += 3) {
      CHECK(mse_approx(d, i, 0.5, BetaMethod::OLS).g2 >=
            mse_approx(d, i, 0.5, BetaMethod::GLS).g2 * (1 - 1e-12));
    }
  }
}

TEST_CASE("estimator decomposes as g1 + g2 + 2 g3 - bias") {
  std::mt19937_64 gen(6);
  const auto d = test::random_dataset(gen, 25, 2);
  const auto e = mse_estimate(d, 4, 0.9, kZ975);
  CHECK(e.total == Approx(e.g1 + e.g2 + 2 * e.g3 - e.bias_correction).epsilon(1e-14));
  CHECK(e.bias_correction > 0.0);
  CHECK_FALSE(e.unreliable);
  CHECK_THROWS_AS(mse_estimate(d, 4, 0.0, kZ975), Error);
}

TEST_CASE("g2 and g3 shrink like 1/m") {
  const auto make = [](std::size_t m) {
    Vector D(m);
    for (std::size_t i = 0; i < m; ++i) D(static_cast<Eigen::Index>(i)) = 0.5 + (i % 4) * 0.5;
    return FayHerriotDataset(Vector::Zero(static_cast<Eigen::Index>(m)), D, intercept_design(m));
  };
  const auto small = mse_approx(make(40), 0, 1.0, BetaMethod::GLS);
  const auto large = mse_approx(make(160), 0, 1.0, BetaMethod::GLS);
  CHECK(small.g1 == Approx(large.g1));
  CHECK(small.g2 / large.g2 == Approx(4.0).epsilon(1e-10));
  CHECK(small.g3 / large.g3 == Approx(4.0).epsilon(1e-10));
}

TEST_CASE("MSE estimator tracks the Monte Carlo MSE") {
  // m = 50 areas in five D groups; compare E[mse_hat] with the simulated MSE
  // of the EB estimator that plugs in the YL-GLS estimate.
  const std::size_t m = 50, R = 4000, area = 0;
  Vector D(m);
  for (std::size_t i = 0; i < m; ++i) D(static_cast<Eigen::Index>(i)) = 0.4 + 0.4 * (i % 5);
  const double A = 1.0, z = kZ975;
  const FayHerriotDataset base(Vector::Zero(m), D, intercept_design(m));
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> n01;
  double sum_est = 0.0, sum_sq = 0.0, sum_sq2 = 0.0;
  std::size_t used = 0;
  for (std::size_t r = 0; r < R; ++r) {
    Vector y(m);
    double theta_i = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double th = std::sqrt(A) * n01(gen);
      if (j == area) theta_i = th;
      y(static_cast<Eigen::Index>(j)) = th + std::sqrt(D(static_cast<Eigen::Index>(j))) * n01(gen);
    }
    const auto data = base.with_y(y);
    const double A_hat = estimate_A(data, VarianceEstimator::YL_GLS, area, z);
    const auto fit = fit_regression(data, A_hat, BetaMethod::GLS);
    const double err = eb_estimate(data, area, A_hat, fit.beta_hat).theta_eb - theta_i;
    sum_sq += err * err;
    sum_sq2 += err * err * err * err;
    sum_est += mse_estimate(data, area, A_hat, z).total;
    ++used;
  }
  const double n = static_cast<double>(used);
  const double mc_mse = sum_sq / n;
  const double mc_se = std::sqrt((sum_sq2 / n - mc_mse * mc_mse) / n);
  const double mean_est = sum_est / n;
  INFO("MC MSE " << mc_mse << " +- " << mc_se << ", mean estimate " << mean_est);
  CHECK(std::abs(mean_est - mc_mse) <= 3.0 * mc_se);
  // Naive g1 alone understates the MSE.
  CHECK(mse_approx(base, area, A, BetaMethod::GLS).g1 < mc_mse);
}
