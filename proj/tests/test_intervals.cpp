#include <catch_amalgamated.hpp>

#include <random>

#include "fhci/intervals.hpp"
#include "test_support.hpp"

using Catch::Approx;
using namespace fhci;
using test::kZ975;

TEST_CASE("direct interval lengths") {
  const auto a = direct_interval(0.0, 0.7, 0.05);
  CHECK(a.length() == Approx(2.0 * 1.959964 * std::sqrt(0.7)).epsilon(1e-6));
  CHECK(a.length() == Approx(3.27965).margin(5e-6));
  CHECK(std::round(a.length() * 10) / 10 == Approx(3.3));
  const auto b = direct_interval(0.0, 4.0, 0.05);
  CHECK(b.length() == Approx(7.8399).margin(5e-5));
  const auto c = direct_interval(0.0, 1.0, 2.0 * (1.0 - normal::cdf(1.0)));
  CHECK(c.half_width == Approx(1.0).margin(1e-12));
  CHECK(a.half_width == Approx(a.length() / 2));
  CHECK_THROWS_AS(direct_interval(0.0, 1.0, 1.2), Error);
  try {
    direct_interval(0.0, 1.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidAlpha);
  }
}

TEST_CASE("Cox interval with A_hat = 0 collapses to the synthetic value") {
  Vector y(6);
  y << 1.0, 1.1, 0.9, 1.0, 1.05, 0.95;
  const FayHerriotDataset d(y, Vector::Constant(6, 2.0), intercept_design(6));
  const auto r = cox_interval(d, 2, VarianceEstimator::REML, 0.05);
  CHECK(r.A_used == 0.0);
  CHECK(r.length() == 0.0);
  CHECK(r.lower == Approx(y.mean()));
}

TEST_CASE("Cox interval is centred on the EB estimate") {
  std::mt19937_64 gen(12);
  const auto d = test::random_dataset(gen, 15, 2);
  for (const auto est : {VarianceEstimator::REML, VarianceEstimator::LiLahiri,
                         VarianceEstimator::YL_GLS, VarianceEstimator::YL_OLS}) {
    const auto r = cox_interval(d, 3, est, 0.05);
    const auto fit = fit_regression(d, r.A_used, centre_beta_method(est));
    const auto eb = eb_estimate(d, 3, r.A_used, fit.beta_hat);
    CHECK(0.5 * (r.lower + r.upper) == Approx(eb.theta_eb).epsilon(1e-14));
    CHECK(r.half_width == Approx(kZ975 * eb.sigma).epsilon(1e-12));
  }
}

TEST_CASE("balanced length ordering RE <= YL-GLS <= YL-OLS < direct") {
  std::mt19937_64 gen(44);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 20; ++rep) {
    Vector y(15);
    for (auto& v : y) v = std::sqrt(1.5) * n01(gen);
    const FayHerriotDataset d(y, Vector::Constant(15, 0.5), intercept_design(15));
    const std::size_t i = static_cast<std::size_t>(rep) % 15;
    const double re = cox_interval(d, i, VarianceEstimator::REML, 0.05).length();
    const double gls = cox_interval(d, i, VarianceEstimator::YL_GLS, 0.05).length();
    const double ols = cox_interval(d, i, VarianceEstimator::YL_OLS, 0.05).length();
    const double direct = direct_interval(d, i, 0.05).length();
    CHECK(re <= gls);
    CHECK(gls <= ols + 1e-9);
    CHECK(ols < direct);
  }
}

TEST_CASE("every Cox-type interval is shorter than the direct one") {
  std::mt19937_64 gen(45);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = test::random_dataset(gen, 12 + rep, 1 + rep % 2, 1.0, 0.1, 5.0);
    for (const IntervalMethod m : kAllIntervalMethods) {
      if (!is_cox_type(m)) continue;
      const auto res = intervals_for_all_areas(d, m, 0.1);
      for (std::size_t i = 0; i < d.m(); ++i) {
        CHECK(res[i].length() < direct_interval(d, i, 0.1).length());
        CHECK(res[i].lower <= res[i].upper);
      }
    }
  }
}

TEST_CASE("empirical quantile uses (k - 0.5)/n plotting positions") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  CHECK(empirical_quantile(s, 0.125) == 1.0);  // (1 - 0.5)/4
  CHECK(empirical_quantile(s, 0.375) == 2.0);
  CHECK(empirical_quantile(s, 0.5) == 2.5);
  CHECK(empirical_quantile(s, 0.01) == 1.0);
  CHECK(empirical_quantile(s, 0.99) == 4.0);
  CHECK(empirical_quantile(s, 0.25) == Approx(1.5));
}

TEST_CASE("bootstrap is deterministic under a fixed seed and thread count") {
  std::mt19937_64 gen(3);
  const auto d = test::random_dataset(gen, 15, 1);
  const auto a = bootstrap_interval(d, 0, 200, VarianceEstimator::LiLahiri, 0.05, 42);
  const auto b = bootstrap_interval(d, 0, 200, VarianceEstimator::LiLahiri, 0.05, 42);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
  CHECK(a.n_bootstrap == 200);
  const auto c = bootstrap_interval(d, 0, 200, VarianceEstimator::LiLahiri, 0.05, 43);
  CHECK(a.lower != c.lower);

  BootstrapOptions opt;
  opt.B = 200;
  opt.seed = 42;
  const std::size_t areas[] = {0, 5};
  opt.threads = 1;
  const auto serial = bootstrap_intervals(d, areas, opt);
  opt.threads = 3;
  const auto parallel = bootstrap_intervals(d, areas, opt);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(serial[k].lower == parallel[k].lower);
    CHECK(serial[k].upper == parallel[k].upper);
  }
  CHECK(serial[0].lower == a.lower);
  CHECK_THROWS_AS(bootstrap_interval(d, 0, 50, VarianceEstimator::LiLahiri, 0.05, 1), Error);
}

TEST_CASE("bootstrap pivot with known A is close to standard normal") {
  std::mt19937_64 gen(10);
  const auto d = test::random_dataset(gen, 200, 1, 1.0, 0.5, 1.5);
  BootstrapOptions opt;
  opt.B = 6000;
  opt.seed = 9;
  opt.known_A = 1.0;
  const std::size_t areas[] = {0, 1};
  const auto piv = bootstrap_pivots(d, areas, opt);
  for (const auto& sample : piv.pivots) {
    CHECK(std::abs(empirical_quantile(sample, 0.025) + kZ975) < 0.1);
    CHECK(std::abs(empirical_quantile(sample, 0.975) - kZ975) < 0.1);
  }
  CHECK(piv.failures == 0);
}

TEST_CASE("bootstrap with a YL estimator refits per area") {
  std::mt19937_64 gen(6);
  const auto d = test::random_dataset(gen, 15, 1);
  BootstrapOptions opt;
  opt.B = 100;
  opt.estimator = VarianceEstimator::YL_GLS;
  const std::size_t areas[] = {1, 4};
  const auto res = bootstrap_intervals(d, areas, opt);
  REQUIRE(res.size() == 2);
  CHECK(res[0].A_used != res[1].A_used);
  CHECK(res[0].lower < res[0].upper);
}
