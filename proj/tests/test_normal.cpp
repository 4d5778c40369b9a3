#include <catch_amalgamated.hpp>

#include <cmath>

#include "fhci/normal.hpp"
#include "fhci/rng.hpp"

using Catch::Approx;
namespace normal = fhci::normal;

TEST_CASE("quantile inverts the CDF to 1e-10") {
  const double probes[] = {1e-6, 1e-5, 1e-4, 1e-3, 0.01, 0.02425, 0.025, 0.05, 0.1,  0.25,
                           0.4,  0.5,  0.6,  0.75, 0.9,  0.95,    0.975, 0.99, 0.999, 1 - 1e-6};
  for (const double u : probes) {
    INFO("u = " << u);
    CHECK(std::abs(normal::cdf(normal::quantile(u)) - u) <= 1e-10);
  }
  for (int k = 1; k < 1000; ++k) {
    const double u = k / 1000.0;
    CHECK(std::abs(normal::cdf(normal::quantile(u)) - u) <= 1e-10);
  }
}

TEST_CASE("standard constants") {
  CHECK(normal::z_half(0.05) == Approx(1.959964).margin(5e-7));
  CHECK(normal::quantile(0.5) == 0.0);
  // alpha = 2(1 - Phi(1)) gives z = 1.
  CHECK(normal::z_half(2.0 * (1.0 - normal::cdf(1.0))) == Approx(1.0).margin(1e-12));
  CHECK(normal::quantile(0.0) == -INFINITY);
  CHECK(std::isnan(normal::quantile(1.5)));
}

TEST_CASE("invalid alpha is rejected") {
  CHECK_THROWS_AS(normal::z_half(0.0), fhci::Error);
  CHECK_THROWS_AS(normal::z_half(1.0), fhci::Error);
  CHECK_THROWS_AS(normal::z_half(-0.1), fhci::Error);
}

TEST_CASE("keyed streams are reproducible and distinct") {
  auto a = fhci::StreamRng::keyed(7, {1, 2});
  auto b = fhci::StreamRng::keyed(7, {1, 2});
  auto c = fhci::StreamRng::keyed(7, {2, 1});
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  auto s = fhci::StreamRng::keyed(11, {});
  double sum = 0.0, sum2 = 0.0;
  constexpr int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double x = s.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
