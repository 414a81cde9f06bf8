#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "swarmsim/lyapunov.hpp"

using namespace swarmsim;

namespace {
SwarmState make_state(int k, std::initializer_list<std::pair<PieceSet, std::int64_t>> entries) {
  SwarmState x(k);
  for (const auto& [c, n] : entries) x.add_peers(c, n);
  return x;
}
}  // namespace

TEST_CASE("coefficient construction matches the two-piece hand example") {
  LyapunovCoefficients c = lyapunov_coefficients(0.5, 1.0, 2);
  REQUIRE(c.b.size() == 2);
  CHECK_THAT(c.b[0], Catch::Matchers::WithinAbs(1.01, 1e-12));
  CHECK_THAT(c.b[1], Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(c.a[0], Catch::Matchers::WithinAbs(2.01, 1e-12));
  // us*b_0 - lambda*a_0 = 1.01 - 0.5*2.01 = 0.005 > 0
  CHECK_THAT(1.0 * c.b[0] - 0.5 * c.a[0], Catch::Matchers::WithinAbs(0.005, 1e-12));
  CHECK(check_coefficient_conditions(c, 0.5, 1.0));
}

TEST_CASE("a single piece needs no conditions") {
  LyapunovCoefficients c = lyapunov_coefficients(0.3, 1.0, 1);
  CHECK(c.b == std::vector<double>{1.0});
  CHECK(check_coefficient_conditions(c, 0.3, 1.0));
}

TEST_CASE("coefficients blow up toward the stability boundary") {
  double b0_far = lyapunov_coefficients(0.9, 1.0, 3).b[0];
  double b0_near = lyapunov_coefficients(0.99, 1.0, 3).b[0];
  double b0_nearer = lyapunov_coefficients(0.999, 1.0, 3).b[0];
  CHECK(b0_far < b0_near);
  CHECK(b0_near < b0_nearer);
  CHECK(b0_nearer > 1e4);  // growth factor (lambda/(us-lambda))^2
}

TEST_CASE("the two descent conditions are equivalent on constructed weights") {
  Rng rng(3);
  for (int rep = 0; rep < 40; ++rep) {
    double us = 0.5 + rng.uniform01();
    double lambda = us * (0.05 + 0.9 * rng.uniform01());
    int k = 1 + static_cast<int>(rng.below(6));
    LyapunovCoefficients c = lyapunov_coefficients(lambda, us, k);
    for (int i = 0; i + 1 < k; ++i) {
      bool first = c.b[i] > (lambda / (us - lambda)) * c.a[i + 1];
      bool second = us * c.b[i] - lambda * c.a[i] > 0;
      CHECK(first == second);  // a_{i+1} = a_i - b_i makes them the same claim
      CHECK(first);
    }
  }
}

TEST_CASE("construction refuses the unstable regime") {
  CHECK_THROWS_AS(lyapunov_coefficients(1.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(lyapunov_coefficients(1.4, 1.0, 2), std::invalid_argument);
}

TEST_CASE("single-piece drift matches the quadratic M/M/1 form") {
  // V = n^2/2: QV = lambda (n + 1/2) - us (n - 1/2) for n >= 1
  ModelParams p{1, 0.4, 1.0, 0.9};
  LyapunovCoefficients c = lyapunov_coefficients(0.4, 0.9, 1);
  for (std::int64_t n : {1, 2, 5, 40}) {
    SwarmState x = make_state(1, {{PieceSet::empty_set(), n}});
    DriftValue v = drift_qv(x, p, c);
    double expected = 0.4 * (static_cast<double>(n) + 0.5) - 0.9 * (static_cast<double>(n) - 0.5);
    CHECK_THAT(v.exact, Catch::Matchers::WithinAbs(expected, 1e-9));
    CHECK(v.exact <= v.bound + 1e-9);
  }
}

TEST_CASE("the empty state's drift is the weighted arrival half-step") {
  ModelParams p{3, 0.6, 1.0, 1.0};
  LyapunovCoefficients c = lyapunov_coefficients(0.6, 1.0, 3);
  DriftValue v = drift_qv(SwarmState(3), p, c);
  CHECK_THAT(v.exact, Catch::Matchers::WithinAbs(0.6 * c.a[0] / 2, 1e-12));
  CHECK_THAT(v.bound, Catch::Matchers::WithinAbs(0.6 * c.a[0] / 2, 1e-12));
}

TEST_CASE("the exact drift never exceeds its analytic bound") {
  ModelParams p{3, 0.9, 1.0, 1.0};
  LyapunovCoefficients c = lyapunov_coefficients(0.9, 1.0, 3);
  Rng rng(12);
  for (int rep = 0; rep < 2000; ++rep) {
    SwarmState x = sample_state_for_drift(3, 1, 10000, rng);
    DriftValue v = drift_qv(x, p, c);
    double tol = 1e-9 * (std::abs(v.bound) + std::abs(v.exact) + 1);
    CHECK(v.exact <= v.bound + tol);
  }
}

TEST_CASE("drift certificates exist in the subcritical regime and verify") {
  ModelParams p{2, 0.5, 1.0, 1.0};
  LyapunovCoefficients c = lyapunov_coefficients(0.5, 1.0, 2);
  DriftCertificate cert = drift_region_check(p, c, {}, 300, 5);
  REQUIRE(cert.found);
  CHECK(cert.epsilon > 0);
  CHECK(cert.threshold > 0);
  CHECK(cert.sampled == 300);
  CHECK(cert.verified);
  CHECK(cert.worst_ratio <= -cert.epsilon * (1 - 1e-9));
}

TEST_CASE("near the boundary the certificate exists but its region is remote") {
  ModelParams p{3, 0.99, 1.0, 1.0};
  LyapunovCoefficients c = lyapunov_coefficients(0.99, 1.0, 3);
  DriftCertificate cert = drift_region_check(p, c, {}, 50, 6);
  REQUIRE(cert.found);
  CHECK(cert.threshold > 1e12);  // tiny drift margin pushes the region far out
}

TEST_CASE("no certificate is claimed in the unstable regime") {
  // hand-built weights; the descent conditions cannot hold for lambda > us
  LyapunovCoefficients c;
  c.b = {2.0, 1.0};
  c.a = {3.0, 1.0};
  ModelParams p{2, 1.3, 1.0, 1.0};
  DriftCertificate cert = drift_region_check(p, c);
  CHECK_FALSE(cert.found);
  CHECK_FALSE(cert.note.empty());
}

TEST_CASE("drift state sampling respects its range") {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    SwarmState x = sample_state_for_drift(3, 50, 500, rng);
    CHECK(x.total() >= 50);
    CHECK(x.total() <= 500);
  }
  CHECK_THROWS_AS(sample_state_for_drift(3, 10, 5, rng), std::invalid_argument);
}
