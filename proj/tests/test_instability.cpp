#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "swarmsim/instability.hpp"
#include "swarmsim/queueing.hpp"

using namespace swarmsim;

TEST_CASE("constant selection is feasible and self-verifying at K=3") {
  ModelParams p{3, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  CHECK_THAT(c.epsilon, Catch::Matchers::WithinAbs(0.1, 1e-12));
  CHECK(c.xi > 0);
  CHECK(c.rho < 0.5);
  CHECK(c.n_o > 0);
  ConstantsCheck check = verify_instability_constants(p, c);
  CHECK(check.ok);
  CHECK(check.violations.empty());

  // exact substitutions, re-done here by hand
  CHECK(3 * c.epsilon < p.lambda - p.us);
  CHECK(c.epsilon - 4 * 3 * c.xi * p.us > 0);
  CHECK(c.epsilon_o / (p.lambda - p.us - 3 * c.epsilon) < c.xi);
  CHECK(std::exp(p.lambda * (2 * 2 / p.mu + 1)) * std::exp2(-c.level_b) /
            (1 - std::exp2(-c.epsilon_o)) <=
        0.1);
  CHECK(64 * 9 * c.xi * p.us / (2 * c.level_b * (c.epsilon - 12 * c.xi * p.us)) <= 0.1);
  CHECK(p.lambda / (2 * c.level_b * c.epsilon) <= 0.1);
  CHECK(p.us / (2 * c.level_b * c.epsilon) <= 0.1);
  CHECK(c.level_b / (static_cast<double>(c.n_o) - 3 * c.level_b) <= c.xi);
}

TEST_CASE("constant selection scales to K=40 with a large level") {
  ModelParams p{40, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  CHECK(verify_instability_constants(p, c).ok);
  // the infinite-server bound forces 2^B beyond e^{lambda(2(K-1)/mu + 1)}
  CHECK(c.level_b >= p.lambda * (2 * 39 / p.mu + 1) / std::log(2.0));
  CHECK(c.n_o > 1000000);
}

TEST_CASE("constant selection refuses the subcritical regime") {
  CHECK_THROWS_AS(instability_constants(ModelParams{3, 1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(instability_constants(ModelParams{3, 0.8, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("the constants verifier names violated inequalities") {
  ModelParams p{3, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  c.level_b = 1.0;  // breaks the level conditions
  ConstantsCheck check = verify_instability_constants(p, c);
  CHECK_FALSE(check.ok);
  CHECK_FALSE(check.violations.empty());
}

TEST_CASE("comparison moments match hand substitution and stay capped") {
  // K=2, xi=0.1, mu=1: rho=0.2, E[X]=2, E[J] = 3/0.8 - 1 = 2.75 <= 8
  ComparisonMoments m = comparison_moments(0.1, 1.0, 1.0, 2);
  CHECK_THAT(m.rho, Catch::Matchers::WithinAbs(0.2, 1e-12));
  CHECK_THAT(m.mean_jump, Catch::Matchers::WithinAbs(2.75, 1e-12));
  CHECK(m.mean_jump <= m.mean_cap);
  CHECK(m.second_moment_jump <= m.second_moment_cap);
  CHECK_THAT(m.mean_cap, Catch::Matchers::WithinAbs(8.0, 1e-12));
  CHECK_THAT(m.second_moment_cap, Catch::Matchers::WithinAbs(256.0, 1e-12));
  CHECK_THAT(m.root_rate, Catch::Matchers::WithinAbs(0.1, 1e-12));

  // xi -> 0: E[J] -> mu E[X] = 2(K-1)
  ComparisonMoments lo = comparison_moments(1e-9, 1.0, 1.0, 5);
  CHECK_THAT(lo.mean_jump, Catch::Matchers::WithinAbs(8.0, 1e-6));

  CHECK_THROWS_AS(comparison_moments(0.3, 1.0, 1.0, 2), std::invalid_argument);  // rho >= 1/2
  CHECK_THROWS_AS(comparison_moments(0.1, 1.0, 1.0, 1), std::invalid_argument);  // K < 2
}

TEST_CASE("comparison moments hold across the admissible grid") {
  for (int k : {2, 3, 8, 16, 40, 64})
    for (double frac : {0.1, 0.5, 0.9}) {
      double xi = frac * 0.5 / (2.0 * (k - 1));  // keeps rho = 2 xi (K-1) < 1/2
      for (double mu : {0.5, 1.0, 2.0}) {
        ComparisonMoments m = comparison_moments(xi, mu, 1.0, k);
        CHECK(m.mean_jump <= 4.0 * k);
        CHECK(m.second_moment_jump <= 64.0 * k * k);
      }
    }
}

TEST_CASE("the branching oracle reproduces the mean jump size") {
  Rng rng(404);
  double se = 0;
  double est = comparison_mean_jump_oracle(0.1, 1.0, 2, 40000, rng, &se);
  CHECK(std::abs(est - 2.75) <= 3 * se);
}

TEST_CASE("alternative-system runs from the launch state hold their events") {
  ModelParams p{3, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  int all_ok = 0;
  const int runs = 10;
  for (int r = 0; r < runs; ++r) {
    Rng rng = Rng::substream(4711, static_cast<std::uint64_t>(r));
    AltSystemResult res = alt_system_simulate(p, c, 150.0, 10.0, rng);
    if (res.all_ok()) ++all_ok;
    CHECK(res.final_total > 0);
    CHECK(res.samples.size() >= 15);
    // counters are consistent with the sampled trajectory
    CHECK(res.samples.back().arrivals == res.arrivals);
  }
  CHECK(all_ok >= 6);  // the construction promises probability >= 0.6
}

TEST_CASE("the same launch collapses in the subcritical regime") {
  // dynamics-only constants: the event checks are not meaningful here
  InstabilityConstants c;
  c.epsilon = 0.01;
  c.xi = 0.05;
  c.epsilon_o = 0.001;
  c.level_b = 10;
  c.n_o = 200;
  ModelParams p{3, 0.6, 1.0, 1.0};
  int collapsed = 0;
  const int runs = 20;
  for (int r = 0; r < runs; ++r) {
    Rng rng = Rng::substream(555, static_cast<std::uint64_t>(r));
    AltSystemResult res = alt_system_simulate(p, c, 800.0, 50.0, rng);
    if (res.final_total < 100) ++collapsed;
  }
  CHECK(collapsed >= 19);
}

TEST_CASE("young peers are dominated by the infinite-server occupancy") {
  // the observable shadow of the comparison: Y_t in the alternative system
  // sits stochastically below M/GI/infinity with Gamma(K-1, mu/2) service
  ModelParams p{3, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  const double at = 40.0;
  std::vector<double> young, occupancy;
  for (int r = 0; r < 1500; ++r) {
    Rng rng_a = Rng::substream(808, static_cast<std::uint64_t>(r));
    AltSystemResult res = alt_system_simulate(p, c, at, at / 2, rng_a);
    young.push_back(static_cast<double>(res.final_young));
    Rng rng_b = Rng::substream(909, static_cast<std::uint64_t>(r));
    auto path = mgi_infinity_simulate_gamma(p.lambda, p.pieces, p.mu, at, rng_b);
    occupancy.push_back(static_cast<double>(path.occupancy_at(at)));
  }
  DominanceResult dom = empirical_dominance(young, occupancy);
  CHECK(dom.dominated);
}

TEST_CASE("alternative-system parameters are sanity checked") {
  ModelParams p{3, 1.4, 1.0, 1.0};
  InstabilityConstants c = instability_constants(p);
  Rng rng(1);
  InstabilityConstants bad = c;
  bad.xi = 0.7;
  CHECK_THROWS_AS(alt_system_simulate(p, bad, 10, 1, rng), std::logic_error);
  bad = c;
  bad.n_o = 0;
  CHECK_THROWS_AS(alt_system_simulate(p, bad, 10, 1, rng), std::logic_error);
  CHECK_THROWS_AS(alt_system_simulate(p, c, -1, 1, rng), std::invalid_argument);
}
