#include <catch2/catch_amalgamated.hpp>

#include "swarmsim/policy.hpp"
#include "swarmsim/simulator.hpp"

using namespace swarmsim;

namespace {
SwarmState make_state(int k, std::initializer_list<std::pair<PieceSet, std::int64_t>> entries) {
  SwarmState x(k);
  for (const auto& [c, n] : entries) x.add_peers(c, n);
  return x;
}
}  // namespace

TEST_CASE("random useful selection is uniform over the useful set") {
  SwarmState x(2);
  Rng rng(1);
  std::vector<std::int64_t> hits(2, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    ++hits[select_piece_random_useful(PieceSet::empty_set(), PieceSet::of({0, 1}), x, rng)];
  // chi-square against the uniform split, 1 dof, 99.9% quantile 10.83
  double stat = chi_square_statistic(hits, {0.5, 0.5});
  CHECK(stat < 10.83);

  CHECK(select_piece_random_useful(PieceSet::of({0}), PieceSet::of({0, 1}), x, rng) == 1);
}

TEST_CASE("seed selection covers exactly the missing pieces") {
  SwarmState x(3);
  Rng rng(2);
  PieceSet nearly = PieceSet::of({0, 1});
  for (int i = 0; i < 20; ++i)
    CHECK(select_piece_random_useful(nearly, PieceSet::full_set(3), x, rng) == 2);
}

TEST_CASE("rarest first picks the globally least held piece") {
  SwarmState x = make_state(2, {{PieceSet::of({0}), 10}, {PieceSet::of({1}), 1}});
  Rng rng(3);
  for (int i = 0; i < 20; ++i)
    CHECK(select_piece_rarest_first(PieceSet::empty_set(), PieceSet::of({0, 1}), x, rng) == 1);

  // full tie: uniform over the useful set
  SwarmState tie = make_state(2, {{PieceSet::of({0}), 3}, {PieceSet::of({1}), 3}});
  std::vector<std::int64_t> hits(2, 0);
  for (int i = 0; i < 40000; ++i)
    ++hits[select_piece_rarest_first(PieceSet::empty_set(), PieceSet::of({0, 1}), tie, rng)];
  CHECK(chi_square_statistic(hits, {0.5, 0.5}) < 10.83);

  // singleton useful set: counts are irrelevant
  CHECK(select_piece_rarest_first(PieceSet::of({0}), PieceSet::of({0, 1}), x, rng) == 1);
}

TEST_CASE("sequential selection takes the lowest-indexed useful piece") {
  SwarmState x(3);
  Rng rng(4);
  CHECK(select_piece_sequential(PieceSet::empty_set(), PieceSet::of({1, 2}), x, rng) == 1);
  CHECK(select_piece_sequential(PieceSet::of({0}), PieceSet::of({0, 1, 2}), x, rng) == 1);
}

TEST_CASE("all policies throw when nothing is useful") {
  SwarmState x(2);
  Rng rng(5);
  PieceSet a = PieceSet::of({0});
  CHECK_THROWS_AS(select_piece_random_useful(a, a, x, rng), std::logic_error);
  CHECK_THROWS_AS(select_piece_rarest_first(a, PieceSet::empty_set(), x, rng), std::logic_error);
  CHECK_THROWS_AS(select_piece_sequential(a, a, x, rng), std::logic_error);
}

TEST_CASE("forced choices agree across policies") {
  Rng rng(6);
  SwarmState x = make_state(3, {{PieceSet::of({0}), 2}, {PieceSet::of({2}), 5}});
  PieceSet a = PieceSet::of({0});
  PieceSet b = PieceSet::of({0, 2});  // useful set is the singleton {2}
  for (Policy policy : {Policy::random_useful(), Policy::rarest_first(), Policy::sequential()})
    CHECK(policy.select(a, b, x, rng) == 2);
}

TEST_CASE("sequential runs only ever hold piece prefixes") {
  SimConfig cfg;
  cfg.params = ModelParams{5, 1.0, 1.0, 1.0};
  cfg.policy = Policy::sequential();
  cfg.horizon = 400;  // ~1e4 events at this scale
  cfg.sample_dt = 0.5;
  cfg.rng_seed = 99;
  Trajectory traj = simulate(cfg);
  // Holder counts must be non-increasing in the piece index at every sample:
  // peers hold {1..j} only.
  for (const auto& s : traj.samples)
    for (std::size_t j = 1; j < s.holders.size(); ++j)
      CHECK(s.holders[j] <= s.holders[j - 1]);
}

TEST_CASE("policy names parse and print consistently") {
  for (const char* name : {"random-useful", "rarest-first", "sequential"})
    CHECK(parse_policy(name).name() == name);
  CHECK_THROWS_AS(parse_policy("fastest-first"), std::invalid_argument);
}
