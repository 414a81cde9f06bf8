#include <catch2/catch_amalgamated.hpp>

#include "swarmsim/generator.hpp"
#include "swarmsim/model.hpp"
#include "swarmsim/policy.hpp"
#include "swarmsim/rng.hpp"

using namespace swarmsim;

namespace {

SwarmState make_state(int k, std::initializer_list<std::pair<PieceSet, std::int64_t>> entries) {
  SwarmState x(k);
  for (const auto& [c, n] : entries) x.add_peers(c, n);
  return x;
}

SwarmState random_state(int k, std::int64_t max_total, Rng& rng) {
  SwarmState x(k);
  std::int64_t total = 1 + static_cast<std::int64_t>(rng.below(max_total));
  for (std::int64_t i = 0; i < total; ++i) {
    std::uint64_t bits = rng.below(1ULL << k);
    if (static_cast<int>(std::popcount(bits)) == k) bits &= bits - 1;
    x.add_peers(PieceSet(bits), 1);
  }
  return x;
}

double download_rate_sum(const std::vector<Transition>& row, PieceSet from) {
  double s = 0;
  for (const auto& t : row)
    if (t.kind == Transition::Kind::Download && t.from == from) s += t.rate;
  return s;
}

}  // namespace

TEST_CASE("piece sets behave as bounded subsets") {
  PieceSet s = PieceSet::of({0, 2});
  CHECK(s.size() == 2);
  CHECK(s.contains(0));
  CHECK(!s.contains(1));
  CHECK(s.with(1).size() == 3);
  CHECK(s.without(0) == PieceSet::of({2}));
  CHECK(s.minus(PieceSet::of({0})) == PieceSet::of({2}));
  CHECK(PieceSet::of({0}).subset_of(s));
  CHECK(s.nth(0) == 0);
  CHECK(s.nth(1) == 2);
  CHECK(PieceSet::full_set(3).bits() == 0b111);
  CHECK(s.to_string() == "{1,3}");
}

TEST_CASE("arrival adds one empty-handed peer") {
  SwarmState empty(2);
  SwarmState one = apply_arrival(empty);
  CHECK(one.total() == 1);
  CHECK(one.count(PieceSet::empty_set()) == 1);

  SwarmState two = make_state(2, {{PieceSet::empty_set(), 2}});
  CHECK(apply_arrival(two).count(PieceSet::empty_set()) == 3);

  SwarmState mixed = make_state(2, {{PieceSet::of({0}), 5}});
  SwarmState next = apply_arrival(mixed);
  CHECK(next.count(PieceSet::of({0})) == 5);
  CHECK(next.count(PieceSet::empty_set()) == 1);
  CHECK(next.total() == 6);
}

TEST_CASE("download promotes, merges, and departs") {
  // completion departs
  SwarmState x = make_state(2, {{PieceSet::of({0}), 1}});
  SwarmState gone = apply_download(x, PieceSet::of({0}), 1);
  CHECK(gone.total() == 0);

  // promotion creates the grown type
  SwarmState y = make_state(3, {{PieceSet::empty_set(), 2}});
  SwarmState promoted = apply_download(y, PieceSet::empty_set(), 0);
  CHECK(promoted.count(PieceSet::empty_set()) == 1);
  CHECK(promoted.count(PieceSet::of({0})) == 1);
  CHECK(promoted.total() == 2);

  // merge into an existing type
  SwarmState z = make_state(2, {{PieceSet::empty_set(), 1}, {PieceSet::of({0}), 2}});
  SwarmState merged = apply_download(z, PieceSet::empty_set(), 0);
  CHECK(merged.count(PieceSet::of({0})) == 3);
  CHECK(merged.total() == 3);

  CHECK_THROWS_AS(apply_download(z, PieceSet::of({0}), 0), std::invalid_argument);
  CHECK_THROWS_AS(apply_download(z, PieceSet::of({1}), 0), std::invalid_argument);
}

TEST_CASE("generator row of the empty state is a lone arrival") {
  ModelParams p{3, 0.7, 1.0, 1.0};
  auto row = generator_row(SwarmState(3), p, Policy::random_useful());
  REQUIRE(row.size() == 1);
  CHECK(row[0].kind == Transition::Kind::Arrival);
  CHECK(row[0].rate == 0.7);
}

TEST_CASE("generator row matches the hand-evaluated two-piece example") {
  // K=2, us=mu=1, x = {empty: 1, {1}: 2}
  ModelParams p{2, 0.3, 1.0, 1.0};
  SwarmState x = make_state(2, {{PieceSet::empty_set(), 1}, {PieceSet::of({0}), 2}});
  auto row = generator_row(x, p, Policy::random_useful());

  double r_e0 = 0, r_e1 = 0, r_10 = 0;
  for (const auto& t : row) {
    if (t.kind != Transition::Kind::Download) continue;
    if (t.from == PieceSet::empty_set() && t.piece == 0) r_e0 = t.rate;
    if (t.from == PieceSet::empty_set() && t.piece == 1) r_e1 = t.rate;
    if (t.from == PieceSet::of({0}) && t.piece == 1) r_10 = t.rate;
  }
  CHECK_THAT(r_e0, Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));
  CHECK_THAT(r_e1, Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-12));
  CHECK_THAT(r_10, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("single-piece swarm reduces to M/M/1 rates") {
  ModelParams p{1, 0.5, 1.0, 0.8};
  for (std::int64_t n : {1, 2, 7}) {
    SwarmState x = make_state(1, {{PieceSet::empty_set(), n}});
    auto row = generator_row(x, p, Policy::random_useful());
    double down = 0, arr = 0;
    for (const auto& t : row)
      (t.kind == Transition::Kind::Arrival ? arr : down) += t.rate;
    CHECK_THAT(arr, Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(down, Catch::Matchers::WithinAbs(0.8, 1e-12));  // service rate us, any n
  }
}

TEST_CASE("generator rates are positive and the outflow is capped") {
  ModelParams p{4, 1.3, 0.9, 1.1};
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    SwarmState x = random_state(4, 30, rng);
    auto row = generator_row(x, p, Policy::random_useful());
    double out = 0;
    for (const auto& t : row) {
      CHECK(t.rate > 0);
      CHECK(std::isfinite(t.rate));
      out += t.rate;
    }
    CHECK(out <= p.lambda + p.us + p.mu * static_cast<double>(x.total()) + 1e-9);
  }
}

TEST_CASE("per-type download totals are policy independent") {
  // Sum over pieces of rate(T_{c,i}) is (x_c/|x|)(us + mu * sum of useful
  // targets), however the policy splits the pieces.
  ModelParams p{4, 1.0, 0.7, 1.2};
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    SwarmState x = random_state(4, 25, rng);
    auto base = generator_row(x, p, Policy::random_useful());
    for (Policy policy : {Policy::rarest_first(), Policy::sequential()}) {
      auto row = generator_row(x, p, policy);
      for (const auto& [cbits, xc] : x.counts()) {
        PieceSet c(cbits);
        CHECK_THAT(download_rate_sum(row, c),
                   Catch::Matchers::WithinRel(download_rate_sum(base, c), 1e-9));
      }
    }
  }
}

TEST_CASE("random useful download totals match the closed form") {
  ModelParams p{3, 1.0, 1.4, 0.6};
  Rng rng(29);
  for (int rep = 0; rep < 25; ++rep) {
    SwarmState x = random_state(3, 20, rng);
    auto row = generator_row(x, p, Policy::random_useful());
    for (const auto& [cbits, xc] : x.counts()) {
      PieceSet c(cbits);
      double useful_mass = 0;
      for (const auto& [sbits, xs] : x.counts())
        if (!PieceSet(sbits).minus(c).empty()) useful_mass += static_cast<double>(xs);
      double expected = static_cast<double>(xc) / static_cast<double>(x.total()) *
                        (p.us + p.mu * useful_mass);
      CHECK_THAT(download_rate_sum(row, c), Catch::Matchers::WithinRel(expected, 1e-9));
    }
  }
}

TEST_CASE("diagnostics counts strata, holders, and the one club") {
  SwarmState empty(2);
  Diagnostics d0 = diagnostics(empty);
  CHECK(d0.by_stratum == std::vector<std::int64_t>{0, 0});
  CHECK(d0.holders == std::vector<std::int64_t>{0, 0});
  CHECK(d0.rarest_piece == 0);  // ties break to the lowest piece

  SwarmState x = make_state(2, {{PieceSet::of({0}), 4}});
  Diagnostics d1 = diagnostics(x);
  CHECK(d1.by_stratum == std::vector<std::int64_t>{0, 4});
  CHECK(d1.holders == std::vector<std::int64_t>{4, 0});
  CHECK(d1.one_club[1] == 4);  // club of piece 2 is type {1}
  CHECK(d1.rarest_piece == 1);

  SwarmState y = make_state(3, {{PieceSet::empty_set(), 1}, {PieceSet::of({0, 1}), 9}});
  Diagnostics d2 = diagnostics(y);
  CHECK(d2.by_stratum == std::vector<std::int64_t>{1, 0, 9});
  CHECK(d2.holders == std::vector<std::int64_t>{9, 9, 0});
  CHECK(d2.one_club[2] == 9);
  CHECK(d2.rarest_piece == 2);
}

TEST_CASE("stratum totals add up to the population") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    SwarmState x = random_state(5, 40, rng);
    Diagnostics d = diagnostics(x);
    std::int64_t sum = 0;
    for (auto n : d.by_stratum) sum += n;
    CHECK(sum == x.total());
    for (int j = 0; j < 5; ++j) {
      CHECK(d.holders[j] >= 0);
      CHECK(d.holders[j] <= x.total());
      // every member of piece j's club holds each other piece
      for (int jj = 0; jj < 5; ++jj)
        if (jj != j) CHECK(d.one_club[j] <= d.holders[jj]);
    }
  }
}

TEST_CASE("every policy satisfies the usefulness constraint on random states") {
  Rng rng(37);
  for (Policy policy : {Policy::random_useful(), Policy::rarest_first(), Policy::sequential()}) {
    for (int rep = 0; rep < 60; ++rep) {
      SwarmState x = random_state(4, 20, rng);
      std::uint64_t a_bits = rng.below(1ULL << 4);
      std::uint64_t b_bits = rng.below(1ULL << 4);
      PieceSet a(a_bits & ~(1ULL << rng.below(4)));  // keep |a| < K
      PieceSet b(b_bits);
      CHECK(policy_satisfies_usefulness(policy, a, b, x));
      CHECK(policy_satisfies_usefulness(policy, a, PieceSet::full_set(4), x));
    }
  }
}

TEST_CASE("disjoint updates commute") {
  SwarmState x = make_state(3, {{PieceSet::empty_set(), 2}, {PieceSet::of({1}), 1}});
  SwarmState ab = apply_download(apply_arrival(x), PieceSet::of({1}), 2);
  SwarmState ba = apply_arrival(apply_download(x, PieceSet::of({1}), 2));
  CHECK(ab == ba);
}

TEST_CASE("the widest piece sets still fit one word") {
  PieceSet full = PieceSet::full_set(64);
  CHECK(full.size() == 64);
  CHECK(full.contains(63));
  CHECK(full.without(63).size() == 63);
  CHECK(full.nth(63) == 63);

  SwarmState x(64);
  x.add_peers(full.without(63), 1);
  SwarmState gone = apply_download(x, full.without(63), 63);
  CHECK(gone.total() == 0);  // the completed 64-piece peer departs
  CHECK_THROWS_AS(x.add_peers(full, 1), std::logic_error);
}

TEST_CASE("model parameters are validated") {
  CHECK_THROWS_AS((ModelParams{0, 1, 1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{65, 1, 1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{2, 0, 1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{2, 1, -1, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ModelParams{2, 1, 1, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((ModelParams{64, 1, 1, 1}.validate()));
}
