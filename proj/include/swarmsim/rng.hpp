#pragma once

#include <cstdint>
#include <random>

namespace swarmsim {

// SplitMix64 step; used to expand seeds and derive substream seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seedable random stream. Substreams derived from (base seed, index) are
/// statistically independent, one per replica.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::seed_seq seq{splitmix64_next(s), splitmix64_next(s), splitmix64_next(s),
                      splitmix64_next(s)};
    engine_.seed(seq);
  }

  static Rng substream(std::uint64_t base_seed, std::uint64_t index) {
    return Rng(substream_seed(base_seed, index));
  }

  /// Seed of the index-th substream of a base seed.
  static std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t s = base_seed;
    std::uint64_t a = splitmix64_next(s);
    s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64_next(s);
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  /// Exponential holding time with the given rate.
  double exponential(double rate) {
    return std::exponential_distribution<double>(rate)(engine_);
  }

  /// Gamma with shape and *rate* (not scale) parameters.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }

  std::int64_t poisson(double mean) {
    return std::poisson_distribution<std::int64_t>(mean)(engine_);
  }

  /// Uniform draw from {0, 1, ..., n-1}.
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace swarmsim
