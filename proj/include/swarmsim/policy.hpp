#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swarmsim/model.hpp"
#include "swarmsim/rng.hpp"

namespace swarmsim {

/// Uniform choice among the useful pieces (source minus holder). The seed case
/// passes the full piece set as `source`.
inline int select_piece_random_useful(PieceSet have, PieceSet source,
                                      const SwarmState& /*x*/, Rng& rng) {
  PieceSet useful = source.minus(have);
  if (useful.empty()) throw std::logic_error("no useful piece available");
  return useful.nth(static_cast<int>(rng.below(useful.size())));
}

/// Per-piece holder counts restricted to `wanted`, computed from the full state.
inline std::vector<std::pair<int, std::int64_t>> holder_counts_of(PieceSet wanted,
                                                                  const SwarmState& x) {
  std::vector<std::pair<int, std::int64_t>> counts;
  for (std::uint64_t b = wanted.bits(); b != 0; b &= b - 1)
    counts.emplace_back(std::countr_zero(b), 0);
  for (const auto& [bits, n] : x.counts())
    for (auto& [piece, m] : counts)
      if ((bits >> piece) & 1ULL) m += n;
  return counts;
}

/// Among the useful pieces, pick one with the globally smallest holder count;
/// ties are broken uniformly at random.
inline int select_piece_rarest_first(PieceSet have, PieceSet source, const SwarmState& x,
                                     Rng& rng) {
  PieceSet useful = source.minus(have);
  if (useful.empty()) throw std::logic_error("no useful piece available");
  auto counts = holder_counts_of(useful, x);
  std::int64_t best = counts.front().second;
  for (const auto& [piece, m] : counts)
    if (m < best) best = m;
  std::vector<int> ties;
  for (const auto& [piece, m] : counts)
    if (m == best) ties.push_back(piece);
  return ties[rng.below(ties.size())];
}

/// Lowest-indexed useful piece (most-abundant-first behavior).
inline int select_piece_sequential(PieceSet have, PieceSet source, const SwarmState& /*x*/,
                                   Rng& /*rng*/) {
  PieceSet useful = source.minus(have);
  if (useful.empty()) throw std::logic_error("no useful piece available");
  return useful.lowest();
}

enum class PieceSelection { RandomUseful, RarestFirst, Sequential };

/// A piece-selection rule from the useful-piece family: whenever the source
/// holds a piece the downloader lacks, one such piece must be chosen.
struct Policy {
  PieceSelection rule = PieceSelection::RandomUseful;

  static Policy random_useful() { return {PieceSelection::RandomUseful}; }
  static Policy rarest_first() { return {PieceSelection::RarestFirst}; }
  static Policy sequential() { return {PieceSelection::Sequential}; }

  std::string_view name() const {
    switch (rule) {
      case PieceSelection::RandomUseful: return "random-useful";
      case PieceSelection::RarestFirst: return "rarest-first";
      case PieceSelection::Sequential: return "sequential";
    }
    return "?";
  }

  int select(PieceSet have, PieceSet source, const SwarmState& x, Rng& rng) const {
    switch (rule) {
      case PieceSelection::RarestFirst: return select_piece_rarest_first(have, source, x, rng);
      case PieceSelection::Sequential: return select_piece_sequential(have, source, x, rng);
      default: return select_piece_random_useful(have, source, x, rng);
    }
  }

  /// Exact selection distribution h(have, source, x) over pieces. Support is
  /// contained in source - have; weights sum to one.
  std::vector<std::pair<int, double>> distribution(PieceSet have, PieceSet source,
                                                   const SwarmState& x) const {
    PieceSet useful = source.minus(have);
    if (useful.empty()) throw std::logic_error("no useful piece available");
    std::vector<std::pair<int, double>> dist;
    switch (rule) {
      case PieceSelection::RandomUseful: {
        double p = 1.0 / useful.size();
        for (std::uint64_t b = useful.bits(); b != 0; b &= b - 1)
          dist.emplace_back(std::countr_zero(b), p);
        break;
      }
      case PieceSelection::RarestFirst: {
        auto counts = holder_counts_of(useful, x);
        std::int64_t best = counts.front().second;
        for (const auto& [piece, m] : counts)
          if (m < best) best = m;
        int ties = 0;
        for (const auto& [piece, m] : counts)
          if (m == best) ++ties;
        for (const auto& [piece, m] : counts)
          if (m == best) dist.emplace_back(piece, 1.0 / ties);
        break;
      }
      case PieceSelection::Sequential:
        dist.emplace_back(useful.lowest(), 1.0);
        break;
    }
    return dist;
  }
};

inline Policy parse_policy(std::string_view s) {
  if (s == "random-useful") return Policy::random_useful();
  if (s == "rarest-first") return Policy::rarest_first();
  if (s == "sequential") return Policy::sequential();
  throw std::invalid_argument("unknown policy: " + std::string(s));
}

/// Checks the usefulness constraint on a concrete (have, source, state) triple:
/// the selection distribution is a probability distribution supported on the
/// useful set.
inline bool policy_satisfies_usefulness(const Policy& policy, PieceSet have, PieceSet source,
                                        const SwarmState& x, double tol = 1e-12) {
  PieceSet useful = source.minus(have);
  if (useful.empty()) return true;  // contact is a no-op; nothing to check
  double sum = 0;
  for (const auto& [piece, p] : policy.distribution(have, source, x)) {
    if (!useful.contains(piece) || p <= 0) return false;
    sum += p;
  }
  return sum > 1 - tol && sum < 1 + tol;
}

}  // namespace swarmsim
