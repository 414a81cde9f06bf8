#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace swarmsim {

inline constexpr int kMaxPieces = 64;  // piece sets fit one machine word

namespace detail {
/// n-th (0-based) set bit of mask, as a single-bit mask.
inline std::uint64_t nth_set_bit(std::uint64_t mask, int n) {
  for (int i = 0; i < n; ++i) mask &= mask - 1;
  return mask & (~mask + 1);
}
}  // namespace detail

/// Model parameters: K pieces, peer arrival rate, per-peer contact rate and
/// seed upload rate (all strictly positive).
struct ModelParams {
  int pieces = 1;        // K
  double lambda = 1.0;   // peer arrival rate
  double mu = 1.0;       // per-peer contact rate
  double us = 1.0;       // seed upload rate

  void validate() const {
    if (pieces < 1 || pieces > kMaxPieces)
      throw std::invalid_argument("pieces must be in [1, 64]");
    if (!(lambda > 0)) throw std::invalid_argument("lambda must be > 0");
    if (!(mu > 0)) throw std::invalid_argument("mu must be > 0");
    if (!(us > 0)) throw std::invalid_argument("us must be > 0");
  }
};

/// A subset of the K pieces, held as a bit mask. Piece indices are 0-based in
/// code; reports and CSV output print them 1-based.
class PieceSet {
 public:
  constexpr PieceSet() = default;
  constexpr explicit PieceSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr PieceSet empty_set() { return PieceSet(0); }
  static constexpr PieceSet full_set(int k) {
    return PieceSet(k == 64 ? ~0ULL : ((1ULL << k) - 1));
  }
  static PieceSet of(std::initializer_list<int> pieces) {
    std::uint64_t b = 0;
    for (int p : pieces) b |= (1ULL << p);
    return PieceSet(b);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int piece) const { return (bits_ >> piece) & 1ULL; }
  constexpr PieceSet with(int piece) const { return PieceSet(bits_ | (1ULL << piece)); }
  constexpr PieceSet without(int piece) const { return PieceSet(bits_ & ~(1ULL << piece)); }
  constexpr PieceSet minus(PieceSet other) const { return PieceSet(bits_ & ~other.bits_); }
  constexpr PieceSet intersect(PieceSet other) const { return PieceSet(bits_ & other.bits_); }
  constexpr bool subset_of(PieceSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr int lowest() const { return std::countr_zero(bits_); }

  /// The n-th set bit (0-based n < size()).
  int nth(int n) const {
    std::uint64_t b = bits_;
    for (int i = 0; i < n; ++i) b &= b - 1;
    return std::countr_zero(b);
  }

  constexpr bool operator==(const PieceSet&) const = default;

  std::string to_string() const {  // 1-based, e.g. "{1,3}"
    std::string s = "{";
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
      if (s.size() > 1) s += ',';
      s += std::to_string(std::countr_zero(b) + 1);
    }
    return s + "}";
  }

 private:
  std::uint64_t bits_ = 0;
};

/// Markov state of the swarm: a mapping from peer type (piece set) to the
/// number of peers of that type. Absent keys mean zero; stored counts are
/// strictly positive. Pure value semantics.
class SwarmState {
 public:
  using CountMap = std::unordered_map<std::uint64_t, std::int64_t>;

  SwarmState() = default;
  explicit SwarmState(int pieces) : pieces_(pieces) {}

  /// Launch state: n peers that all hold every piece except `missing_piece`.
  static SwarmState one_club_launch(int pieces, std::int64_t n, int missing_piece = 0) {
    SwarmState x(pieces);
    if (n > 0) x.add_peers(PieceSet::full_set(pieces).without(missing_piece), n);
    return x;
  }

  int piece_count() const { return pieces_; }
  std::int64_t total() const { return total_; }

  std::int64_t count(PieceSet c) const {
    auto it = counts_.find(c.bits());
    return it == counts_.end() ? 0 : it->second;
  }

  /// Adjust the count of a type by delta (may be negative). Drops keys at
  /// zero; going negative is a contract violation.
  void add_peers(PieceSet c, std::int64_t delta) {
    if (delta == 0) return;
    if (c.size() >= pieces_ && pieces_ > 0)
      throw std::logic_error("peer type must be a proper subset of the pieces");
    auto [it, inserted] = counts_.try_emplace(c.bits(), 0);
    it->second += delta;
    if (it->second < 0) throw std::logic_error("peer count went negative");
    if (it->second == 0) counts_.erase(it);
    total_ += delta;
  }

  const CountMap& counts() const { return counts_; }
  bool operator==(const SwarmState& o) const {
    return pieces_ == o.pieces_ && total_ == o.total_ && counts_ == o.counts_;
  }

 private:
  int pieces_ = 0;
  std::int64_t total_ = 0;
  CountMap counts_;
};

/// One positive entry of the generator row out of a state.
struct Transition {
  enum class Kind { Arrival, Download };
  Kind kind = Kind::Arrival;
  PieceSet from;   // downloading peer's type (Download only)
  int piece = -1;  // downloaded piece (Download only)
  double rate = 0;

  bool is_departure(int pieces) const {
    return kind == Kind::Download && from.size() == pieces - 1;
  }
};

/// New state after one exogenous peer arrival.
inline SwarmState apply_arrival(const SwarmState& x) {
  SwarmState next = x;
  next.add_peers(PieceSet::empty_set(), 1);
  return next;
}

/// New state after a type-c peer downloads piece i. Completing the collection
/// is a departure. Preconditions: x_c >= 1 and i not in c.
inline SwarmState apply_download(const SwarmState& x, PieceSet c, int piece) {
  if (c.contains(piece)) throw std::invalid_argument("piece already held");
  if (x.count(c) < 1) throw std::invalid_argument("no peer of the source type");
  SwarmState next = x;
  next.add_peers(c, -1);
  PieceSet grown = c.with(piece);
  if (grown.size() < x.piece_count()) next.add_peers(grown, 1);
  return next;  // full collection departs immediately
}

inline SwarmState apply_transition(const SwarmState& x, const Transition& t) {
  return t.kind == Transition::Kind::Arrival ? apply_arrival(x)
                                             : apply_download(x, t.from, t.piece);
}

/// Per-state summary: stratum counts n_i, per-piece holder counts m_j,
/// one-club sizes o_j = x_{F \ {j}}, and the rarest piece (ties -> lowest).
struct Diagnostics {
  std::vector<std::int64_t> by_stratum;  // n_i, i = 0..K-1
  std::vector<std::int64_t> holders;     // m_j, 0-based piece
  std::vector<std::int64_t> one_club;    // o_j
  int rarest_piece = 0;                  // 0-based
};

inline Diagnostics diagnostics(const SwarmState& x) {
  const int k = x.piece_count();
  Diagnostics d;
  d.by_stratum.assign(k, 0);
  d.holders.assign(k, 0);
  d.one_club.assign(k, 0);
  for (const auto& [bits, n] : x.counts()) {
    PieceSet c(bits);
    d.by_stratum[c.size()] += n;
    for (std::uint64_t b = bits; b != 0; b &= b - 1) d.holders[std::countr_zero(b)] += n;
  }
  PieceSet full = PieceSet::full_set(k);
  for (int j = 0; j < k; ++j) d.one_club[j] = x.count(full.without(j));
  for (int j = 1; j < k; ++j)
    if (d.holders[j] < d.holders[d.rarest_piece]) d.rarest_piece = j;
  return d;
}

}  // namespace swarmsim
