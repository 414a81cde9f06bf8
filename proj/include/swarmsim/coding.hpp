#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "swarmsim/model.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/simulator.hpp"

namespace swarmsim {

namespace detail {

inline bool is_prime(int q) {
  if (q < 2) return false;
  for (int d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

// Fixed irreducible polynomials for GF(2^m), one per m; runs over GF(2^m)
// reproduce bit-exactly across builds because the representation is pinned.
inline std::uint16_t binary_field_poly(int m) {
  static constexpr std::array<std::uint16_t, 9> polys = {
      0, 0x3, 0x7, 0xB, 0x13, 0x25, 0x43, 0x83, 0x11D};
  return polys[static_cast<std::size_t>(m)];
}

}  // namespace detail

/// Arithmetic over F_q for q a prime or a power of two, q <= 256. Tables are
/// precomputed once per field instance.
class GaloisField {
 public:
  explicit GaloisField(int q) : q_(q) {
    int m = 0;
    while ((1 << m) < q) ++m;
    binary_ = (1 << m) == q && m >= 1;
    if (q < 2 || q > 256 || (!binary_ && !detail::is_prime(q)))
      throw std::invalid_argument("field order must be a prime or a power of two, <= 256");
    mul_.assign(static_cast<std::size_t>(q_) * q_, 0);
    for (int a = 0; a < q_; ++a)
      for (int b = 0; b < q_; ++b)
        mul_[static_cast<std::size_t>(a) * q_ + b] =
            binary_ ? carryless_mul(static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                                    detail::binary_field_poly(m), m)
                    : static_cast<std::uint8_t>((a * b) % q_);
    inv_.assign(static_cast<std::size_t>(q_), 0);
    for (int a = 1; a < q_; ++a)
      for (int b = 1; b < q_; ++b)
        if (mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) == 1) {
          inv_[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(b);
          break;
        }
  }

  int order() const { return q_; }
  bool is_binary_extension() const { return binary_; }

  std::uint8_t add(std::uint8_t a, std::uint8_t b) const {
    return binary_ ? static_cast<std::uint8_t>(a ^ b) : static_cast<std::uint8_t>((a + b) % q_);
  }
  std::uint8_t neg(std::uint8_t a) const {
    return binary_ ? a : static_cast<std::uint8_t>((q_ - a) % q_);
  }
  std::uint8_t sub(std::uint8_t a, std::uint8_t b) const { return add(a, neg(b)); }
  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    return mul_[static_cast<std::size_t>(a) * q_ + b];
  }
  std::uint8_t inv(std::uint8_t a) const {
    if (a == 0) throw std::invalid_argument("zero has no multiplicative inverse");
    return inv_[a];
  }
  std::uint8_t random_element(Rng& rng) const {
    return static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(q_)));
  }

 private:
  static std::uint8_t carryless_mul(std::uint16_t a, std::uint16_t b, std::uint16_t poly, int m) {
    std::uint16_t r = 0;
    while (b) {
      if (b & 1) r ^= a;
      a <<= 1;
      if (a & (1u << m)) a ^= poly;
      b >>= 1;
    }
    return static_cast<std::uint8_t>(r);
  }

  int q_;
  bool binary_;
  std::vector<std::uint8_t> mul_;
  std::vector<std::uint8_t> inv_;
};

using CodingVector = std::vector<std::uint8_t>;

/// A subspace of F_q^K kept as a reduced row-echelon basis: rows have strictly
/// increasing pivot columns, pivots are one, and pivot columns are clear in
/// every other row. Two equal subspaces therefore compare equal row-by-row.
class Subspace {
 public:
  explicit Subspace(int ambient) : ambient_(ambient) {}

  static Subspace full(int ambient) {
    Subspace v(ambient);
    for (int i = 0; i < ambient; ++i) {
      CodingVector e(static_cast<std::size_t>(ambient), 0);
      e[static_cast<std::size_t>(i)] = 1;
      v.rows_.push_back(std::move(e));
      v.pivots_.push_back(i);
    }
    return v;
  }

  int ambient_dim() const { return ambient_; }
  int dim() const { return static_cast<int>(rows_.size()); }
  const std::vector<CodingVector>& basis() const { return rows_; }

  /// Reduces v against the basis in place; afterwards v is zero iff it was a
  /// member of the subspace.
  void reduce(const GaloisField& f, CodingVector& v) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      std::uint8_t coef = v[static_cast<std::size_t>(pivots_[r])];
      if (coef == 0) continue;
      for (int j = pivots_[r]; j < ambient_; ++j)
        v[static_cast<std::size_t>(j)] =
            f.sub(v[static_cast<std::size_t>(j)], f.mul(coef, rows_[r][static_cast<std::size_t>(j)]));
    }
  }

  bool contains(const GaloisField& f, const CodingVector& v) const {
    CodingVector w = v;
    reduce(f, w);
    for (std::uint8_t c : w)
      if (c != 0) return false;
    return true;
  }

  /// Adds v to the span. Returns true iff the dimension increased.
  bool insert(const GaloisField& f, const CodingVector& v) {
    if (static_cast<int>(v.size()) != ambient_)
      throw std::invalid_argument("coding vector length mismatch");
    CodingVector w = v;
    reduce(f, w);
    int lead = -1;
    for (int j = 0; j < ambient_; ++j)
      if (w[static_cast<std::size_t>(j)] != 0) {
        lead = j;
        break;
      }
    if (lead < 0) return false;
    std::uint8_t scale = f.inv(w[static_cast<std::size_t>(lead)]);
    for (int j = lead; j < ambient_; ++j)
      w[static_cast<std::size_t>(j)] = f.mul(w[static_cast<std::size_t>(j)], scale);
    std::size_t pos = 0;
    while (pos < pivots_.size() && pivots_[pos] < lead) ++pos;
    rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(pos), w);
    pivots_.insert(pivots_.begin() + static_cast<std::ptrdiff_t>(pos), lead);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (r == pos) continue;
      std::uint8_t coef = rows_[r][static_cast<std::size_t>(lead)];
      if (coef == 0) continue;
      for (int j = lead; j < ambient_; ++j)
        rows_[r][static_cast<std::size_t>(j)] = f.sub(
            rows_[r][static_cast<std::size_t>(j)], f.mul(coef, w[static_cast<std::size_t>(j)]));
    }
    return true;
  }

  /// Uniform draw over the q^dim members (the zero vector included): a random
  /// field combination of the basis rows.
  CodingVector random_vector(const GaloisField& f, Rng& rng) const {
    CodingVector v(static_cast<std::size_t>(ambient_), 0);
    for (const auto& row : rows_) {
      std::uint8_t coef = f.random_element(rng);
      if (coef == 0) continue;
      for (int j = 0; j < ambient_; ++j)
        v[static_cast<std::size_t>(j)] =
            f.add(v[static_cast<std::size_t>(j)], f.mul(coef, row[static_cast<std::size_t>(j)]));
    }
    return v;
  }

  bool subspace_of(const GaloisField& f, const Subspace& other) const {
    for (const auto& row : rows_)
      if (!other.contains(f, row)) return false;
    return true;
  }

  bool operator==(const Subspace& o) const {
    return ambient_ == o.ambient_ && rows_ == o.rows_;
  }

 private:
  int ambient_;
  std::vector<CodingVector> rows_;
  std::vector<int> pivots_;
};

/// dim(A + B), by inserting one basis into the other.
inline int sum_dim(const GaloisField& f, const Subspace& a, const Subspace& b) {
  Subspace s = a;
  for (const auto& row : b.basis()) s.insert(f, row);
  return s.dim();
}

/// dim(A ∩ B) = dim A + dim B - dim(A + B).
inline int intersection_dim(const GaloisField& f, const Subspace& a, const Subspace& b) {
  return a.dim() + b.dim() - sum_dim(f, a, b);
}

/// Probability that a uniform vector of V_B increases dim(V_A):
/// zero when V_B is contained in V_A, else 1 - q^(dim(A∩B) - dim B).
inline double useful_probability(const GaloisField& f, const Subspace& va, const Subspace& vb) {
  if (vb.subspace_of(f, va)) return 0.0;
  int exponent = intersection_dim(f, va, vb) - vb.dim();
  double p = 1.0;
  for (int i = 0; i > exponent; --i) p /= static_cast<double>(f.order());
  return 1.0 - p;
}

struct NcConfig {
  ModelParams params;
  int field_order = 2;
  double horizon = 0;
  double sample_dt = 1.0;
  std::uint64_t rng_seed = 1;
  std::int64_t max_peers = 2'000'000;
  // Optional launch population: initial_peers copies of initial_subspace.
  std::int64_t initial_peers = 0;
  std::optional<Subspace> initial_subspace;

  void validate() const {
    params.validate();
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be > 0");
    if (!(sample_dt > 0)) throw std::invalid_argument("sample_dt must be > 0");
    if (initial_peers > 0 && initial_subspace &&
        initial_subspace->ambient_dim() != params.pieces)
      throw std::invalid_argument("initial subspace ambient dimension mismatch");
  }
};

/// Coded-swarm simulation: the same event skeleton as simulate(), but a
/// contact delivers a uniform vector of the target's span and the seed
/// delivers a uniform vector of the full space. Peers depart at full
/// dimension; useless deliveries are null events. Trajectory strata hold the
/// per-dimension peer counts.
inline Trajectory nc_simulate(const NcConfig& cfg) {
  cfg.validate();
  const GaloisField field(cfg.field_order);
  const int k = cfg.params.pieces;
  Rng rng(cfg.rng_seed);

  std::vector<Subspace> peers;
  std::vector<double> arrived_at;
  std::vector<std::int64_t> dim_counts(static_cast<std::size_t>(k), 0);
  for (std::int64_t i = 0; i < cfg.initial_peers; ++i) {
    Subspace v = cfg.initial_subspace ? *cfg.initial_subspace : Subspace(k);
    if (v.dim() >= k) throw std::invalid_argument("initial peers must have dimension < K");
    ++dim_counts[static_cast<std::size_t>(v.dim())];
    peers.push_back(std::move(v));
    arrived_at.push_back(0.0);
  }

  Trajectory traj;
  traj.pieces = k;
  traj.seed_uploads_by_piece.assign(static_cast<std::size_t>(k), 0);

  const Subspace full = Subspace::full(k);
  const std::int64_t n_samples = static_cast<std::int64_t>(cfg.horizon / cfg.sample_dt + 1e-9) + 1;
  auto sample_time = [&](std::int64_t i) { return static_cast<double>(i) * cfg.sample_dt; };

  std::int64_t arrivals = 0, departures = 0, seed_uploads = 0;
  auto record = [&](double at) {
    TrajectorySample s;
    s.t = at;
    s.total = static_cast<std::int64_t>(peers.size());
    s.strata = dim_counts;
    s.arrivals = arrivals;
    s.departures = departures;
    s.seed_uploads = seed_uploads;
    traj.samples.push_back(std::move(s));
  };

  auto deliver = [&](std::size_t to, const CodingVector& v, double at) {
    --dim_counts[static_cast<std::size_t>(peers[to].dim())];
    bool increased = peers[to].insert(field, v);
    if (!increased) ++traj.null_events;
    if (peers[to].dim() == k) {
      ++departures;
      traj.departures.push_back(Departure{at, at - arrived_at[to]});
      if (to + 1 != peers.size()) {
        peers[to] = std::move(peers.back());
        arrived_at[to] = arrived_at.back();
      }
      peers.pop_back();
      arrived_at.pop_back();
    } else {
      ++dim_counts[static_cast<std::size_t>(peers[to].dim())];
    }
  };

  std::int64_t next_sample = 0;
  double t = 0;
  while (true) {
    const double n = static_cast<double>(peers.size());
    const double seed_rate = n > 0 ? cfg.params.us : 0.0;
    const double total = cfg.params.lambda + seed_rate + cfg.params.mu * n;
    double event_time = t + rng.exponential(total);
    while (next_sample < n_samples && sample_time(next_sample) < event_time) {
      record(sample_time(next_sample));
      ++next_sample;
    }
    if (event_time > cfg.horizon) break;
    t = event_time;
    double u = rng.uniform01() * total;
    if (u < cfg.params.lambda) {
      peers.emplace_back(k);
      arrived_at.push_back(t);
      ++dim_counts[0];
      ++arrivals;
    } else if (u < cfg.params.lambda + seed_rate) {
      std::size_t a = rng.below(peers.size());
      ++seed_uploads;
      deliver(a, full.random_vector(field, rng), t);
    } else {
      std::size_t a = rng.below(peers.size());
      std::size_t b = rng.below(peers.size());  // self-contact delivers nothing new
      deliver(a, peers[b].random_vector(field, rng), t);
    }
    if (static_cast<std::int64_t>(peers.size()) > cfg.max_peers)
      throw ResourceError("peer cap exceeded: coded swarm holds " +
                              std::to_string(peers.size()) + " peers",
                          static_cast<std::int64_t>(peers.size()));
  }

  traj.arrivals = arrivals;
  traj.seed_uploads = seed_uploads;
  return traj;
}

}  // namespace swarmsim
