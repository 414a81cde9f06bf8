#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "swarmsim/generator.hpp"
#include "swarmsim/model.hpp"
#include "swarmsim/policy.hpp"

namespace swarmsim {

/// Raised when the truncation leak of the transient solver crosses the
/// configured threshold: rerun with a wider cap.
class WidenCapError : public std::runtime_error {
 public:
  WidenCapError(std::int64_t cap, double leak)
      : std::runtime_error("truncation leak " + std::to_string(leak) + " at cap " +
                           std::to_string(cap) + "; widen the cap") {}
};

/// Exact transient distribution of the swarm chain at time t, restricted to
/// states with |x| <= cap, by uniformization at rate lambda + us + mu * cap.
struct TransientDistribution {
  int pieces = 0;
  std::int64_t cap = 0;
  double leak = 0;  // mass lost to truncation plus the Poisson-tail residue
  std::vector<std::uint32_t> type_masks;             // the proper subsets, fixed order
  std::unordered_map<std::uint64_t, double> probs;   // packed state -> probability

  static std::uint64_t pack(const std::vector<std::int64_t>& counts) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < counts.size(); ++i)
      key |= static_cast<std::uint64_t>(counts[i] & 0xFF) << (8 * i);
    return key;
  }

  /// Probability of a full state; zero for states outside the truncation.
  double prob_of(const SwarmState& x) const {
    if (x.total() > cap) return 0;
    std::vector<std::int64_t> counts(type_masks.size(), 0);
    for (std::size_t i = 0; i < type_masks.size(); ++i)
      counts[i] = x.count(PieceSet(type_masks[i]));
    auto it = probs.find(pack(counts));
    return it == probs.end() ? 0 : it->second;
  }
};

/// Transient solver for the random-useful chain started from the empty state.
/// Requires K <= 3 and cap <= 250 (state keys pack one byte per type).
inline TransientDistribution uniformization_transient(const ModelParams& p, std::int64_t cap,
                                                      double t, double leak_threshold = 1e-6) {
  p.validate();
  if (p.pieces > 3) throw std::invalid_argument("transient solver supports K <= 3");
  if (cap < 1 || cap > 250) throw std::invalid_argument("cap must lie in [1, 250]");
  if (t < 0) throw std::invalid_argument("t must be >= 0");

  TransientDistribution dist;
  dist.pieces = p.pieces;
  dist.cap = cap;
  const int n_types = (1 << p.pieces) - 1;
  for (int m = 0; m < n_types; ++m) dist.type_masks.push_back(static_cast<std::uint32_t>(m));

  // Enumerate all states with total <= cap.
  std::vector<std::vector<std::int64_t>> states;
  std::unordered_map<std::uint64_t, std::uint32_t> index;
  {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_types), 0);
    auto rec = [&](auto&& self, int type, std::int64_t left) -> void {
      if (type == n_types - 1) {
        for (std::int64_t c = 0; c <= left; ++c) {
          counts[type] = c;
          index.emplace(TransientDistribution::pack(counts), states.size());
          states.push_back(counts);
        }
        counts[type] = 0;
        return;
      }
      for (std::int64_t c = 0; c <= left; ++c) {
        counts[type] = c;
        self(self, type + 1, left - c);
      }
      counts[type] = 0;
    };
    rec(rec, 0, cap);
  }

  const double uniform_rate = p.lambda + p.us + p.mu * static_cast<double>(cap);
  const std::uint32_t kLeak = 0xFFFFFFFFu;

  // Sparse jump-probability rows of P = I + Q / uniform_rate.
  struct Entry {
    std::uint32_t to;
    double prob;
  };
  std::vector<std::vector<Entry>> rows(states.size());
  std::vector<double> stay(states.size(), 0.0);
  {
    Policy policy = Policy::random_useful();
    std::vector<std::int64_t> scratch;
    for (std::size_t si = 0; si < states.size(); ++si) {
      SwarmState x(p.pieces);
      std::int64_t total = 0;
      for (int m = 0; m < n_types; ++m)
        if (states[si][m] > 0) {
          x.add_peers(PieceSet(static_cast<std::uint64_t>(m)), states[si][m]);
          total += states[si][m];
        }
      double out = 0;
      for (const Transition& tr : generator_row(x, p, policy)) {
        scratch = states[si];
        std::uint32_t to;
        if (tr.kind == Transition::Kind::Arrival) {
          if (total == cap) {
            to = kLeak;
          } else {
            ++scratch[PieceSet::empty_set().bits()];
            to = index.at(TransientDistribution::pack(scratch));
          }
        } else {
          --scratch[tr.from.bits()];
          PieceSet grown = tr.from.with(tr.piece);
          if (grown.size() < p.pieces) ++scratch[grown.bits()];
          to = index.at(TransientDistribution::pack(scratch));
        }
        rows[si].push_back(Entry{to, tr.rate / uniform_rate});
        out += tr.rate;
      }
      stay[si] = 1.0 - out / uniform_rate;
    }
  }

  // Transient distribution: sum over n of Poisson(uniform_rate * t) weights of
  // the n-step uniformized chain from the empty state.
  std::vector<double> v(states.size(), 0.0), next(states.size(), 0.0);
  std::vector<double> acc(states.size(), 0.0);
  std::vector<std::int64_t> zero(static_cast<std::size_t>(n_types), 0);
  v[index.at(TransientDistribution::pack(zero))] = 1.0;
  double v_leak = 0, acc_leak = 0;

  const double mean_jumps = uniform_rate * t;
  double weight_sum = 0;
  std::int64_t n = 0;
  while (true) {
    double log_w = -mean_jumps + (n > 0 ? static_cast<double>(n) * std::log(mean_jumps) : 0.0) -
                   std::lgamma(static_cast<double>(n) + 1);
    double w = std::exp(log_w);
    if (w > 0) {
      for (std::size_t i = 0; i < states.size(); ++i) acc[i] += w * v[i];
      acc_leak += w * v_leak;
      weight_sum += w;
    }
    if (weight_sum >= 1.0 - 1e-12 && static_cast<double>(n) > mean_jumps) break;
    if (n > static_cast<std::int64_t>(mean_jumps + 60 * std::sqrt(mean_jumps + 10) + 200)) break;
    // one uniformized step
    for (std::size_t i = 0; i < states.size(); ++i) next[i] = stay[i] * v[i];
    double next_leak = v_leak;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (v[i] == 0) continue;
      for (const Entry& e : rows[i]) {
        if (e.to == kLeak)
          next_leak += e.prob * v[i];
        else
          next[e.to] += e.prob * v[i];
      }
    }
    v.swap(next);
    v_leak = next_leak;
    ++n;
  }

  dist.leak = acc_leak + std::max(0.0, 1.0 - weight_sum);
  if (dist.leak > leak_threshold) throw WidenCapError(cap, dist.leak);
  for (std::size_t i = 0; i < states.size(); ++i)
    if (acc[i] > 0) dist.probs.emplace(TransientDistribution::pack(states[i]), acc[i]);
  return dist;
}

}  // namespace swarmsim
