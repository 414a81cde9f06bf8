#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "swarmsim/rng.hpp"

namespace swarmsim {

/// State of the high-contact-limit chain: n peers, all holding the same k
/// pieces, with (0, 0) the empty state.
struct ReducedChainState {
  std::int64_t peers = 0;  // n
  int shared_pieces = 0;   // k

  bool operator==(const ReducedChainState&) const = default;
};

/// Borderline contact rate lambda * sum_{k=0}^{K-2} (K-k-1)/(K-k). Returns 0
/// for K = 1 (empty sum); K < 1 is a domain error.
inline double critical_contact_rate(double lambda, int pieces) {
  if (pieces < 1) throw std::invalid_argument("need K >= 1");
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  // accumulate in extended precision and round once, so small K values land
  // on the exact double (e.g. 7/6 at K = 3)
  long double sum = 0;
  for (int k = 0; k <= pieces - 2; ++k)
    sum += static_cast<long double>(pieces - k - 1) / static_cast<long double>(pieces - k);
  return static_cast<double>(static_cast<long double>(lambda) * sum);
}

struct ReducedStep {
  double dt = 0;
  ReducedChainState next;
};

/// One exact step of the reduced chain. Transitions: arrivals at lambda from
/// every state; a seed upload lifts k below the top layer; on the top layer
/// (k = K-1) a seed upload releases one peer, emptying to (0,0) from n = 1.
inline ReducedStep reduced_chain_step(ReducedChainState s, double lambda, double us, int pieces,
                                      Rng& rng) {
  if (pieces < 2) throw std::invalid_argument("reduced chain needs K >= 2");
  ReducedStep r;
  if (s.peers == 0) {
    r.dt = rng.exponential(lambda);
    r.next = ReducedChainState{1, 0};
    return r;
  }
  const double rate = lambda + us;
  r.dt = rng.exponential(rate);
  if (rng.uniform01() * rate < lambda) {
    r.next = ReducedChainState{s.peers + 1, s.shared_pieces};
  } else if (s.shared_pieces < pieces - 1) {
    r.next = ReducedChainState{s.peers, s.shared_pieces + 1};
  } else if (s.peers >= 2) {
    r.next = ReducedChainState{s.peers - 1, pieces - 1};
  } else {
    r.next = ReducedChainState{0, 0};
  }
  return r;
}

struct ReducedChainSample {
  double t = 0;
  std::int64_t peers = 0;
  int shared_pieces = 0;
};

struct ReducedChainTrajectory {
  std::vector<ReducedChainSample> samples;
  std::int64_t events = 0;
};

inline ReducedChainTrajectory reduced_chain_simulate(double lambda, double us, int pieces,
                                                     double horizon, double sample_dt, Rng& rng,
                                                     ReducedChainState initial = {}) {
  if (!(horizon > 0) || !(sample_dt > 0)) throw std::invalid_argument("bad horizon/sample_dt");
  ReducedChainTrajectory traj;
  ReducedChainState s = initial;
  double t = 0, next_sample = 0;
  while (true) {
    ReducedStep step = reduced_chain_step(s, lambda, us, pieces, rng);
    double event_time = t + step.dt;
    while (next_sample < event_time && next_sample <= horizon + 1e-12) {
      traj.samples.push_back(ReducedChainSample{next_sample, s.peers, s.shared_pieces});
      next_sample += sample_dt;
    }
    if (event_time > horizon) break;
    t = event_time;
    s = step.next;
    ++traj.events;
  }
  return traj;
}

/// Time for the chain to first reach the top layer (k = K-1), by simulation.
inline double time_to_top_layer(ReducedChainState from, double lambda, double us, int pieces,
                                Rng& rng) {
  double t = 0;
  ReducedChainState s = from;
  while (s.shared_pieces < pieces - 1 || s.peers == 0) {
    ReducedStep step = reduced_chain_step(s, lambda, us, pieces, rng);
    t += step.dt;
    s = step.next;
  }
  return t;
}

}  // namespace swarmsim
