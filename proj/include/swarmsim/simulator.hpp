#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "swarmsim/model.hpp"
#include "swarmsim/policy.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/stats.hpp"

namespace swarmsim {

/// Thrown when a run outgrows its configured peer cap.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(std::string what, std::int64_t peers)
      : std::runtime_error(std::move(what)), peers_(peers) {}
  std::int64_t peers() const { return peers_; }

 private:
  std::int64_t peers_;
};

struct SimConfig {
  ModelParams params;
  Policy policy = Policy::random_useful();
  double horizon = 0;
  double sample_dt = 1.0;
  std::uint64_t rng_seed = 1;
  SwarmState initial;                  // default: empty swarm
  std::int64_t max_peers = 8'000'000;

  void validate() const {
    params.validate();
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be > 0");
    if (!(sample_dt > 0)) throw std::invalid_argument("sample_dt must be > 0");
    if (initial.piece_count() != 0 && initial.piece_count() != params.pieces)
      throw std::invalid_argument("initial state piece count mismatch");
  }
};

struct TrajectorySample {
  double t = 0;
  std::int64_t total = 0;
  std::vector<std::int64_t> strata;    // n_i (piece engine) or dim counts (coded)
  std::vector<std::int64_t> holders;   // m_j; empty in coded mode
  std::vector<std::int64_t> one_club;  // o_j; empty in coded mode
  std::int64_t arrivals = 0;           // cumulative
  std::int64_t departures = 0;         // cumulative
  std::int64_t seed_uploads = 0;       // cumulative
};

struct Departure {
  double t = 0;
  double sojourn = 0;
};

struct Trajectory {
  int pieces = 0;
  std::vector<TrajectorySample> samples;
  std::vector<Departure> departures;
  std::int64_t arrivals = 0;
  std::int64_t seed_uploads = 0;
  std::int64_t null_events = 0;
  std::vector<std::int64_t> seed_uploads_by_piece;
};

struct StepResult {
  double dt = 0;
  std::optional<Transition> applied;  // nullopt: a no-op contact (null event)
};

namespace detail {

/// Incremental engine behind step() and simulate(). Keeps the exact swarm
/// state plus per-type arrival stamps so one event costs O(#types). Events are
/// sampled hierarchically (class, then actor, target and piece), which is
/// distribution-identical to flat sampling from the generator row; contacts
/// with nothing useful are null events.
class SwarmEngine {
 public:
  SwarmEngine(const ModelParams& p, Policy policy, SwarmState initial, Rng rng)
      : p_(p), policy_(policy), rng_(std::move(rng)), state_(std::move(initial)) {
    if (state_.piece_count() == 0) state_ = SwarmState(p_.pieces);
    full_ = PieceSet::full_set(p_.pieces);
    seed_uploads_by_piece_.assign(p_.pieces, 0);
    for (const auto& [bits, n] : state_.counts())
      stamps_[bits].assign(static_cast<std::size_t>(n), 0.0);
  }

  const SwarmState& state() const { return state_; }
  double now() const { return t_; }
  std::int64_t arrivals() const { return arrivals_; }
  std::int64_t departures_count() const { return departures_count_; }
  std::int64_t seed_uploads() const { return seed_uploads_; }
  std::int64_t null_events() const { return null_events_; }
  const std::vector<std::int64_t>& seed_uploads_by_piece() const {
    return seed_uploads_by_piece_;
  }
  std::vector<Departure>& departures() { return departures_; }

  /// Exponential holding time out of the current state. The state stays
  /// unchanged until apply_next_event() is called.
  double draw_holding_time() {
    const double n = static_cast<double>(state_.total());
    const double total = p_.lambda + (n > 0 ? p_.us : 0.0) + p_.mu * n;
    double dt = rng_.exponential(total);
    t_ += dt;
    return dt;
  }

  /// Chooses and applies the event at the current time.
  std::optional<Transition> apply_next_event() {
    const double n = static_cast<double>(state_.total());
    const double seed_rate = n > 0 ? p_.us : 0.0;
    const double total = p_.lambda + seed_rate + p_.mu * n;
    double u = rng_.uniform01() * total;
    if (u < p_.lambda) {
      apply_arrival_event();
      return Transition{Transition::Kind::Arrival, PieceSet::empty_set(), -1, p_.lambda};
    }
    u -= p_.lambda;
    if (u < seed_rate) {
      PieceSet c = pick_uniform_peer_type();
      int piece = policy_.select(c, full_, state_, rng_);
      ++seed_uploads_;
      ++seed_uploads_by_piece_[piece];
      apply_download_event(c, piece);
      return Transition{Transition::Kind::Download, c, piece, 0};
    }
    PieceSet a = pick_uniform_peer_type();
    PieceSet b = pick_uniform_peer_type();  // target may be any peer, the contactor included
    if (b.minus(a).empty()) {
      ++null_events_;
      return std::nullopt;  // nothing useful
    }
    int piece = policy_.select(a, b, state_, rng_);
    apply_download_event(a, piece);
    return Transition{Transition::Kind::Download, a, piece, 0};
  }

  void check_peer_cap(std::int64_t cap) const {
    if (state_.total() > cap)
      throw ResourceError("peer cap exceeded: swarm holds " + std::to_string(state_.total()) +
                              " peers (cap " + std::to_string(cap) + ")",
                          state_.total());
  }

 private:
  PieceSet pick_uniform_peer_type() {
    std::int64_t u = static_cast<std::int64_t>(rng_.below(state_.total()));
    for (const auto& [bits, n] : state_.counts()) {
      u -= n;
      if (u < 0) return PieceSet(bits);
    }
    throw std::logic_error("peer pick ran past the count table");
  }

  void apply_arrival_event() {
    state_.add_peers(PieceSet::empty_set(), 1);
    stamps_[PieceSet::empty_set().bits()].push_back(t_);
    ++arrivals_;
  }

  void apply_download_event(PieceSet c, int piece) {
    auto it = stamps_.find(c.bits());
    auto& from = it->second;
    std::size_t idx = rng_.below(from.size());
    double stamp = from[idx];
    from[idx] = from.back();
    from.pop_back();
    if (from.empty()) stamps_.erase(it);
    state_.add_peers(c, -1);
    PieceSet grown = c.with(piece);
    if (grown.size() < p_.pieces) {
      state_.add_peers(grown, 1);
      stamps_[grown.bits()].push_back(stamp);
    } else {
      ++departures_count_;
      departures_.push_back(Departure{t_, t_ - stamp});
    }
  }

  ModelParams p_;
  Policy policy_;
  Rng rng_;
  SwarmState state_;
  PieceSet full_;
  double t_ = 0;
  std::int64_t arrivals_ = 0;
  std::int64_t departures_count_ = 0;
  std::int64_t seed_uploads_ = 0;
  std::int64_t null_events_ = 0;
  std::vector<std::int64_t> seed_uploads_by_piece_;
  std::vector<Departure> departures_;
  std::unordered_map<std::uint64_t, std::vector<double>> stamps_;  // arrival times per type
};

}  // namespace detail

/// One exact step from an arbitrary state, advancing it in place. On a null
/// event the state is unchanged and `applied` is empty.
inline StepResult step(SwarmState& x, const ModelParams& p, const Policy& policy, Rng& rng) {
  if (x.piece_count() == 0) x = SwarmState(p.pieces);
  const double n = static_cast<double>(x.total());
  const double seed_rate = n > 0 ? p.us : 0.0;
  const double total = p.lambda + seed_rate + p.mu * n;
  StepResult res;
  res.dt = rng.exponential(total);
  double u = rng.uniform01() * total;
  auto pick_type = [&]() {
    std::int64_t v = static_cast<std::int64_t>(rng.below(x.total()));
    for (const auto& [bits, cnt] : x.counts()) {
      v -= cnt;
      if (v < 0) return PieceSet(bits);
    }
    throw std::logic_error("peer pick ran past the count table");
  };
  if (u < p.lambda) {
    x = apply_arrival(x);
    res.applied = Transition{Transition::Kind::Arrival, PieceSet::empty_set(), -1, p.lambda};
    return res;
  }
  u -= p.lambda;
  if (u < seed_rate) {
    PieceSet c = pick_type();
    int piece = policy.select(c, PieceSet::full_set(p.pieces), x, rng);
    x = apply_download(x, c, piece);
    res.applied = Transition{Transition::Kind::Download, c, piece, 0};
    return res;
  }
  PieceSet a = pick_type();
  PieceSet b = pick_type();
  if (b.minus(a).empty()) return res;  // null event
  int piece = policy.select(a, b, x, rng);
  x = apply_download(x, a, piece);
  res.applied = Transition{Transition::Kind::Download, a, piece, 0};
  return res;
}

/// Exact event-by-event simulation to the horizon. Samples are taken on the
/// sample_dt grid with the state held constant between events; the sample at a
/// grid time sees the pre-event state. Deterministic given the seed.
inline Trajectory simulate(const SimConfig& cfg) {
  cfg.validate();
  detail::SwarmEngine engine(cfg.params, cfg.policy, cfg.initial, Rng(cfg.rng_seed));
  Trajectory traj;
  traj.pieces = cfg.params.pieces;

  const std::int64_t n_samples = static_cast<std::int64_t>(cfg.horizon / cfg.sample_dt + 1e-9) + 1;
  auto sample_time = [&](std::int64_t i) { return static_cast<double>(i) * cfg.sample_dt; };

  auto record = [&](double at) {
    Diagnostics d = diagnostics(engine.state());
    TrajectorySample s;
    s.t = at;
    s.total = engine.state().total();
    s.strata = std::move(d.by_stratum);
    s.holders = std::move(d.holders);
    s.one_club = std::move(d.one_club);
    s.arrivals = engine.arrivals();
    s.departures = engine.departures_count();
    s.seed_uploads = engine.seed_uploads();
    traj.samples.push_back(std::move(s));
  };

  std::int64_t next_sample = 0;
  double t = 0;
  while (true) {
    double event_time = t + engine.draw_holding_time();
    while (next_sample < n_samples && sample_time(next_sample) < event_time) {
      record(sample_time(next_sample));
      ++next_sample;
    }
    if (event_time > cfg.horizon) break;
    engine.apply_next_event();
    engine.check_peer_cap(cfg.max_peers);
    t = event_time;
  }

  traj.departures = std::move(engine.departures());
  traj.arrivals = engine.arrivals();
  traj.seed_uploads = engine.seed_uploads();
  traj.null_events = engine.null_events();
  traj.seed_uploads_by_piece = engine.seed_uploads_by_piece();
  return traj;
}

/// Least-squares growth rate of |x_t| over a time window.
inline double slope_estimate(const Trajectory& traj, double t0, double t1) {
  std::vector<double> ts, ys;
  for (const auto& s : traj.samples)
    if (s.t >= t0 && s.t <= t1) {
      ts.push_back(s.t);
      ys.push_back(static_cast<double>(s.total));
    }
  if (ts.size() < 10) throw std::invalid_argument("slope window holds fewer than 10 samples");
  return least_squares_slope(ts, ys);
}

/// Time-averaged |x| over a window (mean over grid samples in the window).
inline double time_average_total(const Trajectory& traj, double t0, double t1) {
  double sum = 0;
  std::int64_t n = 0;
  for (const auto& s : traj.samples)
    if (s.t >= t0 && s.t <= t1) {
      sum += static_cast<double>(s.total);
      ++n;
    }
  if (n == 0) throw std::invalid_argument("window holds no samples");
  return sum / static_cast<double>(n);
}

struct PresenceProfile {
  std::vector<double> avg_holders;  // time-averaged m_j, one per piece
  double avg_total = 0;             // time-averaged |x|
};

/// Time-averaged per-piece holder counts over the whole run.
inline PresenceProfile piece_presence_profile(const Trajectory& traj) {
  if (traj.samples.empty()) throw std::invalid_argument("empty trajectory");
  if (traj.samples.front().holders.empty())
    throw std::invalid_argument("trajectory has no holder counts");
  PresenceProfile prof;
  prof.avg_holders.assign(traj.pieces, 0.0);
  for (const auto& s : traj.samples) {
    prof.avg_total += static_cast<double>(s.total);
    for (int j = 0; j < traj.pieces; ++j)
      prof.avg_holders[j] += static_cast<double>(s.holders[j]);
  }
  const double n = static_cast<double>(traj.samples.size());
  prof.avg_total /= n;
  for (double& v : prof.avg_holders) v /= n;
  return prof;
}

}  // namespace swarmsim
