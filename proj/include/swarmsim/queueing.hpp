#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "swarmsim/rng.hpp"

namespace swarmsim {

/// Busy-period moments of an M/GI/1 queue with arrival rate lambda and service
/// moments E[X], E[X^2]: N customers served per busy period, L its length.
struct BusyPeriodMoments {
  double mean_count = 0;           // E[N] = 1/(1-rho)
  double second_moment_count = 0;  // E[N^2] = (1 + lambda^2 Var X)/(1-rho)^3
  double mean_length = 0;          // E[L] = E[X]/(1-rho)
  double second_moment_length = 0; // E[L^2] = E[X^2]/(1-rho)^3
  double cov_count_length = 0;     // Cov(N, L) = lambda E[X^2]/(1-rho)^3
  double rho = 0;
};

inline BusyPeriodMoments busy_period_moments(double lambda, double ex, double ex2) {
  if (!(lambda >= 0) || !(ex > 0)) throw std::invalid_argument("need lambda >= 0 and E[X] > 0");
  if (ex2 < ex * ex) throw std::invalid_argument("E[X^2] must be at least E[X]^2");
  double rho = lambda * ex;
  if (rho >= 1) throw std::invalid_argument("busy-period moments diverge at rho >= 1");
  double om = 1 - rho, om3 = om * om * om;
  double var = ex2 - ex * ex;
  BusyPeriodMoments m;
  m.rho = rho;
  m.mean_count = 1 / om;
  m.second_moment_count = (1 + lambda * lambda * var) / om3;
  m.mean_length = ex / om;
  m.second_moment_length = ex2 / om3;
  m.cov_count_length = lambda * ex2 / om3;
  return m;
}

/// Kingman-style maximal bound for a stationary-independent-increment process
/// with negative drift: P{sup_t X_t >= level} <= sigma^2 / (-2 drift level).
inline double kingman_bound(double drift, double sigma2, double level) {
  if (!(drift < 0)) throw std::invalid_argument("kingman bound requires negative drift");
  if (!(sigma2 > 0) || !(level > 0)) throw std::invalid_argument("need sigma2, level > 0");
  return std::min(1.0, sigma2 / (-2.0 * drift * level));
}

/// Lower bound on P{C_t < level + eps t for all t} for a compound Poisson
/// process with batch rate alpha and jump moments m1, m2.
inline double compound_poisson_stay_below_bound(double alpha, double m1, double m2,
                                                double level, double eps) {
  if (!(eps > alpha * m1))
    throw std::invalid_argument("requires eps > alpha * m1 (negative drift)");
  if (!(level > 0)) throw std::invalid_argument("level must be > 0");
  return std::max(0.0, 1.0 - alpha * m2 / (2.0 * level * (eps - alpha * m1)));
}

/// Upper bound on P{M_t >= level + eps t for some t >= 0} for the customer
/// count of an M/GI/infinity queue started empty, arrival rate lambda, mean
/// service m:  e^{lambda (m+1)} 2^{-level} / (1 - 2^{-eps}).
inline double mgi_infinity_exceedance_bound(double lambda, double mean_service, double level,
                                            double eps) {
  if (!(level > 0) || !(eps > 0)) throw std::invalid_argument("need level, eps > 0");
  double v = std::exp(lambda * (mean_service + 1)) * std::exp2(-level) /
             (1.0 - std::exp2(-eps));
  return std::min(1.0, v);
}

/// Piecewise-constant occupancy path of an infinite-server queue: +1/-1 events
/// in time order.
struct OccupancyPath {
  std::vector<std::pair<double, int>> events;  // (time, delta)

  std::int64_t occupancy_at(double t) const {
    std::int64_t n = 0;
    for (const auto& [at, d] : events) {
      if (at > t) break;
      n += d;
    }
    return n;
  }

  std::int64_t max_occupancy() const {
    std::int64_t n = 0, best = 0;
    for (const auto& [at, d] : events) {
      n += d;
      best = std::max(best, n);
    }
    return best;
  }

  /// Whether M_t >= level + eps * t at any event time (the sup of the
  /// difference over a piecewise-constant path is attained there or at 0).
  bool exceeds(double level, double eps) const {
    if (0 >= level) return true;
    std::int64_t n = 0;
    for (const auto& [at, d] : events) {
      n += d;
      if (static_cast<double>(n) >= level + eps * at) return true;
    }
    return false;
  }
};

/// Exact M/GI/infinity simulation on [0, horizon]: Poisson arrivals, iid
/// service times from the sampler, infinitely many servers.
inline OccupancyPath mgi_infinity_simulate(double lambda,
                                           const std::function<double(Rng&)>& service,
                                           double horizon, Rng& rng) {
  if (!(lambda >= 0) || !(horizon > 0)) throw std::invalid_argument("bad M/GI/inf parameters");
  OccupancyPath path;
  std::priority_queue<double, std::vector<double>, std::greater<>> leaving;
  double t = 0;
  while (true) {
    double next_arrival = lambda > 0 ? t + rng.exponential(lambda) : horizon + 1;
    while (!leaving.empty() && leaving.top() <= std::min(next_arrival, horizon)) {
      path.events.emplace_back(leaving.top(), -1);
      leaving.pop();
    }
    if (next_arrival > horizon) break;
    t = next_arrival;
    path.events.emplace_back(t, +1);
    leaving.push(t + service(rng));
  }
  return path;
}

/// The dominating infinite-server system for young peers: arrival rate lambda
/// and Gamma(K-1, mu/2) service (mean 2(K-1)/mu).
inline OccupancyPath mgi_infinity_simulate_gamma(double lambda, int pieces, double mu,
                                                 double horizon, Rng& rng) {
  if (pieces < 2) throw std::invalid_argument("gamma service needs K >= 2");
  return mgi_infinity_simulate(
      lambda,
      [pieces, mu](Rng& r) { return r.gamma(static_cast<double>(pieces - 1), mu / 2.0); },
      horizon, rng);
}

/// Compound Poisson path: jump times and sizes on [0, horizon].
struct CompoundPoissonPath {
  std::vector<std::pair<double, double>> jumps;  // (time, cumulative value after jump)

  /// True iff C_t < level + eps t for all t in [0, horizon].
  bool stays_below(double level, double eps) const {
    if (0 >= level) return false;
    for (const auto& [at, c] : jumps)
      if (c >= level + eps * at) return false;
    return true;
  }

  double sup_drift_adjusted(double eps) const {  // sup_t (C_t - eps t)
    double best = 0;
    for (const auto& [at, c] : jumps) best = std::max(best, c - eps * at);
    return best;
  }
};

inline CompoundPoissonPath compound_poisson_simulate(double alpha,
                                                     const std::function<double(Rng&)>& jump,
                                                     double horizon, Rng& rng) {
  if (!(alpha > 0) || !(horizon > 0)) throw std::invalid_argument("bad compound Poisson parameters");
  CompoundPoissonPath path;
  double t = 0, c = 0;
  while (true) {
    t += rng.exponential(alpha);
    if (t > horizon) break;
    c += jump(rng);
    path.jumps.emplace_back(t, c);
  }
  return path;
}

struct BusyPeriodSample {
  std::int64_t customers = 0;
  double length = 0;
};

/// One M/GI/1 busy period via the branching representation: each customer's
/// offspring are the arrivals during its service, Poisson(lambda X).
inline BusyPeriodSample sample_busy_period(double lambda,
                                           const std::function<double(Rng&)>& service,
                                           Rng& rng) {
  BusyPeriodSample s;
  std::int64_t pending = 1;
  while (pending > 0) {
    --pending;
    double x = service(rng);
    s.length += x;
    ++s.customers;
    pending += rng.poisson(lambda * x);
  }
  return s;
}

}  // namespace swarmsim
