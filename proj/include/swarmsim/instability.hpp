#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmsim/model.hpp"
#include "swarmsim/queueing.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/stats.hpp"

namespace swarmsim {

/// Constants for the one-club launch construction in the supercritical regime
/// (lambda > us). All selection inequalities are re-checkable via
/// verify_instability_constants.
struct InstabilityConstants {
  double epsilon = 0;    // 3 eps < lambda - us
  double xi = 0;         // eps - 4 K xi us > 0 and rho = 2 xi (K-1) < 1/2
  double epsilon_o = 0;  // eps_o / (lambda - us - 3 eps) < xi
  double level_b = 0;    // B, large enough for the three maximal bounds
  std::int64_t n_o = 0;  // launch size, B / (N_o - 3B) <= xi
  double rho = 0;        // 2 xi (K-1), load of the reference queue
};

struct ConstantsCheck {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Exact substitution of every selection inequality.
inline ConstantsCheck verify_instability_constants(const ModelParams& p,
                                                   const InstabilityConstants& c) {
  ConstantsCheck r;
  auto fail = [&](const std::string& s) {
    r.ok = false;
    r.violations.push_back(s);
  };
  const double k = p.pieces;
  if (!(3 * c.epsilon < p.lambda - p.us)) fail("3*eps < lambda - us");
  if (!(c.epsilon - 4 * k * c.xi * p.us > 0)) fail("eps - 4*K*xi*us > 0");
  if (!(c.rho == 2 * c.xi * (k - 1))) fail("rho = 2*xi*(K-1)");
  if (!(c.rho < 0.5)) fail("rho < 1/2");
  if (!(c.epsilon_o / (p.lambda - p.us - 3 * c.epsilon) < c.xi))
    fail("eps_o/(lambda - us - 3*eps) < xi");
  const double b = c.level_b;
  if (!(std::exp(p.lambda * (2 * (k - 1) / p.mu + 1)) * std::exp2(-b) /
            (1 - std::exp2(-c.epsilon_o)) <=
        0.1))
    fail("infinite-server maximal bound <= 0.1");
  if (!(64 * k * k * c.xi * p.us / (2 * b * (c.epsilon - 4 * k * c.xi * p.us)) <= 0.1))
    fail("compound-Poisson (infected uploads) bound <= 0.1");
  if (!(p.lambda / (2 * b * c.epsilon) <= 0.1)) fail("arrival Kingman bound <= 0.1");
  if (!(p.us / (2 * b * c.epsilon) <= 0.1)) fail("seed Kingman bound <= 0.1");
  if (!(static_cast<double>(c.n_o) - 3 * b > 0) ||
      !(b / (static_cast<double>(c.n_o) - 3 * b) <= c.xi))
    fail("B/(N_o - 3B) <= xi");
  return r;
}

/// Picks feasible constants for lambda > us: eps = (lambda-us)/4, xi at half
/// its binding cap, eps_o at half its cap, B as the exact max of the three
/// closed-form thresholds (each bound is monotone in B), and the smallest
/// adequate integer N_o.
inline InstabilityConstants instability_constants(const ModelParams& p) {
  p.validate();
  if (!(p.lambda > p.us))
    throw std::invalid_argument("instability constants need lambda > us");
  const double k = p.pieces;
  InstabilityConstants c;
  c.epsilon = (p.lambda - p.us) / 4;
  double cap_drift = c.epsilon / (4 * k * p.us);
  double cap_rho = 1.0 / (4 * (k - 1) + 1);
  c.xi = std::min(cap_drift, cap_rho) / 2;
  c.rho = 2 * c.xi * (k - 1);
  c.epsilon_o = c.xi * (p.lambda - p.us - 3 * c.epsilon) / 2;

  double b_poisson = 5 * std::max(p.lambda, p.us) / c.epsilon;
  double b_compound = 64 * k * k * c.xi * p.us / (0.2 * (c.epsilon - 4 * k * c.xi * p.us));
  double b_mginf = (p.lambda * (2 * (k - 1) / p.mu + 1) / std::log(2.0)) +
                   std::log2(10.0 / (1 - std::exp2(-c.epsilon_o)));
  c.level_b = std::max({b_poisson, b_compound, b_mginf}) * (1 + 1e-9);
  c.n_o = static_cast<std::int64_t>(std::ceil(c.level_b / c.xi + 3 * c.level_b)) + 1;

  ConstantsCheck check = verify_instability_constants(p, c);
  if (!check.ok)
    throw std::logic_error("constant selection failed self-check: " + check.violations.front());
  return c;
}

/// Moments of the per-root upload count J in the comparison system. The
/// reference queue is M/GI/1 with arrival rate xi*mu and Gamma(K-1, mu/2)
/// service; mean_jump is exact, second_moment_jump is the chained upper bound.
struct ComparisonMoments {
  double mean_jump = 0;           // E[J], exact for the reference system
  double second_moment_jump = 0;  // upper bound on E[J^2]
  double mean_cap = 0;            // 4K
  double second_moment_cap = 0;   // 64 K^2
  double rho = 0;                 // 2 xi (K-1)
  double root_rate = 0;           // xi * us, batch rate of the compound process
};

inline ComparisonMoments comparison_moments(double xi, double mu, double us, int pieces) {
  if (pieces < 2) throw std::invalid_argument("comparison system needs K >= 2");
  if (!(xi > 0) || !(mu > 0) || !(us > 0)) throw std::invalid_argument("rates must be > 0");
  const double k = pieces;
  const double rho = 2 * xi * (k - 1);
  if (rho >= 0.5) throw std::invalid_argument("comparison moments need rho = 2 xi (K-1) < 1/2");
  const double ex = 2 * (k - 1) / mu;  // E[X], Gamma(K-1, mu/2) service
  const double varx = (k - 1) * (2 / mu) * (2 / mu);
  const double ex2 = varx + ex * ex;
  const double om = 1 - rho, om3 = om * om * om;
  ComparisonMoments m;
  m.rho = rho;
  m.root_rate = xi * us;
  m.mean_jump = (1 + mu * ex) / om - 1;
  // E[J^2] <= 2 (E[(J1+1)^2] + E[J2^2]); the arrival rate of the reference
  // queue, xi*mu, enters the busy-period count variance.
  double ej1sq = (1 + (xi * mu) * (xi * mu) * varx) / om3;
  double ej2sq = mu * ex / om + mu * mu * ex2 / om3;
  m.second_moment_jump = 2 * (ej1sq + ej2sq);
  m.mean_cap = 4 * k;
  m.second_moment_cap = 64 * k * k;
  if (m.mean_jump > m.mean_cap) throw std::logic_error("E[J] exceeded its 4K cap");
  if (m.second_moment_jump > m.second_moment_cap)
    throw std::logic_error("E[J^2] bound exceeded its 64K^2 cap");
  return m;
}

/// Monte-Carlo estimate of E[J] for the comparison system: per root, J1 is the
/// busy-period customer count minus one and J2 | L ~ Poisson(mu L).
inline double comparison_mean_jump_oracle(double xi, double mu, int pieces, std::int64_t roots,
                                          Rng& rng, double* stderr_out = nullptr) {
  std::vector<double> js;
  js.reserve(static_cast<std::size_t>(roots));
  auto service = [pieces, mu](Rng& r) { return r.gamma(static_cast<double>(pieces - 1), mu / 2); };
  for (std::int64_t i = 0; i < roots; ++i) {
    BusyPeriodSample bp = sample_busy_period(xi * mu, service, rng);
    double j = static_cast<double>(bp.customers - 1) +
               static_cast<double>(rng.poisson(mu * bp.length));
    js.push_back(j);
  }
  if (stderr_out) *stderr_out = standard_error(js);
  return mean_of(js);
}

struct AltSample {
  double t = 0;
  std::int64_t total = 0;         // N_t
  std::int64_t young = 0;         // Y_t
  std::int64_t arrivals = 0;      // A_t
  std::int64_t seed_one = 0;      // Z_t, piece-one uploads by the seed
  std::int64_t infected_one = 0;  // D_t, piece-one uploads by infected peers
};

/// Result of one alternative-system run from the one-club launch state.
struct AltSystemResult {
  bool arrivals_ok = true;        // A_t > -B + (lambda - eps) t throughout
  bool seed_ok = true;            // Z_t <  B + (us + eps) t
  bool young_ok = true;           // Y_t <  B + eps_o t
  bool infected_ok = true;        // D_t <  B + eps t
  bool growth_ok = true;          // N_t >= N_o - 3B + (lambda - us - 3 eps) t
  bool young_fraction_ok = true;  // Y_t < xi N_t (tau = infinity proxy)
  bool all_ok() const {
    return arrivals_ok && seed_ok && young_ok && infected_ok && growth_ok && young_fraction_ok;
  }
  std::int64_t final_total = 0;
  std::int64_t final_young = 0;
  std::int64_t arrivals = 0;
  std::int64_t seed_one_uploads = 0;
  std::int64_t infected_one_uploads = 0;
  std::vector<AltSample> samples;
};

/// Exact simulation of the alternative system from the one-club launch state:
/// the original dynamics with the per-young-peer one-club download rate
/// replaced by mu*max{(N-Y)/N, 1/2} and the aggregate seed-to-young rate
/// replaced by us*min{Y/N, xi}. One-club contacts that cannot change state are
/// thinned away (exact Poisson thinning); young peers are tracked
/// individually. Inequality events are evaluated on [0, horizon].
inline AltSystemResult alt_system_simulate(const ModelParams& p, const InstabilityConstants& c,
                                           double horizon, double sample_dt, Rng& rng) {
  p.validate();
  if (!(c.xi > 0) || !(c.xi < 0.5)) throw std::logic_error("xi must lie in (0, 1/2)");
  if (c.n_o < 1) throw std::logic_error("launch size must be >= 1");
  if (!(horizon > 0) || !(sample_dt > 0)) throw std::invalid_argument("bad horizon/sample_dt");
  const int k = p.pieces;
  if (k < 2) throw std::invalid_argument("alternative system needs K >= 2");

  const std::uint64_t full = PieceSet::full_set(k).bits();
  const std::uint64_t club = full & ~1ULL;  // all pieces except piece one (bit 0)

  std::int64_t club_count = c.n_o;
  std::vector<std::uint64_t> young;  // piece sets of the young peers
  std::int64_t infected = 0;         // young peers holding piece one

  AltSystemResult res;
  std::int64_t a_t = 0, z_t = 0, d_t = 0;
  double t = 0;
  double next_sample = 0;

  auto total = [&]() { return club_count + static_cast<std::int64_t>(young.size()); };

  // The upper-bounded processes (Z, Y, D) sit below increasing lines, so it is
  // enough to check just after each jump; the lower-bounded ones (A, N) must
  // also be checked just before each jump and at the horizon.
  auto check = [&](double at) {
    const double n = static_cast<double>(total());
    const double y = static_cast<double>(young.size());
    if (!(static_cast<double>(a_t) > -c.level_b + (p.lambda - c.epsilon) * at))
      res.arrivals_ok = false;
    if (!(static_cast<double>(z_t) < c.level_b + (p.us + c.epsilon) * at)) res.seed_ok = false;
    if (!(y < c.level_b + c.epsilon_o * at)) res.young_ok = false;
    if (!(static_cast<double>(d_t) < c.level_b + c.epsilon * at)) res.infected_ok = false;
    if (!(n >= static_cast<double>(c.n_o) - 3 * c.level_b +
                  (p.lambda - p.us - 3 * c.epsilon) * at))
      res.growth_ok = false;
    if (!(y < c.xi * n)) res.young_fraction_ok = false;
  };

  auto record = [&](double at) {
    res.samples.push_back(
        AltSample{at, total(), static_cast<std::int64_t>(young.size()), a_t, z_t, d_t});
  };

  // Moves the young peer at index u out of the young list if it just joined
  // the one club or completed its collection.
  auto promote = [&](std::size_t u) {
    std::uint64_t s = young[u];
    if (s != club && s != full) return;
    if (s == club) ++club_count;
    if (s & 1ULL) --infected;  // a departing infected peer
    young[u] = young.back();
    young.pop_back();
  };

  check(0.0);
  while (true) {
    const double n = static_cast<double>(total());
    const double y = static_cast<double>(young.size());
    const double r_arrival = p.lambda;
    const double r_club_dl = n > 0 ? y * p.mu * std::max((n - y) / n, 0.5) : 0.0;
    const double r_young_young = n > 0 ? y * p.mu * (y / n) : 0.0;
    const double r_club_hit =
        n > 0 ? p.mu * static_cast<double>(club_count) * (static_cast<double>(infected) / n)
              : 0.0;
    const double r_seed_young = n > 0 ? p.us * std::min(y / n, c.xi) : 0.0;
    const double r_seed_club = n > 0 ? p.us * (static_cast<double>(club_count) / n) : 0.0;
    const double rate =
        r_arrival + r_club_dl + r_young_young + r_club_hit + r_seed_young + r_seed_club;
    double event_time = t + rng.exponential(rate);
    while (next_sample < event_time && next_sample <= horizon + 1e-12) {
      record(next_sample);
      next_sample += sample_dt;
    }
    if (event_time > horizon) {
      check(horizon);
      break;
    }
    t = event_time;
    check(t);  // pre-jump: infimum of the lower-bounded processes

    double u = rng.uniform01() * rate;
    if (u < r_arrival) {
      young.push_back(0);
      ++a_t;
    } else if ((u -= r_arrival) < r_club_dl) {
      std::size_t i = rng.below(young.size());
      std::uint64_t useful = club & ~young[i];
      int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::popcount(useful))));
      young[i] |= detail::nth_set_bit(useful, pick);
      promote(i);
    } else if ((u -= r_club_dl) < r_young_young) {
      std::size_t i = rng.below(young.size());
      std::size_t j = rng.below(young.size());
      std::uint64_t useful = young[j] & ~young[i];
      if (useful != 0) {
        int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::popcount(useful))));
        std::uint64_t bit = detail::nth_set_bit(useful, pick);
        if (bit == 1ULL) {  // piece one uploaded by an infected young peer
          ++d_t;
          ++infected;
        }
        young[i] |= bit;
        promote(i);
      }
    } else if ((u -= r_young_young) < r_club_hit) {
      // a one-club peer downloaded piece one from an infected peer and departed
      ++d_t;
      --club_count;
    } else if ((u -= r_club_hit) < r_seed_young) {
      std::size_t i = rng.below(young.size());
      std::uint64_t useful = full & ~young[i];
      int pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::popcount(useful))));
      std::uint64_t bit = detail::nth_set_bit(useful, pick);
      if (bit == 1ULL) {
        ++z_t;
        ++infected;
      }
      young[i] |= bit;
      promote(i);
    } else {
      ++z_t;  // seed uploaded piece one to a one-club peer, which departed
      --club_count;
    }
    check(t);
  }

  res.final_total = total();
  res.final_young = static_cast<std::int64_t>(young.size());
  res.arrivals = a_t;
  res.seed_one_uploads = z_t;
  res.infected_one_uploads = d_t;
  return res;
}

}  // namespace swarmsim
