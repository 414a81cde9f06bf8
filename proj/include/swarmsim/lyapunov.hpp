#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmsim/generator.hpp"
#include "swarmsim/model.hpp"
#include "swarmsim/rng.hpp"

namespace swarmsim {

/// Weights of the potential V(x) = sum_i b_i (n_0 + ... + n_i)^2 / 2 with
/// 1 = b_{K-1} < ... < b_0 and the descent conditions
///   b_i > (lambda/(us - lambda)) a_{i+1}   equivalently   us b_i - lambda a_i > 0
/// where a_i = b_i + ... + b_{K-1}.
struct LyapunovCoefficients {
  std::vector<double> b;
  std::vector<double> a;  // suffix sums of b
};

inline LyapunovCoefficients lyapunov_coefficients(double lambda, double us, int pieces,
                                                  double margin = 0.01) {
  if (pieces < 1) throw std::invalid_argument("need K >= 1");
  if (!(lambda > 0) || !(lambda < us))
    throw std::invalid_argument("coefficients exist only for 0 < lambda < us");
  if (!(margin > 0)) throw std::invalid_argument("margin must be > 0");
  LyapunovCoefficients c;
  c.b.assign(static_cast<std::size_t>(pieces), 1.0);
  c.a.assign(static_cast<std::size_t>(pieces), 1.0);
  const double grow = lambda / (us - lambda);
  for (int i = pieces - 2; i >= 0; --i) {
    double floor_b = std::max(c.b[i + 1], grow * c.a[i + 1]);
    c.b[i] = (1 + margin) * floor_b;
    c.a[i] = c.b[i] + c.a[i + 1];
  }
  return c;
}

/// Both coefficient conditions, checked by exact substitution.
inline bool check_coefficient_conditions(const LyapunovCoefficients& c, double lambda,
                                         double us) {
  const int k = static_cast<int>(c.b.size());
  if (c.b.empty() || c.b.back() != 1.0) return false;
  if (!(lambda < us)) return false;
  for (int i = 0; i + 1 < k; ++i) {
    if (!(c.b[i] > c.b[i + 1])) return false;
    if (!(c.b[i] > (lambda / (us - lambda)) * c.a[i + 1])) return false;
    if (!(us * c.b[i] - lambda * c.a[i] > 0)) return false;
  }
  return true;
}

struct DriftValue {
  double exact = 0;  // QV(x), from the generator row
  double bound = 0;  // the quadratic-potential upper bound
};

/// Exact drift QV(x) = sum_y q(x,y)[V(y) - V(x)] under random useful
/// selection, together with the analytic upper bound
///   a_0 lambda / 2 + lambda sum_i n_i a_i - sum_i (n_i - 1/2) b_i d_i
/// where d_i = n_i (us + mu sum_{j>i} n_j) / |x|.
inline DriftValue drift_qv(const SwarmState& x, const ModelParams& p,
                           const LyapunovCoefficients& coeffs) {
  if (static_cast<int>(coeffs.b.size()) != p.pieces)
    throw std::invalid_argument("coefficient count must equal K");
  const int k = p.pieces;
  Diagnostics d = diagnostics(x);
  std::vector<double> prefix(static_cast<std::size_t>(k), 0.0);  // S_i = n_0 + ... + n_i
  double run = 0;
  for (int i = 0; i < k; ++i) {
    run += static_cast<double>(d.by_stratum[i]);
    prefix[i] = run;
  }

  DriftValue v;
  // An arrival lifts every prefix sum by one; a download out of stratum j
  // lowers S_j by one (departures included). Sum rate * delta-V exactly.
  for (const Transition& t : generator_row(x, p, Policy::random_useful())) {
    if (t.kind == Transition::Kind::Arrival) {
      double dv = 0;
      for (int i = 0; i < k; ++i) dv += coeffs.b[i] * (prefix[i] + 0.5);
      v.exact += t.rate * dv;
    } else {
      int j = t.from.size();
      v.exact += t.rate * coeffs.b[j] * (0.5 - prefix[j]);
    }
  }

  const double total = static_cast<double>(x.total());
  v.bound = coeffs.a[0] * p.lambda / 2;
  double tail = 0;  // sum_{j>i} n_j
  for (int i = k - 1; i >= 0; --i) {
    const double ni = static_cast<double>(d.by_stratum[i]);
    v.bound += p.lambda * ni * coeffs.a[i];
    if (total > 0 && ni > 0) {
      double di = ni * (p.us + p.mu * tail) / total;
      v.bound -= (ni - 0.5) * coeffs.b[i] * di;
    }
    tail += ni;
  }
  return v;
}

/// Certificate that the drift is at most -epsilon |x| outside a finite set,
/// split into the concentrated case (some stratum holds a (1-eta) fraction)
/// and the spread case (two strata hold at least eta |x| / K each).
struct DriftCertificate {
  bool found = false;
  double eta = 0;
  double epsilon = 0;
  double threshold = 0;  // L: certified for |x| >= L
  // verification on sampled states
  std::int64_t sampled = 0;
  double worst_ratio = 0;  // max over samples of QV(x)/|x| (want <= -epsilon)
  bool verified = false;
  std::string note;
};

namespace detail {

// Concentrated-case margin g_i(eta); the certificate needs max_i g_i < 0.
// Monotone increasing in eta.
inline double concentrated_margin(const LyapunovCoefficients& c, const ModelParams& p, int i,
                                  double eta) {
  const double k = p.pieces;
  return (c.a[i] + k * c.a[0] * eta / (1 - eta)) * p.lambda - c.b[i] * (1 - eta) * p.us;
}

inline double worst_concentrated_margin(const LyapunovCoefficients& c, const ModelParams& p,
                                        double eta) {
  double worst = -1e300;
  for (int i = 0; i < p.pieces; ++i) worst = std::max(worst, concentrated_margin(c, p, i, eta));
  return worst;
}

}  // namespace detail

/// Random state with |x| in [min_total, max_total] (log-uniform): strata
/// weights are either spread (iid uniform) or concentrated on one stratum, and
/// each stratum's mass lands on one or two random types of that cardinality.
inline SwarmState sample_state_for_drift(int pieces, std::int64_t min_total,
                                         std::int64_t max_total, Rng& rng) {
  if (min_total < 1 || max_total < min_total)
    throw std::invalid_argument("bad sampling range");
  const double lo = std::log(static_cast<double>(min_total));
  const double hi = std::log(static_cast<double>(max_total));
  auto target = static_cast<std::int64_t>(std::exp(lo + (hi - lo) * rng.uniform01()));
  target = std::clamp(target, min_total, max_total);

  std::vector<double> weights(static_cast<std::size_t>(pieces), 0.0);
  if (pieces > 1 && rng.uniform01() < 0.5) {
    std::size_t star = rng.below(static_cast<std::uint64_t>(pieces));
    double bulk = 0.9 + 0.0999 * rng.uniform01();
    weights[star] = bulk;
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (i != star) weights[i] = (1 - bulk) * rng.uniform01();
  } else {
    for (double& w : weights) w = 0.05 + rng.uniform01();
  }
  double wsum = 0;
  for (double w : weights) wsum += w;

  auto random_type = [&](int size) {
    std::uint64_t type = 0;
    std::uint64_t pool = PieceSet::full_set(pieces).bits();
    for (int picks = 0; picks < size; ++picks) {
      int idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::popcount(pool))));
      std::uint64_t bit = detail::nth_set_bit(pool, idx);
      type |= bit;
      pool &= ~bit;
    }
    return PieceSet(type);
  };

  SwarmState x(pieces);
  std::int64_t placed = 0;
  for (int i = 0; i < pieces; ++i) {
    std::int64_t ni =
        i == pieces - 1
            ? target - placed
            : static_cast<std::int64_t>(std::floor(static_cast<double>(target) * weights[i] / wsum));
    ni = std::max<std::int64_t>(ni, 0);
    placed += ni;
    if (ni == 0) continue;
    PieceSet type1 = random_type(i);
    if (i > 0 && ni > 1 && rng.uniform01() < 0.5) {
      PieceSet type2 = random_type(i);
      auto half = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ni)));
      if (!(type2 == type1) && half > 0) {
        x.add_peers(type2, half);
        ni -= half;
      }
    }
    x.add_peers(type1, ni);
  }
  return x;
}

/// Searches eta (grid plus bisection refinement; larger eta shrinks the
/// spread-case threshold, which scales like eta^-3), assembles the
/// certificate, then verifies QV <= -epsilon |x| on states sampled at and
/// above the threshold. Verification is skipped when the threshold exceeds
/// the representable count range.
inline DriftCertificate drift_region_check(const ModelParams& p,
                                           const LyapunovCoefficients& coeffs,
                                           std::vector<double> eta_grid = {},
                                           std::int64_t verify_samples = 200,
                                           std::uint64_t rng_seed = 2024) {
  DriftCertificate cert;
  if (!(p.lambda < p.us) || !check_coefficient_conditions(coeffs, p.lambda, p.us)) {
    cert.note = "no certificate: coefficient descent conditions are infeasible";
    return cert;
  }
  if (eta_grid.empty())
    for (double e = 0.25; e > 1e-12; e /= 2) eta_grid.push_back(e);

  // Largest grid eta with a negative concentrated margin, then bisect upward.
  double eta_lo = 0;
  for (double e : eta_grid)
    if (detail::worst_concentrated_margin(coeffs, p, e) < 0) {
      eta_lo = e;
      break;
    }
  if (eta_lo == 0) {
    cert.note = "no certificate: concentrated-case margin never went negative on the grid";
    return cert;
  }
  double eta_hi = std::min(0.499, eta_lo * 2);
  for (int it = 0; it < 60; ++it) {
    double mid = (eta_lo + eta_hi) / 2;
    if (detail::worst_concentrated_margin(coeffs, p, mid) < 0)
      eta_lo = mid;
    else
      eta_hi = mid;
  }
  double eta = 0.75 * eta_lo;
  double gworst = detail::worst_concentrated_margin(coeffs, p, eta);

  const double k = p.pieces;
  // |x| floor that keeps each brace negative despite the b_i us / (2|x|) term.
  double l_brace = 0;
  for (int i = 0; i < p.pieces; ++i) {
    double gi = detail::concentrated_margin(coeffs, p, i, eta);
    l_brace = std::max(l_brace, coeffs.b[i] * p.us / (-gi));
  }
  double eps = (1 - eta) * (-gworst) / 4;
  double l_offset = 2 * coeffs.a[0] * p.lambda / ((1 - eta) * (-gworst));
  // Spread case: (eta/K)^3 mu |x|^2 must beat |x| (a_0 K lambda + b_0 mu/2 + eps)
  // plus a_0 lambda / 2.
  double c2 = std::pow(eta / k, 3) * p.mu;
  double c1 = coeffs.a[0] * k * p.lambda + coeffs.b[0] * p.mu / 2 + eps;
  double c0 = coeffs.a[0] * p.lambda / 2;
  double l_spread = (c1 + std::sqrt(c1 * c1 + 4 * c2 * c0)) / (2 * c2);

  cert.found = true;
  cert.eta = eta;
  cert.epsilon = eps;
  cert.threshold = std::max({l_brace, l_offset, l_spread}) * (1 + 1e-9);

  constexpr double kMaxSampleTotal = 4.0e18;  // counts must stay inside int64
  if (cert.threshold > kMaxSampleTotal / 2 || verify_samples <= 0) {
    cert.note = "threshold beyond the samplable count range; analytic certificate only";
    return cert;
  }
  Rng rng(rng_seed);
  auto min_total = static_cast<std::int64_t>(std::ceil(cert.threshold));
  auto max_total = static_cast<std::int64_t>(std::min(cert.threshold * 10, kMaxSampleTotal));
  cert.worst_ratio = -1e300;
  for (std::int64_t s = 0; s < verify_samples; ++s) {
    SwarmState x = sample_state_for_drift(p.pieces, min_total, max_total, rng);
    DriftValue v = drift_qv(x, p, coeffs);
    cert.worst_ratio = std::max(cert.worst_ratio, v.exact / static_cast<double>(x.total()));
  }
  cert.sampled = verify_samples;
  cert.verified = cert.worst_ratio <= -cert.epsilon * (1 - 1e-9);
  return cert;
}

}  // namespace swarmsim
