#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace swarmsim {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 samples");
  double m = mean_of(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Standard error of the sample mean.
inline double standard_error(const std::vector<double>& v) {
  return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

/// Least-squares slope of y against t.
inline double least_squares_slope(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2)
    throw std::invalid_argument("slope needs matched samples (>= 2)");
  double mt = mean_of(t), my = mean_of(y), num = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - mt) * (y[i] - my);
    den += (t[i] - mt) * (t[i] - mt);
  }
  if (den == 0) throw std::invalid_argument("slope undefined: all abscissae equal");
  return num / den;
}

/// Chi-square statistic for observed counts against expected probabilities.
inline double chi_square_statistic(const std::vector<std::int64_t>& observed,
                                   const std::vector<double>& expected_prob) {
  if (observed.size() != expected_prob.size())
    throw std::invalid_argument("chi-square size mismatch");
  std::int64_t n = 0;
  for (auto c : observed) n += c;
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = expected_prob[i] * static_cast<double>(n);
    if (e <= 0) throw std::invalid_argument("expected probability must be positive");
    double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  return stat;
}

/// Dvoretzky-Kiefer-Wolfowitz half-width: with probability >= 1 - delta the
/// empirical CDF of n samples is uniformly within this band of the truth.
inline double dkw_band(std::size_t n, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

struct DominanceResult {
  bool dominated = false;   // no violation beyond the confidence allowance
  double max_violation = 0; // worst P_hat{lower >= a} - P_hat{upper >= a}
  double allowance = 0;
};

/// One-sided empirical test that `lower` is stochastically below `upper`:
/// checks P_hat{lower >= a} <= P_hat{upper >= a} + allowance at every
/// threshold, with a conservative DKW confidence correction on both CDFs.
inline DominanceResult empirical_dominance(std::vector<double> lower, std::vector<double> upper,
                                           double delta = 0.01) {
  if (lower.empty() || upper.empty()) throw std::invalid_argument("empty dominance sample");
  std::sort(lower.begin(), lower.end());
  std::sort(upper.begin(), upper.end());
  DominanceResult r;
  r.allowance = dkw_band(lower.size(), delta / 2) + dkw_band(upper.size(), delta / 2);
  auto tail_prob = [](const std::vector<double>& s, double a) {
    auto it = std::lower_bound(s.begin(), s.end(), a);
    return static_cast<double>(s.end() - it) / static_cast<double>(s.size());
  };
  std::vector<double> thresholds = lower;
  thresholds.insert(thresholds.end(), upper.begin(), upper.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  for (double a : thresholds)
    r.max_violation = std::max(r.max_violation, tail_prob(lower, a) - tail_prob(upper, a));
  r.dominated = r.max_violation <= r.allowance;
  return r;
}

}  // namespace swarmsim
