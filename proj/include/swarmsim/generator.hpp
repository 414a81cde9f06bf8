#pragma once

#include <vector>

#include "swarmsim/model.hpp"
#include "swarmsim/policy.hpp"

namespace swarmsim {

/// The positive entries of the generator row out of state x: the arrival
/// transition at rate lambda plus, for every peer type c and useful piece i, a
/// download transition at rate
///
///   (x_c / |x|) * ( us * h_i(c, F, x) + mu * sum_s x_s * h_i(c, s, x) )
///
/// where h is the policy's selection distribution, the seed source is the full
/// piece set F, and targets with nothing useful (including the contactor's own
/// type) contribute zero.
inline std::vector<Transition> generator_row(const SwarmState& x, const ModelParams& p,
                                             const Policy& policy) {
  p.validate();
  if (x.piece_count() != p.pieces)
    throw std::invalid_argument("state and params disagree on piece count");

  std::vector<Transition> out;
  out.push_back(Transition{Transition::Kind::Arrival, PieceSet::empty_set(), -1, p.lambda});
  if (x.total() == 0) return out;

  const PieceSet full = PieceSet::full_set(p.pieces);
  const double inv_total = 1.0 / static_cast<double>(x.total());
  for (const auto& [cbits, xc] : x.counts()) {
    PieceSet c(cbits);
    std::vector<double> rate_by_piece(p.pieces, 0.0);
    for (const auto& [piece, h] : policy.distribution(c, full, x))
      rate_by_piece[piece] += p.us * h;
    for (const auto& [sbits, xs] : x.counts()) {
      PieceSet s(sbits);
      if (s.minus(c).empty()) continue;
      for (const auto& [piece, h] : policy.distribution(c, s, x))
        rate_by_piece[piece] += p.mu * static_cast<double>(xs) * h;
    }
    for (int piece = 0; piece < p.pieces; ++piece) {
      if (rate_by_piece[piece] <= 0) continue;
      out.push_back(Transition{Transition::Kind::Download, c, piece,
                               static_cast<double>(xc) * inv_total * rate_by_piece[piece]});
    }
  }
  return out;
}

inline double total_rate(const std::vector<Transition>& row) {
  double sum = 0;
  for (const auto& t : row) sum += t.rate;
  return sum;
}

}  // namespace swarmsim
