#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmsim/instability.hpp"
#include "swarmsim/reduced_chain.hpp"
#include "swarmsim/simulator.hpp"

namespace swarmsim {

namespace detail {
inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}
inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}
}  // namespace detail

/// Columns: t,total,n_0..n_{K-1} (piece engine) or t,total,dim_0..dim_{K-1}
/// (coded engine).
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const std::string& stratum_prefix = "n") {
  auto out = detail::open_out(path);
  out << "t,total";
  for (int i = 0; i < traj.pieces; ++i) out << ',' << stratum_prefix << '_' << i;
  out << '\n';
  for (const auto& s : traj.samples) {
    out << detail::fmt(s.t) << ',' << s.total;
    for (int i = 0; i < traj.pieces; ++i) out << ',' << s.strata[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

/// Columns: piece,avg_holders with 1-based piece indices.
inline void write_presence_csv(const std::string& path, const PresenceProfile& profile) {
  auto out = detail::open_out(path);
  out << "piece,avg_holders\n";
  for (std::size_t j = 0; j < profile.avg_holders.size(); ++j)
    out << (j + 1) << ',' << detail::fmt(profile.avg_holders[j]) << '\n';
}

/// Columns: t_depart,sojourn.
inline void write_departures_csv(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << "t_depart,sojourn\n";
  for (const auto& d : traj.departures)
    out << detail::fmt(d.t) << ',' << detail::fmt(d.sojourn) << '\n';
}

/// Columns: t,n,y,d,z,a for alternative-system runs.
inline void write_alt_csv(const std::string& path, const AltSystemResult& res) {
  auto out = detail::open_out(path);
  out << "t,n,y,d,z,a\n";
  for (const auto& s : res.samples)
    out << detail::fmt(s.t) << ',' << s.total << ',' << s.young << ',' << s.infected_one << ','
        << s.seed_one << ',' << s.arrivals << '\n';
}

/// Columns: t,n,k for reduced-chain runs.
inline void write_reduced_csv(const std::string& path, const ReducedChainTrajectory& traj) {
  auto out = detail::open_out(path);
  out << "t,n,k\n";
  for (const auto& s : traj.samples)
    out << detail::fmt(s.t) << ',' << s.peers << ',' << s.shared_pieces << '\n';
}

/// Flat key-value text, one `key = value` per line; the certificate format.
inline void write_key_value(const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& entries) {
  auto out = detail::open_out(path);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

}  // namespace swarmsim
