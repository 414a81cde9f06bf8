#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmsim/coding.hpp"
#include "swarmsim/csv.hpp"
#include "swarmsim/instability.hpp"
#include "swarmsim/manifest.hpp"
#include "swarmsim/reduced_chain.hpp"
#include "swarmsim/replicas.hpp"
#include "swarmsim/simulator.hpp"
#include "swarmsim/stats.hpp"

namespace swarmsim {

struct ReplicaSummary {
  std::int64_t replica = 0;
  double avg_total = 0;        // time-average |x| over the report window
  double slope = 0;            // least-squares growth rate over the window
  int rare_piece = 0;          // 1-based least-held piece; 0 when not applicable
  double min_avg_holders = 0;  // over pieces; 0 when not applicable
  double max_avg_holders = 0;
  bool events_ok = true;       // alt-system inequality events
};

struct RunReport {
  std::string name;
  EngineKind engine = EngineKind::Piece;
  double window_start = 0;  // report window is [0.2 * horizon, horizon]
  double window_end = 0;
  std::vector<ReplicaSummary> rows;
  double mean_avg_total = 0;
  double se_avg_total = 0;
  double mean_slope = 0;
  double se_slope = 0;
  double events_ok_fraction = 1;
};

struct RunOptions {
  bool write_outputs = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

/// Reraises peer-cap errors with the replica named, per the run contract.
template <typename F>
Trajectory run_guarded(std::int64_t replica, F&& fn) {
  try {
    return fn();
  } catch (const ResourceError& e) {
    throw ResourceError("replica " + std::to_string(replica) + ": " + e.what(), e.peers());
  }
}

inline ReplicaSummary summarize_trajectory(std::int64_t replica, const Trajectory& traj,
                                           double w0, double w1, bool with_holders) {
  ReplicaSummary row;
  row.replica = replica;
  row.avg_total = time_average_total(traj, w0, w1);
  row.slope = slope_estimate(traj, w0, w1);
  if (with_holders) {
    PresenceProfile prof = piece_presence_profile(traj);
    int rare = 0;
    double lo = prof.avg_holders[0], hi = prof.avg_holders[0];
    for (std::size_t j = 1; j < prof.avg_holders.size(); ++j) {
      if (prof.avg_holders[j] < prof.avg_holders[static_cast<std::size_t>(rare)])
        rare = static_cast<int>(j);
      lo = std::min(lo, prof.avg_holders[j]);
      hi = std::max(hi, prof.avg_holders[j]);
    }
    row.rare_piece = rare + 1;
    row.min_avg_holders = lo;
    row.max_avg_holders = hi;
  }
  return row;
}

inline void write_report_files(const std::string& dir, const RunReport& report) {
  auto out = open_out(dir + "/report.csv");
  out << "replica,avg_total,slope,rare_piece,min_avg_holders,max_avg_holders,events_ok\n";
  for (const auto& r : report.rows)
    out << r.replica << ',' << fmt(r.avg_total) << ',' << fmt(r.slope) << ',' << r.rare_piece
        << ',' << fmt(r.min_avg_holders) << ',' << fmt(r.max_avg_holders) << ','
        << (r.events_ok ? 1 : 0) << '\n';
  write_key_value(dir + "/summary.kv",
                  {{"name", report.name},
                   {"engine", engine_name(report.engine)},
                   {"window_start", fmt(report.window_start)},
                   {"window_end", fmt(report.window_end)},
                   {"replicas", std::to_string(report.rows.size())},
                   {"mean_avg_total", fmt(report.mean_avg_total)},
                   {"se_avg_total", fmt(report.se_avg_total)},
                   {"mean_slope", fmt(report.mean_slope)},
                   {"se_slope", fmt(report.se_slope)},
                   {"events_ok_fraction", fmt(report.events_ok_fraction)}});
}

}  // namespace detail

/// Executes a manifest: replicas in parallel with independent streams, CSV
/// artifacts per replica plus report.csv and summary.kv in the output
/// directory. The output directory may be overridden by options or the
/// SWARMSIM_OUTDIR environment variable (handled by the CLI).
inline RunReport run_experiment(const ExperimentManifest& m, const RunOptions& opts = {}) {
  m.validate();
  const double w0 = 0.2 * m.horizon;
  const double w1 = m.horizon;
  const std::string dir = m.outputs;
  if (opts.write_outputs) std::filesystem::create_directories(dir);

  RunReport report;
  report.name = m.name;
  report.engine = m.engine;
  report.window_start = w0;
  report.window_end = w1;

  auto replica_path = [&](std::int64_t r, const std::string& what) {
    return dir + "/replica_" + std::to_string(r) + "_" + what + ".csv";
  };

  switch (m.engine) {
    case EngineKind::Piece: {
      report.rows = run_replicas<ReplicaSummary>(
          m.replicas,
          [&](std::int64_t r) {
            SimConfig cfg;
            cfg.params = ModelParams{m.pieces, m.lambda, m.mu, m.us};
            cfg.policy = parse_policy(m.policy);
            cfg.horizon = m.horizon;
            cfg.sample_dt = m.sample_dt;
            cfg.rng_seed = Rng::substream_seed(m.rng_seed, static_cast<std::uint64_t>(r));
            cfg.max_peers = m.max_peers;
            if (std::int64_t n = m.launch_size(); n > 0)
              cfg.initial = SwarmState::one_club_launch(m.pieces, n);
            Trajectory traj = detail::run_guarded(r, [&] { return simulate(cfg); });
            if (opts.write_outputs) {
              write_trajectory_csv(replica_path(r, "trajectory"), traj, "n");
              write_presence_csv(replica_path(r, "pieces"), piece_presence_profile(traj));
              write_departures_csv(replica_path(r, "departures"), traj);
            }
            return detail::summarize_trajectory(r, traj, w0, w1, true);
          },
          opts.threads);
      break;
    }
    case EngineKind::Coded: {
      report.rows = run_replicas<ReplicaSummary>(
          m.replicas,
          [&](std::int64_t r) {
            NcConfig cfg;
            cfg.params = ModelParams{m.pieces, m.lambda, m.mu, m.us};
            cfg.field_order = m.field_order;
            cfg.horizon = m.horizon;
            cfg.sample_dt = m.sample_dt;
            cfg.rng_seed = Rng::substream_seed(m.rng_seed, static_cast<std::uint64_t>(r));
            cfg.max_peers = m.max_peers;
            Trajectory traj = detail::run_guarded(r, [&] { return nc_simulate(cfg); });
            if (opts.write_outputs) {
              write_trajectory_csv(replica_path(r, "trajectory"), traj, "dim");
              write_departures_csv(replica_path(r, "departures"), traj);
            }
            return detail::summarize_trajectory(r, traj, w0, w1, false);
          },
          opts.threads);
      break;
    }
    case EngineKind::MuInfinity: {
      report.rows = run_replicas<ReplicaSummary>(
          m.replicas,
          [&](std::int64_t r) {
            Rng rng = Rng::substream(m.rng_seed, static_cast<std::uint64_t>(r));
            ReducedChainTrajectory traj =
                reduced_chain_simulate(m.lambda, m.us, m.pieces, m.horizon, m.sample_dt, rng);
            if (opts.write_outputs) write_reduced_csv(replica_path(r, "trajectory"), traj);
            ReplicaSummary row;
            row.replica = r;
            std::vector<double> ts, ys;
            for (const auto& s : traj.samples)
              if (s.t >= w0) {
                ts.push_back(s.t);
                ys.push_back(static_cast<double>(s.peers));
              }
            row.avg_total = mean_of(ys);
            row.slope = ts.size() >= 10 ? least_squares_slope(ts, ys) : 0.0;
            return row;
          },
          opts.threads);
      break;
    }
    case EngineKind::AltSystem: {
      ModelParams params{m.pieces, m.lambda, m.mu, m.us};
      InstabilityConstants consts = instability_constants(params);
      report.rows = run_replicas<ReplicaSummary>(
          m.replicas,
          [&](std::int64_t r) {
            Rng rng = Rng::substream(m.rng_seed, static_cast<std::uint64_t>(r));
            AltSystemResult res =
                alt_system_simulate(params, consts, m.horizon, m.sample_dt, rng);
            if (opts.write_outputs) write_alt_csv(replica_path(r, "trajectory"), res);
            ReplicaSummary row;
            row.replica = r;
            row.events_ok = res.all_ok();
            std::vector<double> ts, ys;
            for (const auto& s : res.samples)
              if (s.t >= w0) {
                ts.push_back(s.t);
                ys.push_back(static_cast<double>(s.total));
              }
            row.avg_total = mean_of(ys);
            row.slope = ts.size() >= 10 ? least_squares_slope(ts, ys) : 0.0;
            return row;
          },
          opts.threads);
      break;
    }
  }

  std::vector<double> avgs, slopes;
  std::int64_t ok = 0;
  for (const auto& r : report.rows) {
    avgs.push_back(r.avg_total);
    slopes.push_back(r.slope);
    if (r.events_ok) ++ok;
  }
  report.mean_avg_total = mean_of(avgs);
  report.mean_slope = mean_of(slopes);
  if (avgs.size() >= 2) {
    report.se_avg_total = standard_error(avgs);
    report.se_slope = standard_error(slopes);
  }
  report.events_ok_fraction =
      static_cast<double>(ok) / static_cast<double>(report.rows.size());
  if (opts.write_outputs) detail::write_report_files(dir, report);
  return report;
}

}  // namespace swarmsim
