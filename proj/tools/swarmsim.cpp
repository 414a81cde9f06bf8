// swarmsim: exact peer-to-peer swarm simulation and stability analysis.
//
// Subcommands: run (manifest-driven experiments), nc-run / mu-inf /
// alt-system (flag-driven runs of the other engines), bounds (closed-form
// queueing bounds and constant constructions, with optional Monte-Carlo
// verification), drift (negative-drift certificates).
//
// Exit codes: 0 success, 2 validation failure, 3 resource cap exceeded,
// 4 Monte-Carlo disagreement in --verify mode.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarmsim/coding.hpp"
#include "swarmsim/csv.hpp"
#include "swarmsim/instability.hpp"
#include "swarmsim/lyapunov.hpp"
#include "swarmsim/manifest.hpp"
#include "swarmsim/queueing.hpp"
#include "swarmsim/reduced_chain.hpp"
#include "swarmsim/runner.hpp"
#include "swarmsim/uniformization.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitResource = 3;
constexpr int kExitOracle = 4;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return swarmsim::detail::fmt(v); }

void print_kv(const KeyValues& kv) {
  for (const auto& [k, v] : kv) std::printf("%s = %s\n", k.c_str(), v.c_str());
}

void maybe_write(const std::string& path, const KeyValues& kv) {
  if (path.empty()) return;
  swarmsim::write_key_value(path, kv);
  std::printf("wrote %s\n", path.c_str());
}

std::string outputs_override(std::string configured) {
  if (const char* env = std::getenv("SWARMSIM_OUTDIR"); env && *env) return env;
  return configured;
}

int do_run(swarmsim::ExperimentManifest m) {
  m.outputs = outputs_override(m.outputs);
  swarmsim::RunReport report = swarmsim::run_experiment(m);
  KeyValues kv{{"name", report.name},
               {"engine", swarmsim::engine_name(report.engine)},
               {"replicas", std::to_string(report.rows.size())},
               {"window", "[" + fmt(report.window_start) + ", " + fmt(report.window_end) + "]"},
               {"mean_avg_total", fmt(report.mean_avg_total)},
               {"se_avg_total", fmt(report.se_avg_total)},
               {"mean_slope", fmt(report.mean_slope)},
               {"se_slope", fmt(report.se_slope)}};
  if (report.engine == swarmsim::EngineKind::AltSystem)
    kv.emplace_back("events_ok_fraction", fmt(report.events_ok_fraction));
  print_kv(kv);
  std::printf("outputs in %s\n", m.outputs.c_str());
  return 0;
}

struct BusyVerify {
  bool agree = true;
  KeyValues kv;
};

BusyVerify verify_busy(double lambda, double ex, double ex2, std::int64_t periods,
                       const std::string& service_kind, std::uint64_t seed) {
  using namespace swarmsim;
  BusyPeriodMoments m = busy_period_moments(lambda, ex, ex2);
  Rng rng(seed);
  std::function<double(Rng&)> service;
  if (service_kind == "deterministic")
    service = [ex](Rng&) { return ex; };
  else
    service = [ex](Rng& r) { return r.exponential(1.0 / ex); };
  std::vector<double> ns, ls, n2s, l2s, prods;
  ns.reserve(periods);
  for (std::int64_t i = 0; i < periods; ++i) {
    BusyPeriodSample s = sample_busy_period(lambda, service, rng);
    double n = static_cast<double>(s.customers);
    ns.push_back(n);
    ls.push_back(s.length);
    n2s.push_back(n * n);
    l2s.push_back(s.length * s.length);
  }
  double mn = mean_of(ns), ml = mean_of(ls);
  prods.reserve(periods);
  for (std::size_t i = 0; i < ns.size(); ++i) prods.push_back((ns[i] - mn) * (ls[i] - ml));
  BusyVerify out;
  auto check = [&](const char* name, const std::vector<double>& sample, double target) {
    double est = mean_of(sample), se = standard_error(sample);
    bool ok = std::abs(est - target) <= 3 * se;
    out.agree = out.agree && ok;
    out.kv.emplace_back(std::string(name) + "_mc", fmt(est));
    out.kv.emplace_back(std::string(name) + "_se", fmt(se));
    out.kv.emplace_back(std::string(name) + "_within_3se", ok ? "yes" : "no");
  };
  check("mean_count", ns, m.mean_count);
  check("second_moment_count", n2s, m.second_moment_count);
  check("mean_length", ls, m.mean_length);
  check("second_moment_length", l2s, m.second_moment_length);
  check("cov_count_length", prods, m.cov_count_length);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"peer-to-peer swarm simulator and stability analysis toolkit"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "execute a manifest of replica experiments");
  std::string manifest_path;
  std::uint64_t seed_override = 0;
  std::int64_t replicas_override = 0;
  double horizon_override = 0;
  std::string outputs_flag;
  run->add_option("manifest", manifest_path, "manifest file")->required();
  run->add_option("--seed", seed_override, "override rng_seed");
  run->add_option("--replicas", replicas_override, "override replica count");
  run->add_option("--horizon", horizon_override, "override horizon");
  run->add_option("--outputs", outputs_flag, "override output directory");

  // ---- direct engine runs ----
  struct DirectFlags {
    int pieces = 3;
    double lambda = 1, mu = 1, us = 1, horizon = 100, sample_dt = 1;
    int q = 2;
    std::int64_t replicas = 1;
    std::uint64_t seed = 1;
    std::string outputs = "out";
  };
  auto add_common = [](CLI::App* cmd, DirectFlags& f, bool with_mu, bool with_q) {
    cmd->add_option("--K", f.pieces, "piece count")->required();
    cmd->add_option("--lambda", f.lambda, "arrival rate")->required();
    cmd->add_option("--us", f.us, "seed upload rate");
    if (with_mu) cmd->add_option("--mu", f.mu, "contact rate");
    if (with_q) cmd->add_option("--q", f.q, "field order");
    cmd->add_option("--horizon", f.horizon, "run length");
    cmd->add_option("--sample-dt", f.sample_dt, "sampling interval");
    cmd->add_option("--replicas", f.replicas, "replica count");
    cmd->add_option("--seed", f.seed, "rng seed");
    cmd->add_option("--outputs", f.outputs, "output directory");
  };
  DirectFlags nc_flags, mu_flags, alt_flags;
  auto* nc = app.add_subcommand("nc-run", "coded swarm run (random linear coding over F_q)");
  add_common(nc, nc_flags, true, true);
  auto* muinf = app.add_subcommand("mu-inf", "reduced high-contact-limit chain run");
  add_common(muinf, mu_flags, false, false);
  auto* alt = app.add_subcommand("alt-system", "one-club launch run of the alternative system");
  add_common(alt, alt_flags, true, false);

  // ---- bounds ----
  auto* bounds = app.add_subcommand("bounds", "closed-form bounds and constant constructions");
  bounds->require_subcommand(1);
  bool verify = false;
  std::int64_t mc_paths = 10'000;
  double mc_horizon = 1'000;
  std::uint64_t mc_seed = 7;
  std::string out_path;
  bounds->add_flag("--verify", verify, "also run the Monte-Carlo oracle");
  bounds->add_option("--paths", mc_paths, "Monte-Carlo paths / busy periods");
  bounds->add_option("--mc-horizon", mc_horizon, "Monte-Carlo horizon");
  bounds->add_option("--mc-seed", mc_seed, "Monte-Carlo seed");
  bounds->add_option("--out", out_path, "write a key-value certificate file");

  // shared --verify/--paths/... flags live on `bounds`; let the leaves pass
  // unmatched flags up to it
  bounds->fallthrough();
  auto* king = bounds->add_subcommand("kingman", "maximal bound for negative-drift processes");
  double k_drift = -1, k_sigma2 = 1, k_level = 10;
  king->add_option("--drift", k_drift, "mean drift (must be < 0)")->required();
  king->add_option("--sigma2", k_sigma2, "variance rate")->required();
  king->add_option("--level", k_level, "level B")->required();

  auto* comp = bounds->add_subcommand("compound", "compound-Poisson stay-below bound");
  double c_alpha = 1, c_m1 = 1, c_m2 = 2, c_level = 10, c_eps = 2;
  comp->add_option("--alpha", c_alpha, "batch rate")->required();
  comp->add_option("--m1", c_m1, "jump mean")->required();
  comp->add_option("--m2", c_m2, "jump second moment")->required();
  comp->add_option("--level", c_level, "level B")->required();
  comp->add_option("--eps", c_eps, "drift allowance")->required();

  auto* mginf = bounds->add_subcommand("mginfty", "infinite-server maximal bound");
  double g_lambda = 1, g_m = 1, g_level = 10, g_eps = 1;
  mginf->add_option("--lambda", g_lambda, "arrival rate")->required();
  mginf->add_option("--m", g_m, "mean service time")->required();
  mginf->add_option("--level", g_level, "level B")->required();
  mginf->add_option("--eps", g_eps, "slope eps")->required();

  auto* busy = bounds->add_subcommand("busy", "busy-period moments of M/GI/1");
  double b_lambda = 0.5, b_ex = 1, b_ex2 = 2;
  std::string b_service = "exponential";
  busy->add_option("--lambda", b_lambda, "arrival rate")->required();
  busy->add_option("--ex", b_ex, "mean service E[X]")->required();
  busy->add_option("--ex2", b_ex2, "second moment E[X^2]")->required();
  busy->add_option("--service", b_service, "verify service: exponential|deterministic");

  auto* muo = bounds->add_subcommand("mu_o", "borderline contact rate");
  double m_lambda = 1;
  int m_pieces = 2;
  muo->add_option("--lambda", m_lambda, "arrival rate")->required();
  muo->add_option("--K", m_pieces, "piece count")->required();

  auto* consts = bounds->add_subcommand("constants", "one-club launch constants");
  double cn_lambda = 1.4, cn_mu = 1, cn_us = 1;
  int cn_pieces = 3;
  consts->add_option("--lambda", cn_lambda, "arrival rate")->required();
  consts->add_option("--us", cn_us, "seed upload rate")->required();
  consts->add_option("--mu", cn_mu, "contact rate")->required();
  consts->add_option("--K", cn_pieces, "piece count")->required();

  auto* coeffs = bounds->add_subcommand("coeffs", "potential-function weights");
  double cf_lambda = 0.5, cf_us = 1;
  int cf_pieces = 2;
  coeffs->add_option("--lambda", cf_lambda, "arrival rate")->required();
  coeffs->add_option("--us", cf_us, "seed upload rate")->required();
  coeffs->add_option("--K", cf_pieces, "piece count")->required();

  // ---- drift ----
  auto* drift = app.add_subcommand("drift", "negative-drift certificate and sampled check");
  double d_lambda = 0.5, d_us = 1, d_mu = 1;
  int d_pieces = 2;
  std::int64_t d_samples = 1'000;
  std::uint64_t d_seed = 11;
  std::string d_out;
  drift->add_option("--lambda", d_lambda, "arrival rate")->required();
  drift->add_option("--us", d_us, "seed upload rate")->required();
  drift->add_option("--K", d_pieces, "piece count")->required();
  drift->add_option("--mu", d_mu, "contact rate");
  drift->add_option("--samples", d_samples, "verification samples");
  drift->add_option("--seed", d_seed, "sampler seed");
  drift->add_option("--out", d_out, "write the certificate file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*run) {
      swarmsim::ExperimentManifest m = swarmsim::load_manifest(manifest_path);
      if (run->count("--seed")) m.rng_seed = seed_override;
      if (run->count("--replicas")) m.replicas = replicas_override;
      if (run->count("--horizon")) m.horizon = horizon_override;
      if (run->count("--outputs")) m.outputs = outputs_flag;
      m.validate();
      return do_run(m);
    }
    auto direct = [&](swarmsim::EngineKind kind, const DirectFlags& f) {
      swarmsim::ExperimentManifest m;
      m.name = swarmsim::engine_name(kind);
      m.engine = kind;
      m.pieces = f.pieces;
      m.lambda = f.lambda;
      m.mu = f.mu;
      m.us = f.us;
      m.field_order = f.q;
      m.replicas = f.replicas;
      m.horizon = f.horizon;
      m.sample_dt = f.sample_dt;
      m.rng_seed = f.seed;
      m.outputs = f.outputs;
      m.validate();
      return do_run(m);
    };
    if (*nc) return direct(swarmsim::EngineKind::Coded, nc_flags);
    if (*muinf) return direct(swarmsim::EngineKind::MuInfinity, mu_flags);
    if (*alt) return direct(swarmsim::EngineKind::AltSystem, alt_flags);

    if (*bounds) {
      using namespace swarmsim;
      KeyValues kv;
      bool oracle_ok = true;
      if (*king) {
        double v = kingman_bound(k_drift, k_sigma2, k_level);
        kv = {{"exceedance_bound", fmt(v)}};
        if (verify) {
          // compound Poisson with unit-mean exponential jumps, rate and slope
          // chosen to reproduce the requested drift and variance rate
          double alpha = k_sigma2 / 2.0;
          double eps = alpha - k_drift;
          Rng rng(mc_seed);
          std::int64_t hits = 0;
          for (std::int64_t i = 0; i < mc_paths; ++i) {
            auto path = compound_poisson_simulate(
                alpha, [](Rng& r) { return r.exponential(1.0); }, mc_horizon, rng);
            if (path.sup_drift_adjusted(eps) >= k_level) ++hits;
          }
          double freq = static_cast<double>(hits) / static_cast<double>(mc_paths);
          oracle_ok = freq <= v;
          kv.emplace_back("mc_exceedance", fmt(freq));
          kv.emplace_back("mc_below_bound", oracle_ok ? "yes" : "no");
        }
      } else if (*comp) {
        double v = compound_poisson_stay_below_bound(c_alpha, c_m1, c_m2, c_level, c_eps);
        kv = {{"stay_below_bound", fmt(v)}};
        if (verify) {
          Rng rng(mc_seed);
          std::int64_t stays = 0;
          for (std::int64_t i = 0; i < mc_paths; ++i) {
            auto path = compound_poisson_simulate(
                c_alpha, [&](Rng& r) { return r.exponential(1.0 / c_m1); }, mc_horizon, rng);
            if (path.stays_below(c_level, c_eps)) ++stays;
          }
          double freq = static_cast<double>(stays) / static_cast<double>(mc_paths);
          oracle_ok = freq >= v;
          kv.emplace_back("mc_stay_below", fmt(freq));
          kv.emplace_back("mc_above_bound", oracle_ok ? "yes" : "no");
        }
      } else if (*mginf) {
        double v = mgi_infinity_exceedance_bound(g_lambda, g_m, g_level, g_eps);
        kv = {{"exceedance_bound", fmt(v)}};
        if (verify) {
          Rng rng(mc_seed);
          std::int64_t hits = 0;
          for (std::int64_t i = 0; i < mc_paths; ++i) {
            auto path = mgi_infinity_simulate(
                g_lambda, [&](Rng&) { return g_m; }, mc_horizon, rng);
            if (path.exceeds(g_level, g_eps)) ++hits;
          }
          double freq = static_cast<double>(hits) / static_cast<double>(mc_paths);
          oracle_ok = freq <= v;
          kv.emplace_back("mc_exceedance", fmt(freq));
          kv.emplace_back("mc_below_bound", oracle_ok ? "yes" : "no");
        }
      } else if (*busy) {
        BusyPeriodMoments m = busy_period_moments(b_lambda, b_ex, b_ex2);
        kv = {{"rho", fmt(m.rho)},
              {"mean_count", fmt(m.mean_count)},
              {"second_moment_count", fmt(m.second_moment_count)},
              {"mean_length", fmt(m.mean_length)},
              {"second_moment_length", fmt(m.second_moment_length)},
              {"cov_count_length", fmt(m.cov_count_length)}};
        if (verify) {
          BusyVerify bv = verify_busy(b_lambda, b_ex, b_ex2, mc_paths, b_service, mc_seed);
          oracle_ok = bv.agree;
          kv.insert(kv.end(), bv.kv.begin(), bv.kv.end());
        }
      } else if (*muo) {
        kv = {{"mu_o", fmt(critical_contact_rate(m_lambda, m_pieces))}};
      } else if (*consts) {
        ModelParams p{cn_pieces, cn_lambda, cn_mu, cn_us};
        InstabilityConstants c = instability_constants(p);
        ConstantsCheck check = verify_instability_constants(p, c);
        kv = {{"epsilon", fmt(c.epsilon)},
              {"xi", fmt(c.xi)},
              {"epsilon_o", fmt(c.epsilon_o)},
              {"B", fmt(c.level_b)},
              {"N_o", std::to_string(c.n_o)},
              {"rho", fmt(c.rho)},
              {"all_inequalities_satisfied", check.ok ? "yes" : "no"}};
        oracle_ok = check.ok;
      } else if (*coeffs) {
        LyapunovCoefficients c = lyapunov_coefficients(cf_lambda, cf_us, cf_pieces);
        for (std::size_t i = 0; i < c.b.size(); ++i)
          kv.emplace_back("b_" + std::to_string(i), fmt(c.b[i]));
        for (std::size_t i = 0; i < c.a.size(); ++i)
          kv.emplace_back("a_" + std::to_string(i), fmt(c.a[i]));
        kv.emplace_back("conditions_satisfied",
                        check_coefficient_conditions(c, cf_lambda, cf_us) ? "yes" : "no");
      }
      print_kv(kv);
      maybe_write(out_path, kv);
      return oracle_ok ? 0 : kExitOracle;
    }

    if (*drift) {
      using namespace swarmsim;
      if (!(d_lambda < d_us)) {
        std::fprintf(stderr,
                     "drift: no negative-drift certificate exists for lambda >= us; the swarm "
                     "is transient in that regime (lambda = %g, us = %g)\n",
                     d_lambda, d_us);
        return kExitValidation;
      }
      ModelParams p{d_pieces, d_lambda, d_mu, d_us};
      LyapunovCoefficients c = lyapunov_coefficients(d_lambda, d_us, d_pieces);
      DriftCertificate cert = drift_region_check(p, c, {}, d_samples, d_seed);
      KeyValues kv;
      for (std::size_t i = 0; i < c.b.size(); ++i)
        kv.emplace_back("b_" + std::to_string(i), fmt(c.b[i]));
      kv.emplace_back("found", cert.found ? "yes" : "no");
      kv.emplace_back("eta", fmt(cert.eta));
      kv.emplace_back("epsilon", fmt(cert.epsilon));
      kv.emplace_back("threshold", fmt(cert.threshold));
      kv.emplace_back("sampled_states", std::to_string(cert.sampled));
      kv.emplace_back("worst_sampled_ratio", fmt(cert.worst_ratio));
      kv.emplace_back("verified", cert.verified ? "yes" : "no");
      if (!cert.note.empty()) kv.emplace_back("note", cert.note);
      print_kv(kv);
      maybe_write(d_out, kv);
      return cert.found ? 0 : kExitValidation;
    }
  } catch (const swarmsim::ManifestError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const swarmsim::ResourceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitResource;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
