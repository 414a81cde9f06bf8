#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmsim {

/// Manifest validation/parsing failure with field-level context.
class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::string field, std::string message)
      : std::runtime_error("manifest: " + field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class EngineKind { Piece, Coded, MuInfinity, AltSystem };

inline std::string engine_name(EngineKind e) {
  switch (e) {
    case EngineKind::Piece: return "piece";
    case EngineKind::Coded: return "coded";
    case EngineKind::MuInfinity: return "mu-infinity";
    case EngineKind::AltSystem: return "alt-system";
  }
  return "?";
}

inline EngineKind parse_engine(const std::string& s) {
  if (s == "piece") return EngineKind::Piece;
  if (s == "coded") return EngineKind::Coded;
  if (s == "mu-infinity") return EngineKind::MuInfinity;
  if (s == "alt-system") return EngineKind::AltSystem;
  throw ManifestError("engine", "unknown engine '" + s + "'");
}

/// A reproducible experiment: flat `key = value` text with `#` comments.
/// Schema (defaults in parentheses):
///   name, engine (piece), K, lambda, mu (1), us (1), q (2, coded only),
///   policy (random-useful), replicas (1), horizon, sample_dt (1),
///   rng_seed (1), initial (empty | one-club:<N>), outputs (out)
struct ExperimentManifest {
  std::string name = "experiment";
  EngineKind engine = EngineKind::Piece;
  int pieces = 1;
  double lambda = 1;
  double mu = 1;
  double us = 1;
  int field_order = 2;
  std::string policy = "random-useful";
  std::int64_t replicas = 1;
  double horizon = 0;
  double sample_dt = 1;
  std::uint64_t rng_seed = 1;
  std::string initial = "empty";
  std::string outputs = "out";
  std::int64_t max_peers = 8'000'000;

  bool operator==(const ExperimentManifest&) const = default;

  /// One-club launch size when initial is "one-club:<N>"; 0 for "empty".
  std::int64_t launch_size() const {
    if (initial == "empty") return 0;
    const std::string prefix = "one-club:";
    if (initial.rfind(prefix, 0) == 0) {
      try {
        std::int64_t n = std::stoll(initial.substr(prefix.size()));
        if (n >= 1) return n;
      } catch (...) {
      }
    }
    throw ManifestError("initial", "expected 'empty' or 'one-club:<N>' with N >= 1");
  }

  void validate() const {
    if (name.empty()) throw ManifestError("name", "must not be empty");
    if (pieces < 1 || pieces > 64) throw ManifestError("K", "must lie in [1, 64]");
    if (!(lambda > 0)) throw ManifestError("lambda", "must be > 0");
    if (!(mu > 0)) throw ManifestError("mu", "must be > 0");
    if (!(us > 0)) throw ManifestError("us", "must be > 0");
    if (replicas < 1) throw ManifestError("replicas", "must be >= 1");
    if (!(horizon > 0)) throw ManifestError("horizon", "must be > 0");
    if (!(sample_dt > 0)) throw ManifestError("sample_dt", "must be > 0");
    if (policy != "random-useful" && policy != "rarest-first" && policy != "sequential")
      throw ManifestError("policy", "unknown policy '" + policy + "'");
    (void)launch_size();
    if (engine == EngineKind::Coded && initial != "empty")
      throw ManifestError("initial", "coded runs start empty");
    if (engine == EngineKind::AltSystem) {
      if (!(lambda > us))
        throw ManifestError("lambda", "alt-system launch constants need lambda > us");
      if (pieces < 2) throw ManifestError("K", "alt-system needs K >= 2");
    }
    if (engine == EngineKind::MuInfinity && pieces < 2)
      throw ManifestError("K", "mu-infinity chain needs K >= 2");
    if (max_peers < 1) throw ManifestError("max_peers", "must be >= 1");
  }
};

inline ExperimentManifest parse_manifest_text(const std::string& text) {
  ExperimentManifest m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    auto e = s.find_last_not_of(ws);
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ManifestError("line " + std::to_string(lineno), "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "name") m.name = value;
      else if (key == "engine") m.engine = parse_engine(value);
      else if (key == "K") m.pieces = std::stoi(value);
      else if (key == "lambda") m.lambda = std::stod(value);
      else if (key == "mu") m.mu = std::stod(value);
      else if (key == "us") m.us = std::stod(value);
      else if (key == "q") m.field_order = std::stoi(value);
      else if (key == "policy") m.policy = value;
      else if (key == "replicas") m.replicas = std::stoll(value);
      else if (key == "horizon") m.horizon = std::stod(value);
      else if (key == "sample_dt") m.sample_dt = std::stod(value);
      else if (key == "rng_seed") m.rng_seed = std::stoull(value);
      else if (key == "initial") m.initial = value;
      else if (key == "max_peers") m.max_peers = std::stoll(value);
      else if (key == "outputs") m.outputs = value;
      else throw ManifestError(key, "unknown key (line " + std::to_string(lineno) + ")");
    } catch (const ManifestError&) {
      throw;
    } catch (const std::exception&) {
      throw ManifestError(key, "cannot parse value '" + value + "' (line " +
                                   std::to_string(lineno) + ")");
    }
  }
  m.validate();
  return m;
}

inline ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("file", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest_text(buf.str());
}

inline std::string serialize_manifest(const ExperimentManifest& m) {
  std::ostringstream out;
  out.precision(17);
  out << "name = " << m.name << '\n';
  out << "engine = " << engine_name(m.engine) << '\n';
  out << "K = " << m.pieces << '\n';
  out << "lambda = " << m.lambda << '\n';
  out << "mu = " << m.mu << '\n';
  out << "us = " << m.us << '\n';
  out << "q = " << m.field_order << '\n';
  out << "policy = " << m.policy << '\n';
  out << "replicas = " << m.replicas << '\n';
  out << "horizon = " << m.horizon << '\n';
  out << "sample_dt = " << m.sample_dt << '\n';
  out << "rng_seed = " << m.rng_seed << '\n';
  out << "initial = " << m.initial << '\n';
  out << "max_peers = " << m.max_peers << '\n';
  out << "outputs = " << m.outputs << '\n';
  return out.str();
}

}  // namespace swarmsim
