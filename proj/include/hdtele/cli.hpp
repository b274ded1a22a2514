// Copyright 2026 The hdtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch front end: run configuration, experiment dispatch and the on-disk
// JSON / CSV artifacts.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hdtele/analysis.hpp"
#include "hdtele/noise.hpp"
#include "hdtele/reck.hpp"
#include "hdtele/teleport.hpp"

namespace hdtele::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20260101ULL;
inline constexpr const char* kOutDirEnv = "HDTELE_OUT_DIR";

/// Bad or incomplete configuration (exit status 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written or read (exit status 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { teleport, mub_suite, sweep_landscape, sweep_splitting, hom, decompose, bounds, witness };
enum class Format { json, csv, both };

inline const std::vector<std::pair<Kind, std::string>>& kind_names() {
  static const std::vector<std::pair<Kind, std::string>> names = {
      {Kind::teleport, "teleport"}, {Kind::mub_suite, "mub-suite"},  {Kind::sweep_landscape, "sweep-landscape"},
      {Kind::sweep_splitting, "sweep-splitting"}, {Kind::hom, "hom"}, {Kind::decompose, "decompose"},
      {Kind::bounds, "bounds"},     {Kind::witness, "witness"}};
  return names;
}

inline std::string to_string(Kind k) {
  for (const auto& [kind, name] : kind_names())
    if (kind == k) return name;
  throw std::invalid_argument("unknown experiment kind");
}

inline Kind kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kind_names())
    if (name == s) return kind;
  throw ConfigError("experiment: unknown kind '" + s + "'");
}

struct RunConfig {
  Kind kind = Kind::teleport;
  int dimension = 3;
  Variant variant = Variant::main;
  Elements elements = Elements::ideal;
  std::string input;
  NoiseParams noise;
  DetectorModel detectors = DetectorModel::threshold;
  std::vector<double> pd_grid{0.10, 0.13, 0.16, 0.20, 0.25, 0.30};
  std::vector<double> p_grid{0.001, 0.002, 0.005, 0.01, 0.013, 0.02};
  std::vector<double> deviations{0.0, 0.005, 0.01, 0.05 / 3.0, 0.025, 0.05};
  int trials = 1000;
  double bandwidth_nm = 3.0;
  double v_max = 0.82;
  double span_tau = 10.0;
  int half_points = 100;
  int modes = 4;
  std::string unitary;
  std::optional<std::array<double, 7>> expectations;
  std::uint64_t seed = kDefaultSeed;
  // run-time only; never part of the config hash
  int threads = 1;
  std::string out_dir;
  Format format = Format::both;
};

/// Keys accepted in a config file for each experiment (flags mirror them).
inline const std::set<std::string>& allowed_keys(Kind k) {
  static const std::map<Kind, std::set<std::string>> keys = {
      {Kind::teleport, {"experiment", "seed", "dimension", "variant", "elements", "input"}},
      {Kind::mub_suite, {"experiment", "seed", "variant", "elements"}},
      {Kind::sweep_landscape, {"experiment", "seed", "p", "P_d", "v_same", "v_cross", "pd_grid", "p_grid", "detectors"}},
      {Kind::sweep_splitting, {"experiment", "seed", "deviations", "rH_deviation", "trials", "phase_noise"}},
      {Kind::hom, {"experiment", "seed", "bandwidth_nm", "v_max", "span_tau", "half_points"}},
      {Kind::decompose, {"experiment", "seed", "modes", "unitary"}},
      {Kind::bounds, {"experiment", "seed"}},
      {Kind::witness, {"experiment", "seed", "expectations", "p", "P_d", "v_same", "detectors"}},
  };
  return keys.at(k);
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

inline double parse_double(const std::string& field, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(field + ": '" + text + "' is not a number");
  }
  if (used != text.size()) throw ConfigError(field + ": '" + text + "' is not a number");
  return v;
}

}  // namespace detail

/// Parses "re", "im i", "re+im i" or "re-im i" (no spaces inside a number).
inline cplx parse_complex(const std::string& field, const std::string& raw) {
  const std::string s = detail::trim(raw);
  if (s.empty()) throw ConfigError(field + ": empty amplitude");
  if (s.back() != 'i') return {detail::parse_double(field, s), 0.0};
  const std::string body = s.substr(0, s.size() - 1);
  std::size_t split_at = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split_at = k;
      break;
    }
  }
  auto imag_part = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return detail::parse_double(field, t);
  };
  if (split_at == std::string::npos) return {0.0, imag_part(body)};
  return {detail::parse_double(field, body.substr(0, split_at)), imag_part(body.substr(split_at))};
}

inline QuditState parse_input(const std::string& text, int dimension) {
  const auto parts = detail::split(text, ',');
  if (static_cast<int>(parts.size()) != dimension)
    throw ConfigError("input: expected " + std::to_string(dimension) + " amplitudes, got " + std::to_string(parts.size()));
  Vector v(dimension);
  for (int k = 0; k < dimension; ++k) v(k) = parse_complex("input", parts[static_cast<std::size_t>(k)]);
  if (v.norm() == 0.0) throw ConfigError("input: zero vector");
  return QuditState::normalized(v);
}

namespace detail {

inline double get_number(const json& j, const std::string& key) {
  if (!j.at(key).is_number()) throw ConfigError(key + ": expected a number");
  return j.at(key).get<double>();
}

inline int get_int(const json& j, const std::string& key) {
  if (!j.at(key).is_number_integer()) throw ConfigError(key + ": expected an integer");
  return j.at(key).get<int>();
}

inline std::string get_string(const json& j, const std::string& key) {
  if (!j.at(key).is_string()) throw ConfigError(key + ": expected a string");
  return j.at(key).get<std::string>();
}

inline std::vector<double> get_list(const json& j, const std::string& key) {
  if (!j.at(key).is_array() || j.at(key).empty()) throw ConfigError(key + ": expected a non-empty list of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw ConfigError(key + ": expected a non-empty list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline void require_range(const std::string& key, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream msg;
    msg << key << ": value " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
}

}  // namespace detail

/// Value types of the flag mirror: how a command-line string becomes a JSON value.
inline json flag_value(const std::string& key, const std::string& text) {
  static const std::set<std::string> lists = {"pd_grid", "p_grid", "deviations", "expectations"};
  static const std::set<std::string> strings = {"variant", "elements", "input", "unitary", "detectors", "experiment"};
  static const std::set<std::string> integers = {"dimension", "trials", "half_points", "modes"};
  if (strings.contains(key)) return text;
  if (lists.contains(key)) {
    json arr = json::array();
    for (const auto& part : detail::split(text, ',')) arr.push_back(detail::parse_double(key, part));
    return arr;
  }
  if (key == "seed") {
    try {
      std::size_t used = 0;
      if (text.find('-') != std::string::npos) throw std::invalid_argument(text);
      const auto v = std::stoull(text, &used, 0);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("seed: '" + text + "' is not an unsigned 64-bit integer");
    }
  }
  if (integers.contains(key)) {
    const double v = detail::parse_double(key, text);
    if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
    return static_cast<long long>(v);
  }
  return detail::parse_double(key, text);
}

/// Builds a validated configuration from a JSON object (file contents with
/// flag overrides already applied).
inline RunConfig config_from_json(Kind kind, const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const auto& allowed = allowed_keys(kind);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' for experiment " + to_string(kind));
  }
  RunConfig c;
  c.kind = kind;
  using namespace detail;
  if (j.contains("experiment") && kind_from_string(get_string(j, "experiment")) != kind)
    throw ConfigError("experiment: config is for '" + get_string(j, "experiment") + "', not '" + to_string(kind) + "'");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0))
      throw ConfigError("seed: expected an unsigned 64-bit integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("dimension")) c.dimension = get_int(j, "dimension");
  if (c.dimension < 2 || c.dimension > 4) throw ConfigError("dimension: must be 2, 3 or 4");
  if (j.contains("variant")) {
    const auto v = get_string(j, "variant");
    if (v == "main") c.variant = Variant::main;
    else if (v == "feedforward") c.variant = Variant::feedforward;
    else throw ConfigError("variant: expected main or feedforward, got '" + v + "'");
  }
  if (j.contains("elements")) {
    const auto v = get_string(j, "elements");
    if (v == "ideal") c.elements = Elements::ideal;
    else if (v == "experimental") c.elements = Elements::experimental;
    else throw ConfigError("elements: expected ideal or experimental, got '" + v + "'");
  }
  if (j.contains("detectors")) {
    const auto v = get_string(j, "detectors");
    if (v == "threshold") c.detectors = DetectorModel::threshold;
    else if (v == "number_resolving") c.detectors = DetectorModel::number_resolving;
    else throw ConfigError("detectors: expected threshold or number_resolving, got '" + v + "'");
  }
  if (kind == Kind::teleport) {
    if (!j.contains("input")) throw ConfigError("input: required for teleport");
    c.input = get_string(j, "input");
    parse_input(c.input, c.dimension);
    if (c.dimension != 3 && (c.variant != Variant::main || c.elements != Elements::ideal))
      throw ConfigError("dimension: N != 3 supports only the main variant with ideal elements");
  }
  if (j.contains("p")) c.noise.p = get_number(j, "p");
  if (j.contains("P_d")) c.noise.P_d = get_number(j, "P_d");
  if (j.contains("v_same")) c.noise.v_same = get_number(j, "v_same");
  if (j.contains("v_cross")) c.noise.v_cross = get_number(j, "v_cross");
  if (j.contains("rH_deviation")) c.noise.rH_deviation = get_number(j, "rH_deviation");
  if (j.contains("phase_noise")) c.noise.phase_noise = get_number(j, "phase_noise");
  require_range("p", c.noise.p, 0.0, 0.0999999);
  require_range("P_d", c.noise.P_d, 0.0, 1.0);
  require_range("v_same", c.noise.v_same, 0.0, 1.0);
  require_range("v_cross", c.noise.v_cross, 0.0, 1.0);
  require_range("rH_deviation", c.noise.rH_deviation, 0.0, 1.0 / 3.0);
  if (!(c.noise.phase_noise >= 0.0)) throw ConfigError("phase_noise: must be >= 0");
  if (j.contains("pd_grid")) c.pd_grid = get_list(j, "pd_grid");
  if (j.contains("p_grid")) c.p_grid = get_list(j, "p_grid");
  for (double v : c.pd_grid) require_range("pd_grid", v, 0.0, 1.0);
  for (double v : c.p_grid) require_range("p_grid", v, 1e-12, 0.0999999);
  if (j.contains("deviations")) {
    c.deviations = get_list(j, "deviations");
  } else if (j.contains("rH_deviation")) {
    c.deviations.clear();
    for (int k = 0; k <= 5; ++k) c.deviations.push_back(c.noise.rH_deviation * k / 5.0);
  }
  for (double v : c.deviations) require_range("deviations", v, 0.0, 0.3333333);
  if (j.contains("trials")) c.trials = get_int(j, "trials");
  if (c.trials < 1) throw ConfigError("trials: must be >= 1");
  if (j.contains("bandwidth_nm")) c.bandwidth_nm = get_number(j, "bandwidth_nm");
  if (!(c.bandwidth_nm > 0.0)) throw ConfigError("bandwidth_nm: must be positive");
  if (j.contains("v_max")) c.v_max = get_number(j, "v_max");
  require_range("v_max", c.v_max, 0.0, 1.0);
  if (j.contains("span_tau")) c.span_tau = get_number(j, "span_tau");
  if (!(c.span_tau > 0.0)) throw ConfigError("span_tau: must be positive");
  if (j.contains("half_points")) c.half_points = get_int(j, "half_points");
  if (c.half_points < 1) throw ConfigError("half_points: must be >= 1");
  if (j.contains("modes")) c.modes = get_int(j, "modes");
  if (c.modes < 1 || c.modes > 64) throw ConfigError("modes: must lie in [1, 64]");
  if (j.contains("unitary")) c.unitary = get_string(j, "unitary");
  if (j.contains("expectations")) {
    const auto e = get_list(j, "expectations");
    if (e.size() != 7) throw ConfigError("expectations: expected 7 values");
    std::array<double, 7> arr{};
    std::copy(e.begin(), e.end(), arr.begin());
    for (double v : arr) require_range("expectations", v, -1.0, 1.0);
    c.expectations = arr;
  }
  return c;
}

/// The configuration echo stored in every artifact: exactly the keys the
/// experiment uses, with defaults filled.
inline json config_to_json(const RunConfig& c) {
  json j;
  j["experiment"] = to_string(c.kind);
  j["seed"] = c.seed;
  auto noise = [&](std::initializer_list<const char*> keys) {
    for (std::string k : keys) {
      if (k == "p") j[k] = c.noise.p;
      if (k == "P_d") j[k] = c.noise.P_d;
      if (k == "v_same") j[k] = c.noise.v_same;
      if (k == "v_cross") j[k] = c.noise.v_cross;
      if (k == "phase_noise") j[k] = c.noise.phase_noise;
    }
  };
  const char* detectors = c.detectors == DetectorModel::threshold ? "threshold" : "number_resolving";
  switch (c.kind) {
    case Kind::teleport:
      j["dimension"] = c.dimension;
      j["variant"] = to_string(c.variant);
      j["elements"] = to_string(c.elements);
      j["input"] = c.input;
      break;
    case Kind::mub_suite:
      j["variant"] = to_string(c.variant);
      j["elements"] = to_string(c.elements);
      break;
    case Kind::sweep_landscape:
      noise({"p", "P_d", "v_same", "v_cross"});
      j["pd_grid"] = c.pd_grid;
      j["p_grid"] = c.p_grid;
      j["detectors"] = detectors;
      break;
    case Kind::sweep_splitting:
      j["deviations"] = c.deviations;
      j["trials"] = c.trials;
      noise({"phase_noise"});
      break;
    case Kind::hom:
      j["bandwidth_nm"] = c.bandwidth_nm;
      j["v_max"] = c.v_max;
      j["span_tau"] = c.span_tau;
      j["half_points"] = c.half_points;
      break;
    case Kind::decompose:
      j["modes"] = c.modes;
      if (!c.unitary.empty()) j["unitary"] = c.unitary;
      break;
    case Kind::bounds:
      break;
    case Kind::witness:
      noise({"p", "P_d", "v_same"});
      j["detectors"] = detectors;
      if (c.expectations) j["expectations"] = *c.expectations;
      break;
  }
  return j;
}

/// Reads the JSON config file (if any), overlays flag values, validates.
inline RunConfig load_config(Kind kind, const std::string& path, const std::map<std::string, std::string>& flags) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config: " + path + ": " + e.what());
    }
  }
  for (const auto& [key, text] : flags) j[key] = flag_value(key, text);
  return config_from_json(kind, j);
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

struct Artifacts {
  json document;     // metadata + results
  std::string csv;   // header comment + table
  std::string summary;
};

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline Artifacts package(const RunConfig& c, json results, const std::string& table, std::string summary) {
  Artifacts a;
  const json cfg = config_to_json(c);
  const std::string cfg_hash = hex64(fnv1a64(cfg.dump()));
  json meta;
  meta["tool"] = "hdtele";
  meta["version"] = kVersion;
  meta["experiment"] = to_string(c.kind);
  meta["seed"] = c.seed;
  meta["photon_cutoff"] = kPhotonCutoff;
  meta["config"] = cfg;
  meta["config_hash"] = cfg_hash;
  meta["payload_hash"] = hex64(fnv1a64(results.dump()));
  a.document["metadata"] = meta;
  a.document["results"] = std::move(results);
  a.csv = "# hdtele " + std::string(kVersion) + " " + to_string(c.kind) + " seed=" + std::to_string(c.seed) +
          " cutoff=" + std::to_string(kPhotonCutoff) + " config_hash=" + cfg_hash +
          " payload_hash=" + hex64(fnv1a64(table)) + "\n" + table;
  a.summary = std::move(summary);
  return a;
}

inline json outcomes_json(const std::vector<TeleportOutcome>& outs, const std::vector<ClickPattern>& patterns) {
  json arr = json::array();
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const auto& o = outs[i];
    const auto& p = patterns[i];
    json e;
    e["pattern"] = o.pattern;
    e["herald_probability"] = o.herald_probability;
    e["success_probability"] = o.success_probability;
    e["fidelity"] = o.fidelity_vs_input;
    e["bell_state"] = p.heralded ? json::array({p.heralded->m, p.heralded->n}) : json(nullptr);
    if (p.correction.weyl) {
      e["correction"] = "X^" + std::to_string(p.correction.weyl->m) + " Z^" + std::to_string(p.correction.weyl->n);
    } else {
      e["correction"] = p.correction.uses_extra_level ? "dilated" : "unitary";
    }
    json rows = json::array();
    for (Eigen::Index r = 0; r < p.correction.unitary.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index k = 0; k < p.correction.unitary.cols(); ++k) row.push_back(complex_json(p.correction.unitary(r, k)));
      rows.push_back(std::move(row));
    }
    e["correction_matrix"] = std::move(rows);
    arr.push_back(std::move(e));
  }
  return arr;
}

inline Artifacts run_teleport_experiment(const RunConfig& c) {
  const QuditState input = parse_input(c.input, c.dimension);
  std::vector<TeleportOutcome> outs;
  std::vector<ClickPattern> patterns;
  if (c.dimension == 3) {
    const Teleporter t(3, c.variant, c.elements);
    outs = t.run(input);
    patterns = t.patterns();
  } else {
    const TeleportNetwork net(c.dimension, Variant::main, Elements::ideal);
    patterns = bell_heralding_patterns(net);
    outs = teleport(net, input, patterns);
  }
  json r;
  r["dimension"] = c.dimension;
  r["variant"] = to_string(c.variant);
  r["elements"] = to_string(c.elements);
  r["input"] = json::array();
  for (Eigen::Index k = 0; k < input.amplitudes().size(); ++k) r["input"].push_back(complex_json(input[static_cast<int>(k)]));
  r["patterns"] = outcomes_json(outs, patterns);
  double total = 0.0, fsum = 0.0;
  std::string table = "pattern,herald_probability,success_probability,fidelity\n";
  for (const auto& o : outs) {
    total += o.success_probability;
    fsum += o.success_probability * o.fidelity_vs_input;
    table += "\"" + o.pattern + "\"," + num(o.herald_probability) + "," + num(o.success_probability) + "," + num(o.fidelity_vs_input) + "\n";
  }
  r["total_success_probability"] = total;
  r["fidelity"] = fsum / total;
  std::string summary = "patterns: " + std::to_string(outs.size()) + "\ntotal success probability: " + num(total) +
                        "\nfidelity: " + num(fsum / total) + "\n";
  return package(c, std::move(r), table, summary);
}

inline Artifacts run_mub_suite(const RunConfig& c) {
  const Teleporter t(3, c.variant, c.elements);
  std::vector<FidelityEntry> entries;
  json states = json::array();
  std::string table = "state,fidelity,success_probability\n";
  double success = 0.0;
  for (const auto& s : mub_states()) {
    const auto outs = t.run(s.state);
    double total = 0.0, f = 0.0;
    for (const auto& o : outs) {
      total += o.success_probability;
      f += o.success_probability * o.fidelity_vs_input;
    }
    f /= total;
    success += total / 12.0;
    entries.push_back({s.label, f, 0.0});
    states.push_back({{"state", s.label}, {"fidelity", f}, {"success_probability", total}});
    table += s.label + "," + num(f) + "," + num(total) + "\n";
  }
  const MubReport rep = mub_suite_report(entries);
  json r;
  r["variant"] = to_string(c.variant);
  r["elements"] = to_string(c.elements);
  r["states"] = std::move(states);
  r["mean_fidelity"] = rep.mean;
  r["sigma_mean"] = rep.sigma_mean;
  r["exceeds_classical_bound"] = rep.beats_classical;
  r["exceeds_qubit_subspace_bound"] = rep.beats_qubit;
  r["mean_success_probability"] = success;
  const std::string summary = "mean fidelity: " + num(rep.mean) + "\nmean success probability: " + num(success) + "\n";
  return package(c, std::move(r), table, summary);
}

inline json sweep_json(const SweepResult& s) {
  json r;
  r["axes"] = json::array();
  for (const auto& a : s.axes) r["axes"].push_back({{"name", a.name}, {"values", a.values}});
  r["fidelity"] = s.fidelity;
  r["success_rate"] = s.success_rate;
  r["trials"] = s.trials;
  return r;
}

inline Artifacts run_landscape(const RunConfig& c) {
  const NoisyTeleportModel model(c.noise.v_same, c.noise.v_cross, c.threads, c.detectors);
  const SweepResult s = fidelity_landscape(model, c.pd_grid, c.p_grid);
  json r = sweep_json(s);
  const auto at = model.evaluate(c.noise.p, c.noise.P_d);
  r["operating_point"] = {{"p", c.noise.p}, {"P_d", c.noise.P_d}, {"fidelity", at.fidelity}, {"four_fold_rate", at.four_fold_rate}};
  std::vector<double> decade;
  for (int k = 0; k <= 10; ++k) decade.push_back(1e-3 * std::pow(10.0, k / 10.0));
  const double slope = four_fold_slope(model, decade, c.noise.P_d);
  r["four_fold_slope"] = slope;
  std::string table = "P_d,p,fidelity,four_fold_rate,trials\n";
  for (std::size_t i = 0; i < c.pd_grid.size(); ++i)
    for (std::size_t k = 0; k < c.p_grid.size(); ++k)
      table += num(c.pd_grid[i]) + "," + num(c.p_grid[k]) + "," + num(s.fidelity[i][k]) + "," + num(s.success_rate[i][k]) + ",0\n";
  const std::string summary = "fidelity at p=" + num(c.noise.p) + ", P_d=" + num(c.noise.P_d) + ": " + num(at.fidelity) +
                              "\nfour-fold rate slope in p: " + num(slope) + "\n";
  return package(c, std::move(r), table, summary);
}

inline Artifacts run_splitting(const RunConfig& c) {
  const SweepResult s = splitting_ratio_perturbation(c.deviations, c.trials, c.seed, c.noise, c.threads);
  json r = sweep_json(s);
  std::string table = "rH_deviation,mean_fidelity,success_probability,trials\n";
  std::string summary;
  for (std::size_t k = 0; k < c.deviations.size(); ++k) {
    table += num(c.deviations[k]) + "," + num(s.fidelity[0][k]) + "," + num(s.success_rate[0][k]) + "," +
             std::to_string(s.trials[0][k]) + "\n";
    summary += "deviation " + num(c.deviations[k]) + ": mean fidelity " + num(s.fidelity[0][k]) + "\n";
  }
  return package(c, std::move(r), table, summary);
}

inline Artifacts run_hom(const RunConfig& c) {
  const double tau = coherence_time_fs(c.bandwidth_nm);
  const HomScan scan = hom_scan(symmetric_delays(c.span_tau * tau, c.half_points), c.bandwidth_nm, c.v_max);
  const double vis = hom_visibility(scan);
  json r;
  r["tau_c_fs"] = scan.tau_c_fs;
  r["v_max"] = scan.v_max;
  r["delays_fs"] = scan.delays_fs;
  r["coincidence"] = scan.coincidence;
  r["visibility"] = vis;
  std::string table = "delay_fs,coincidence\n";
  for (std::size_t k = 0; k < scan.delays_fs.size(); ++k) table += num(scan.delays_fs[k]) + "," + num(scan.coincidence[k]) + "\n";
  return package(c, std::move(r), table, "coherence time: " + num(tau) + " fs\nvisibility: " + num(vis) + "\n");
}

/// Unitary text format: one row per line, entries "re" or "re+imi"
/// separated by whitespace.
inline Matrix read_unitary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("unitary: cannot open '" + path + "'");
  std::vector<std::vector<cplx>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<cplx> row;
    std::string tok;
    while (ls >> tok) row.push_back(parse_complex("unitary", tok));
    rows.push_back(std::move(row));
  }
  const auto n = rows.size();
  if (n == 0) throw ConfigError("unitary: file is empty");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) throw ConfigError("unitary: matrix must be square");
    for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

inline Artifacts run_decompose(const RunConfig& c) {
  Matrix m;
  if (!c.unitary.empty()) {
    m = read_unitary(c.unitary);
  } else {
    std::mt19937_64 rng(c.seed);
    m = random_unitary(c.modes, rng);
  }
  ModeUnitary u = [&] {
    try {
      return ModeUnitary(m, 1e-9);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("unitary: ") + e.what());
    }
  }();
  const MeshPlan plan = reck_decompose(u);
  const double err = max_abs_entry(recompose(plan, static_cast<int>(u.size())).matrix() - u.matrix());
  json r;
  r["modes"] = u.size();
  r["unitary"] = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
    r["unitary"].push_back(std::move(row));
  }
  r["plan"] = to_text(plan);
  r["elements"] = plan.elements.size();
  r["max_recomposition_error"] = err;
  std::string table = "kind,mode_a,mode_b,theta,phi\n";
  for (const auto& e : plan.elements) {
    table += std::string(e.kind == MeshElement::Kind::rotation ? "ROT" : "PHASE") + "," + std::to_string(e.mode_a) + "," +
             std::to_string(e.mode_b) + "," + num(e.theta) + "," + num(e.phi) + "\n";
  }
  return package(c, std::move(r), table,
                 "elements: " + std::to_string(plan.elements.size()) + "\nmax recomposition error: " + num(err) + "\n");
}

inline Artifacts run_bounds(const RunConfig& c) {
  const double classical = classical_bound(3);
  const SubspaceBound sub = qubit_subspace_bound();
  json r;
  r["classical_bound"] = classical;
  r["qubit_subspace_bound"] = sub.value;
  r["qubit_subspace_bound_converged"] = sub.converged;
  r["thresholds"] = {{"classical", "fidelity > " + num(classical)}, {"genuine_qutrit", "fidelity > " + num(sub.value)}};
  const std::string table = "bound,value\nclassical," + num(classical) + "\nqubit_subspace," + num(sub.value) + "\n";
  return package(c, std::move(r), table,
                 "classical bound: " + num(classical) + " (pass if fidelity > " + num(classical) + ")\n" +
                     "qubit-subspace bound: " + num(sub.value) + " (pass if fidelity > " + num(sub.value) + ")\n");
}

inline Artifacts run_witness(const RunConfig& c) {
  std::array<double, 7> e{};
  json r;
  if (c.expectations) {
    e = *c.expectations;
    r["source"] = "expectations";
  } else {
    const auto sim = simulate_source_witness(c.noise, c.detectors);
    e = sim.expectations;
    r["source"] = "simulated";
    r["coincidence_rate"] = sim.coincidence_rate;
  }
  const double f = entanglement_witness_fidelity(e);
  static const std::array<const char*, 7> names = {"xx01", "yy01", "xx02", "yy02", "xx12", "yy12", "P"};
  std::string table = "observable,expectation\n";
  for (std::size_t k = 0; k < 7; ++k) {
    r["expectations"][names[k]] = e[k];
    table += std::string(names[k]) + "," + num(e[k]) + "\n";
  }
  r["fidelity"] = f;
  return package(c, std::move(r), table, "witness fidelity: " + num(f) + "\n");
}

inline Artifacts execute(const RunConfig& c) {
  switch (c.kind) {
    case Kind::teleport: return run_teleport_experiment(c);
    case Kind::mub_suite: return run_mub_suite(c);
    case Kind::sweep_landscape: return run_landscape(c);
    case Kind::sweep_splitting: return run_splitting(c);
    case Kind::hom: return run_hom(c);
    case Kind::decompose: return run_decompose(c);
    case Kind::bounds: return run_bounds(c);
    case Kind::witness: return run_witness(c);
  }
  throw std::invalid_argument("execute: unknown kind");
}

inline std::string default_out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? env : ".";
}

/// Writes <out>/<experiment>.json and/or .csv; returns the written paths.
inline std::vector<std::string> write_artifacts(const RunConfig& c, const Artifacts& a) {
  namespace fs = std::filesystem;
  const fs::path dir = c.out_dir.empty() ? fs::path(default_out_dir()) : fs::path(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("output: cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::string> written;
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("output: cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw IoError("output: write failed for '" + p.string() + "'");
    written.push_back(p.string());
  };
  const std::string stem = to_string(c.kind);
  if (c.format != Format::csv) write(dir / (stem + ".json"), a.document.dump(2) + "\n");
  if (c.format != Format::json) write(dir / (stem + ".csv"), a.csv);
  return written;
}

struct VerifyResult {
  bool ok = false;
  std::string message;
};

/// Re-checks an artifact's embedded hashes against its contents.
inline VerifyResult verify_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("verify: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.rfind("# hdtele ", 0) == 0) {
    const auto nl = text.find('\n');
    if (nl == std::string::npos) return {false, "csv: missing table"};
    const std::string header = text.substr(0, nl), table = text.substr(nl + 1);
    const auto pos = header.find("payload_hash=");
    if (pos == std::string::npos) return {false, "csv: header lacks payload_hash"};
    const std::string recorded = header.substr(pos + 13, 16);
    const std::string actual = hex64(fnv1a64(table));
    if (recorded != actual) return {false, "csv: payload hash mismatch (recorded " + recorded + ", actual " + actual + ")"};
    return {true, "csv: payload hash " + actual + " ok"};
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return {false, std::string("json: ") + e.what()};
  }
  if (!doc.contains("metadata") || !doc.contains("results")) return {false, "json: missing metadata or results"};
  const auto& meta = doc["metadata"];
  for (const char* key : {"version", "seed", "photon_cutoff", "config", "config_hash", "payload_hash"})
    if (!meta.contains(key)) return {false, std::string("json: metadata lacks ") + key};
  const std::string cfg = hex64(fnv1a64(meta["config"].dump()));
  if (cfg != meta["config_hash"].get<std::string>()) return {false, "json: config hash mismatch"};
  if (meta["config"].value("seed", std::uint64_t{0}) != meta["seed"].get<std::uint64_t>())
    return {false, "json: seed differs from config"};
  const std::string payload = hex64(fnv1a64(doc["results"].dump()));
  if (payload != meta["payload_hash"].get<std::string>()) return {false, "json: payload hash mismatch"};
  try {
    config_from_json(kind_from_string(meta["experiment"].get<std::string>()), meta["config"]);
  } catch (const ConfigError& e) {
    return {false, std::string("json: embedded config invalid: ") + e.what()};
  }
  return {true, "json: config hash " + cfg + ", payload hash " + payload + " ok"};
}

}  // namespace hdtele::cli
