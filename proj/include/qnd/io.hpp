// Copyright 2026 The qnd-povm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"
#include "qnd/povm.hpp"
#include "qnd/spin_state.hpp"

namespace qnd {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline std::string format_header() {
  return std::string("qnd-povm v") + kVersion + ", schema v" + std::to_string(kSchemaVersion);
}

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using nlohmann::json;

// Shortest text that round-trips the double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// Evaluates a product/quotient of factors, left to right. Factors are
/// decimal numbers, "pi" and "N". Examples: "pi/N", "4*pi/N", "pi/2".
inline double eval_expression(const std::string& text, int N, const std::string& where) {
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto factor = [&]() -> double {
    skip();
    if (text.compare(i, 2, "pi") == 0) {
      i += 2;
      return std::numbers::pi;
    }
    if (i < text.size() && text[i] == 'N') {
      ++i;
      if (N <= 0) throw ConfigError(where + ": 'N' used but N is not set");
      return static_cast<double>(N);
    }
    const char* begin = text.c_str() + i;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ConfigError(where + ": cannot parse '" + text + "'");
    i += static_cast<std::size_t>(end - begin);
    return v;
  };
  double value = factor();
  for (skip(); i < text.size(); skip()) {
    const char op = text[i++];
    const double rhs = factor();
    if (op == '*') {
      value *= rhs;
    } else if (op == '/') {
      if (rhs == 0.0) throw ConfigError(where + ": division by zero in '" + text + "'");
      value /= rhs;
    } else {
      throw ConfigError(where + ": unexpected '" + std::string(1, op) + "' in '" + text + "'");
    }
  }
  return value;
}

inline double real_field(const json& v, int N, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return eval_expression(v.get<std::string>(), N, where);
  throw ConfigError(where + ": expected a number or expression string");
}

inline cplx complex_field(const json& v, int N, const std::string& where) {
  if (v.is_array()) {
    if (v.size() != 2) throw ConfigError(where + ": expected [re, im]");
    return {real_field(v[0], N, where + "[0]"), real_field(v[1], N, where + "[1]")};
  }
  return {real_field(v, N, where), 0.0};
}

inline std::int64_t int_field(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

inline void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed,
                         const std::set<std::string>& required = {}) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, _] : obj.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  for (const auto& k : required)
    if (!obj.contains(k)) throw ConfigError(where + ": missing key '" + k + "'");
}

// ---- states -------------------------------------------------------------

inline json state_to_json(const CollectiveState& s) {
  json sectors = json::array();
  for (const auto& sec : s.sectors()) {
    json amps = json::array();
    for (const auto& a : sec.amps) amps.push_back({a.real(), a.imag()});
    sectors.push_back({{"twoJ", sec.J.twice()}, {"amps", std::move(amps)}});
  }
  return {{"sectors", std::move(sectors)}};
}

inline CollectiveState state_from_json(const json& j, const std::string& where = "state") {
  require_keys(j, where, {"sectors", "kind"}, {"sectors"});
  if (!j["sectors"].is_array() || j["sectors"].empty()) throw ConfigError(where + ".sectors: expected a non-empty array");
  std::vector<Sector> secs;
  for (std::size_t k = 0; k < j["sectors"].size(); ++k) {
    const auto& s = j["sectors"][k];
    const std::string w = where + ".sectors[" + std::to_string(k) + "]";
    require_keys(s, w, {"twoJ", "amps"}, {"twoJ", "amps"});
    const auto tj = int_field(s["twoJ"], w + ".twoJ");
    if (tj < 0) throw ConfigError(w + ".twoJ: must be >= 0");
    if (!s["amps"].is_array() || s["amps"].size() != static_cast<std::size_t>(tj + 1))
      throw ConfigError(w + ".amps: expected twoJ + 1 entries");
    Sector sec{HalfInt::from_twice(static_cast<int>(tj)), {}};
    for (std::size_t i = 0; i < s["amps"].size(); ++i)
      sec.amps.push_back(complex_field(s["amps"][i], 0, w + ".amps[" + std::to_string(i) + "]"));
    secs.push_back(std::move(sec));
  }
  try {
    return CollectiveState(std::move(secs));
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// ---- parameters ---------------------------------------------------------

inline json params_to_json(const QndParams& p) {
  return {{"gamma", {p.gamma().real(), p.gamma().imag()}},
          {"chi", {p.chi().real(), p.chi().imag()}},
          {"gt", p.gt()}};
}

inline QndParams params_from_json(const json& j, int N, const std::string& where = "params") {
  require_keys(j, where, {"gamma", "chi", "gt"}, {"gamma", "chi", "gt"});
  const cplx g = complex_field(j["gamma"], N, where + ".gamma");
  const cplx c = complex_field(j["chi"], N, where + ".chi");
  const double gt = real_field(j["gt"], N, where + ".gt");
  try {
    return QndParams(g, c, gt);
  } catch (const PreconditionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

inline PhotonOutcome outcome_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [n_c, n_d]");
  const PhotonOutcome o{int_field(j[0], where + "[0]"), int_field(j[1], where + "[1]")};
  if (o.n_c < 0 || o.n_d < 0) throw ConfigError(where + ": photon counts must be >= 0");
  return o;
}

// ---- experiment configuration --------------------------------------------

struct ExperimentConfig {
  QndParams params{1.0, 1.0, 0.0};
  int N = 0;
  CollectiveState initial;
  json raw;
};

/// Initial state: {"kind": "coherent", "theta": x}, {"kind": "dicke", "m": m}
/// (sector J = N/2), or {"kind": "state", "sectors": [...]}.
inline CollectiveState initial_from_json(const json& j, int N, const std::string& where = "initial") {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ConfigError(where + ": expected an object with a string 'kind'");
  const std::string kind = j["kind"];
  if (kind == "state") return state_from_json(j, where);
  if (N <= 0) throw ConfigError(where + ": N must be positive");
  if (kind == "coherent") {
    require_keys(j, where, {"kind", "theta"}, {"theta"});
    return coherent_state(N, real_field(j["theta"], N, where + ".theta"));
  }
  if (kind == "dicke") {
    require_keys(j, where, {"kind", "m"}, {"m"});
    const HalfInt J = HalfInt::from_twice(N);
    const double m = real_field(j["m"], N, where + ".m");
    const double tm = 2.0 * m;
    if (tm != std::round(tm)) throw ConfigError(where + ".m: must be a multiple of 1/2");
    const HalfInt mz = HalfInt::from_twice(static_cast<int>(tm));
    if (!mz.same_parity(J) || abs(mz) > J) throw ConfigError(where + ".m: not on the ladder of J = N/2");
    return dicke_state(J, mz);
  }
  throw ConfigError(where + ".kind: unknown '" + kind + "'");
}

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"params", "N", "initial", "amp_scan", "photon_dist",
                                          "measure", "wigner", "project", "comment"};
  return s;
}

/// Structural validation of the whole document, then the physical objects.
inline ExperimentConfig parse_config(const json& j) {
  std::set<std::string> required = {"params", "N", "initial"};
  require_keys(j, "config", known_sections(), required);
  ExperimentConfig cfg;
  const auto N = int_field(j["N"], "N");
  if (N < 1 || N > 100000) throw ConfigError("N: must be in [1, 100000]");
  cfg.N = static_cast<int>(N);
  cfg.params = params_from_json(j["params"], cfg.N);
  cfg.initial = initial_from_json(j["initial"], cfg.N);
  if (!cfg.initial.is_normalized()) cfg.initial = normalize(cfg.initial);

  if (j.contains("amp_scan")) {
    const auto& a = j["amp_scan"];
    require_keys(a, "amp_scan", {"sweep", "points", "n_c", "n_d"}, {"points"});
    if (!a["points"].is_array() || a["points"].empty()) throw ConfigError("amp_scan.points: expected a non-empty array");
    for (std::size_t k = 0; k < a["points"].size(); ++k)
      require_keys(a["points"][k], "amp_scan.points[" + std::to_string(k) + "]",
                   {"label", "N", "gt", "gamma", "chi", "n_c", "n_d"});
  }
  if (j.contains("photon_dist"))
    require_keys(j["photon_dist"], "photon_dist", {"mass_tolerance", "max_total"});
  if (j.contains("measure")) require_keys(j["measure"], "measure", {"shots", "seed", "dump_posterior"});
  if (j.contains("wigner"))
    require_keys(j["wigner"], "wigner", {"n_theta", "n_phi", "state", "outcome", "twoJ"});
  if (j.contains("project")) require_keys(j["project"], "project", {"u", "m0", "outcome"});
  cfg.raw = j;
  return cfg;
}

inline json load_json_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::string text;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
  std::fclose(f);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

}  // namespace qnd
