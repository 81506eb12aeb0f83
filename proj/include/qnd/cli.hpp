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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnd/analysis.hpp"
#include "qnd/approx.hpp"
#include "qnd/io.hpp"
#include "qnd/numerics.hpp"
#include "qnd/povm.hpp"
#include "qnd/reference.hpp"
#include "qnd/spin_state.hpp"

namespace qnd::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kResourceCap = 3, kDomainError = 4 };

struct Options {
  std::string command;
  std::string config;
  std::string out;
  std::string format;  // empty: per-command default
  std::optional<std::uint64_t> seed;
  std::optional<double> mass_tol;
};

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw ConfigError("failed writing '" + path.string() + "'");
}

inline void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) {
    out << content;
  } else {
    write_file(o.out, content);
  }
}

inline std::string format_or(const Options& o, const char* fallback) { return o.format.empty() ? fallback : o.format; }

inline const json& section(const ExperimentConfig& cfg, const char* name) {
  if (!cfg.raw.contains(name)) throw ConfigError(std::string("config: missing section '") + name + "'");
  return cfg.raw[name];
}

inline json opt(const json& obj, const char* key, json fallback) {
  return obj.contains(key) ? obj[key] : fallback;
}

inline double mass_tolerance(const ExperimentConfig& cfg, const Options& o) {
  if (o.mass_tol) return *o.mass_tol;
  if (cfg.raw.contains("photon_dist") && cfg.raw["photon_dist"].contains("mass_tolerance"))
    return real_field(cfg.raw["photon_dist"]["mass_tolerance"], cfg.N, "photon_dist.mass_tolerance");
  return 1e-9;
}

inline std::string describe(const QndParams& p) {
  return "gamma=" + fmt(p.gamma().real()) + (p.gamma().imag() != 0.0 ? "+" + fmt(p.gamma().imag()) + "i" : "") +
         " chi=" + fmt(p.chi().real()) + (p.chi().imag() != 0.0 ? "+" + fmt(p.chi().imag()) + "i" : "") +
         " gt=" + fmt(p.gt());
}

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// Peak-map estimate of m_z from a count ratio; NaN off the map.
inline double peak_map(const QndParams& p, const PhotonOutcome& o) {
  if (o.total() == 0 || p.gt() == 0.0) return kUndefined;
  const double x = o.r() / p.cos2eta();
  if (std::fabs(x) > 1.0) return kUndefined;
  return (std::asin(x) - p.phi_chigamma()) / p.gt();
}

// NaN marks an undefined field: null in JSON, empty in CSV.
inline json opt_json(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
inline std::string opt_csv(double v) { return std::isnan(v) ? "" : fmt(v); }

}  // namespace detail

// ---- amp-scan -------------------------------------------------------------

struct AmpRun {
  std::string label;
  int N = 0;
  QndParams params{1.0, 1.0, 0.0};
  PhotonOutcome outcome;
  std::vector<HalfInt> m;
  std::vector<double> log_a;
  std::optional<GaussianModel> gauss;
  std::string gauss_note;
  std::vector<double> peaks_exact;
  std::vector<double> peak_solutions;
};

inline std::vector<AmpRun> amp_scan_runs(const ExperimentConfig& cfg) {
  const json& a = detail::section(cfg, "amp_scan");
  std::vector<AmpRun> runs;
  for (std::size_t k = 0; k < a["points"].size(); ++k) {
    const json& pt = a["points"][k];
    const std::string where = "amp_scan.points[" + std::to_string(k) + "]";
    AmpRun run;
    run.label = pt.contains("label") ? pt["label"].get<std::string>() : std::to_string(k);
    run.N = pt.contains("N") ? static_cast<int>(int_field(pt["N"], where + ".N")) : cfg.N;
    if (run.N < 1) throw ConfigError(where + ".N: must be positive");
    json pj = cfg.raw["params"];
    for (const char* key : {"gt", "gamma", "chi"})
      if (pt.contains(key)) pj[key] = pt[key];
    run.params = params_from_json(pj, run.N, where);
    const json nc = pt.contains("n_c") ? pt["n_c"] : detail::opt(a, "n_c", nullptr);
    const json nd = pt.contains("n_d") ? pt["n_d"] : detail::opt(a, "n_d", nullptr);
    if (nc.is_null() || nd.is_null()) throw ConfigError(where + ": n_c and n_d are required");
    run.outcome = outcome_from_json(json::array({nc, nd}), where);
    const HalfInt J = HalfInt::from_twice(run.N);
    for (HalfInt m = -J; m <= J; m += HalfInt(1)) {
      run.m.push_back(m);
      run.log_a.push_back(log_amplitude(run.params, run.outcome, m));
    }
    const std::size_t n = run.m.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double v = run.log_a[i];
      if (v == kNegInf) continue;
      const bool left = i == 0 || v > run.log_a[i - 1];
      const bool right = i + 1 == n || v > run.log_a[i + 1];
      if (left && right && n > 1) run.peaks_exact.push_back(run.m[i].value());
    }
    try {
      run.gauss = gaussian_model(run.params, run.outcome);
    } catch (const DomainError& e) {
      run.gauss_note = e.what();
    }
    if (run.outcome.total() > 0) run.peak_solutions = peak_solutions(run.params, run.outcome, J);
    runs.push_back(std::move(run));
  }
  return runs;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
  return s;
}

inline int run_amp_scan(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  const auto runs = amp_scan_runs(cfg);
  const std::string sweep = cfg.raw["amp_scan"].value("sweep", "custom");
  const std::string format = detail::format_or(o, "csv");
  if (format == "json") {
    json doc = {{"header", format_header()}, {"command", "amp-scan"}, {"sweep", sweep}, {"runs", json::array()}};
    for (const auto& r : runs) {
      double top = *std::max_element(r.log_a.begin(), r.log_a.end());
      json jr = {{"label", r.label}, {"N", r.N}, {"params", params_to_json(r.params)},
                 {"n_c", r.outcome.n_c}, {"n_d", r.outcome.n_d},
                 {"peaks_exact", r.peaks_exact}, {"peak_solutions", r.peak_solutions}};
      json m = json::array(), ae = json::array(), an = json::array(), ag = json::array();
      for (std::size_t i = 0; i < r.m.size(); ++i) {
        m.push_back(r.m[i].value());
        ae.push_back(std::exp(r.log_a[i]));
        an.push_back(std::exp(r.log_a[i] - top));
        ag.push_back(r.gauss ? json(gaussian_amplitude(*r.gauss, r.m[i])) : json(nullptr));
      }
      jr["m_z"] = std::move(m);
      jr["A_exact"] = std::move(ae);
      jr["A_exact_normalized"] = std::move(an);
      jr["A_gauss"] = std::move(ag);
      jr["gaussian"] = r.gauss ? json{{"m0", r.gauss->m0}, {"sigma2", r.gauss->sigma2}} : json(nullptr);
      doc["runs"].push_back(std::move(jr));
    }
    detail::emit(o, doc.dump(1) + "\n", out);
    return kOk;
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    const double top = *std::max_element(r.log_a.begin(), r.log_a.end());
    std::ostringstream s;
    s << "# " << format_header() << "\n";
    s << "# amp-scan sweep=" << sweep << " label=" << r.label << " N=" << r.N << " " << detail::describe(r.params)
      << " n_c=" << r.outcome.n_c << " n_d=" << r.outcome.n_d << "\n";
    s << "m_z,m_over_J,A_exact,A_exact_normalized,A_gauss,A_gauss_normalized\n";
    const double J = 0.5 * r.N;
    for (std::size_t i = 0; i < r.m.size(); ++i) {
      s << fmt(r.m[i].value()) << "," << fmt(r.m[i].value() / J) << "," << fmt(std::exp(r.log_a[i])) << ","
        << fmt(std::exp(r.log_a[i] - top)) << ",";
      if (r.gauss) {
        const double d = r.m[i].value() - r.gauss->m0;
        s << fmt(gaussian_amplitude(*r.gauss, r.m[i])) << "," << fmt(std::exp(-d * d / (2.0 * r.gauss->sigma2)));
      } else {
        s << ",";
      }
      s << "\n";
    }
    s << "# peaks_exact=" << join(r.peaks_exact) << "\n";
    s << "# peak_solutions=" << join(r.peak_solutions) << "\n";
    if (r.gauss)
      s << "# gaussian m0=" << fmt(r.gauss->m0) << " sigma2=" << fmt(r.gauss->sigma2) << "\n";
    else
      s << "# gaussian undefined: " << r.gauss_note << "\n";
    if (o.out.empty()) {
      if (k) out << "\n";
      out << s.str();
    } else {
      char name[32];
      std::snprintf(name, sizeof name, "amp_scan_%03zu.csv", k);
      detail::write_file(std::filesystem::path(o.out) / name, s.str());
    }
  }
  return kOk;
}

// ---- photon-dist ------------------------------------------------------------

inline int run_photon_dist(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  DistributionOptions dopt;
  dopt.mass_tolerance = detail::mass_tolerance(cfg, o);
  if (cfg.raw.contains("photon_dist") && cfg.raw["photon_dist"].contains("max_total"))
    dopt.max_total = int_field(cfg.raw["photon_dist"]["max_total"], "photon_dist.max_total");
  const auto dist = outcome_distribution(cfg.params, cfg.initial, dopt);
  if (detail::format_or(o, "csv") == "json") {
    json e = json::array();
    for (const auto& x : dist.entries) e.push_back({x.outcome.n_c, x.outcome.n_d, x.probability});
    json doc = {{"header", format_header()}, {"command", "photon-dist"}, {"N", cfg.N},
                {"params", params_to_json(cfg.params)}, {"mass_tolerance", dopt.mass_tolerance},
                {"columns", {"n_c", "n_d", "p"}}, {"entries", std::move(e)},
                {"captured_mass", dist.captured_mass}, {"min_total", dist.min_total},
                {"cutoff_total", dist.cutoff_total}};
    detail::emit(o, doc.dump(1) + "\n", out);
    return kOk;
  }
  std::ostringstream s;
  s << "# " << format_header() << "\n";
  s << "# photon-dist N=" << cfg.N << " " << detail::describe(cfg.params) << " mass_tolerance=" << fmt(dopt.mass_tolerance)
    << "\n";
  s << "n_c,n_d,p\n";
  for (const auto& x : dist.entries) s << x.outcome.n_c << "," << x.outcome.n_d << "," << fmt(x.probability) << "\n";
  s << "# captured_mass=" << fmt(dist.captured_mass) << " min_total=" << dist.min_total
    << " cutoff_total=" << dist.cutoff_total << "\n";
  detail::emit(o, s.str(), out);
  return kOk;
}

// ---- measure ----------------------------------------------------------------

inline int run_measure(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  const json m = cfg.raw.contains("measure") ? cfg.raw["measure"] : json::object();
  std::uint64_t seed = 0;
  if (o.seed) {
    seed = *o.seed;
  } else if (m.contains("seed")) {
    if (!m["seed"].is_number_unsigned()) throw ConfigError("measure.seed: expected a non-negative integer");
    seed = m["seed"].get<std::uint64_t>();
  } else {
    throw ConfigError("measure: a seed is required (--seed or measure.seed)");
  }
  const auto shots = m.contains("shots") ? int_field(m["shots"], "measure.shots") : 1000;
  if (shots < 1) throw ConfigError("measure.shots: must be >= 1");
  const bool dump = m.value("dump_posterior", false);

  DistributionOptions dopt;
  dopt.mass_tolerance = detail::mass_tolerance(cfg, o);
  const auto dist = outcome_distribution(cfg.params, cfg.initial, dopt);
  const auto prior = moments(cfg.initial);
  const bool csv = detail::format_or(o, "json") == "csv";

  std::ostringstream s;
  if (csv) {
    s << "# " << format_header() << "\n";
    s << "# measure N=" << cfg.N << " " << detail::describe(cfg.params) << " seed=" << seed << " shots=" << shots
      << " captured_mass=" << fmt(dist.captured_mass) << "\n";
    s << "shot,seed,n_c,n_d,r,log_prob,m0,mean_jz,var_jz,mean_jx,squeezing_ratio\n";
  } else {
    s << json{{"header", format_header()}, {"command", "measure"}, {"N", cfg.N},
              {"params", params_to_json(cfg.params)}, {"seed", seed}, {"shots", shots},
              {"captured_mass", dist.captured_mass}}
             .dump()
      << "\n";
  }
  for (std::int64_t i = 0; i < shots; ++i) {
    const std::uint64_t shot_seed = splitmix64(seed + static_cast<std::uint64_t>(i));
    const PhotonOutcome oc = sample_outcome(dist, shot_seed);
    CollectiveState post;
    try {
      post = posterior(cfg.params, oc, cfg.initial);
    } catch (const DomainError& e) {
      throw DomainError("measure: shot " + std::to_string(i) + " (seed " + std::to_string(shot_seed) +
                        ") drew n_c=" + std::to_string(oc.n_c) + ", n_d=" + std::to_string(oc.n_d) +
                        " with vanishing posterior norm: " + e.what());
    }
    const double lp = log_outcome_probability(cfg.params, oc, cfg.initial);
    const auto pm = moments(post);
    const double r = oc.total() > 0 ? oc.r() : detail::kUndefined;
    const double ratio = prior.var_jz > 0.0 ? pm.var_jz / prior.var_jz : detail::kUndefined;
    const auto m0 = detail::peak_map(cfg.params, oc);
    if (csv) {
      s << i << "," << shot_seed << "," << oc.n_c << "," << oc.n_d << "," << detail::opt_csv(r) << "," << fmt(lp)
        << "," << detail::opt_csv(m0) << "," << fmt(pm.mean_jz) << "," << fmt(pm.var_jz) << "," << fmt(pm.mean_jx)
        << "," << detail::opt_csv(ratio) << "\n";
    } else {
      json rec = {{"shot", i}, {"seed", shot_seed}, {"n_c", oc.n_c}, {"n_d", oc.n_d},
                  {"r", detail::opt_json(r)}, {"log_prob", lp}, {"m0", detail::opt_json(m0)},
                  {"mean_jz", pm.mean_jz}, {"var_jz", pm.var_jz}, {"mean_jx", pm.mean_jx},
                  {"squeezing_ratio", detail::opt_json(ratio)},
                  {"posterior_ref", dump ? json("shot-" + std::to_string(i)) : json(nullptr)}};
      if (dump) rec["posterior"] = state_to_json(post);
      s << rec.dump() << "\n";
    }
  }
  detail::emit(o, s.str(), out);
  return kOk;
}

// ---- wigner -----------------------------------------------------------------

inline int run_wigner(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  const json w = cfg.raw.contains("wigner") ? cfg.raw["wigner"] : json::object();
  GridSpec spec;
  if (w.contains("n_theta")) spec.n_theta = static_cast<std::size_t>(std::max<std::int64_t>(0, int_field(w["n_theta"], "wigner.n_theta")));
  if (w.contains("n_phi")) spec.n_phi = static_cast<std::size_t>(std::max<std::int64_t>(0, int_field(w["n_phi"], "wigner.n_phi")));
  if (spec.n_theta < 1 || spec.n_phi < 1) throw ConfigError("wigner: grid sizes must be >= 1");
  const std::string which = w.value("state", "prior");
  CollectiveState state = cfg.initial;
  if (which == "posterior") {
    if (!w.contains("outcome")) throw ConfigError("wigner: state 'posterior' needs an outcome");
    state = posterior(cfg.params, outcome_from_json(w["outcome"], "wigner.outcome"), cfg.initial);
  } else if (which != "prior") {
    throw ConfigError("wigner.state: expected 'prior' or 'posterior'");
  }
  const HalfInt J = w.contains("twoJ") ? HalfInt::from_twice(static_cast<int>(int_field(w["twoJ"], "wigner.twoJ")))
                                       : state.max_J();
  const auto grid = wigner(density_from_state(state, J), spec);
  if (detail::format_or(o, "csv") == "json") {
    json doc = {{"header", format_header()}, {"command", "wigner"}, {"state", which}, {"twoJ", J.twice()},
                {"n_theta", spec.n_theta}, {"n_phi", spec.n_phi}, {"min", grid.min()}, {"max", grid.max()},
                {"max_imag_residue", grid.max_imag_residue}, {"thetas", grid.thetas}, {"phis", grid.phis},
                {"values", grid.values}};
    detail::emit(o, doc.dump() + "\n", out);
    return kOk;
  }
  std::ostringstream s;
  s << "# " << format_header() << "\n";
  s << "# wigner state=" << which << " twoJ=" << J.twice() << " n_theta=" << spec.n_theta << " n_phi=" << spec.n_phi
    << " min=" << fmt(grid.min()) << " max=" << fmt(grid.max()) << "\n";
  s << "theta,phi,w\n";
  for (std::size_t it = 0; it < spec.n_theta; ++it)
    for (std::size_t ip = 0; ip < spec.n_phi; ++ip)
      s << fmt(grid.thetas[it]) << "," << fmt(grid.phis[ip]) << "," << fmt(grid.at(it, ip)) << "\n";
  detail::emit(o, s.str(), out);
  return kOk;
}

// ---- project ----------------------------------------------------------------

inline int run_project(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  const json& pj = detail::section(cfg, "project");
  std::optional<ProjectiveParams> pp;
  if (pj.contains("outcome")) pp = projective_params(cfg.params, outcome_from_json(pj["outcome"], "project.outcome"));
  double u = 0.0, m0 = 0.0;
  if (pj.contains("u")) u = real_field(pj["u"], cfg.N, "project.u");
  else if (pp) u = pp->u;
  else throw ConfigError("project: needs 'u' or 'outcome'");
  if (pj.contains("m0")) m0 = real_field(pj["m0"], cfg.N, "project.m0");
  else if (pp) m0 = pp->m0;
  else throw ConfigError("project: needs 'm0' or 'outcome'");

  const auto pr = project(cfg.params, cfg.initial, u, m0);
  const auto pm = moments(pr.state);
  json targets = json::array();
  for (const auto& sec : cfg.initial.sectors()) {
    const HalfInt t = round_to_ladder(m0, sec.J);
    if (sec.contains(t)) targets.push_back({{"twoJ", sec.J.twice()}, {"m_z", t.value()}});
  }
  json rep = {{"header", format_header()}, {"command", "project"}, {"u", u}, {"m0", m0},
              {"amplitude", pr.amplitude}, {"weight", fidelity(pr.state, cfg.initial)},
              {"targets", targets}, {"mean_jz", pm.mean_jz}, {"var_jz", pm.var_jz}};
  if (pp)
    rep["projective"] = {{"u", pp->u}, {"v", pp->v}, {"m0", pp->m0}, {"xi_plus", pp->xi_plus},
                         {"xi_minus", pp->xi_minus}, {"xi_c", pp->xi_c}, {"xi_d", pp->xi_d}};
  rep["state"] = state_to_json(pr.state);
  if (detail::format_or(o, "json") == "json") {
    detail::emit(o, rep.dump(1) + "\n", out);
    return kOk;
  }
  std::ostringstream s;
  s << "# " << format_header() << "\n" << "key,value\n";
  for (const char* k : {"u", "m0", "amplitude", "weight", "mean_jz", "var_jz"})
    s << k << "," << fmt(rep[k].get<double>()) << "\n";
  if (pp)
    for (const char* k : {"v", "xi_plus", "xi_minus", "xi_c", "xi_d"})
      s << k << "," << fmt(rep["projective"][k].get<double>()) << "\n";
  detail::emit(o, s.str(), out);
  return kOk;
}

// ---- validate ---------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<CheckResult> invariant_suite(const std::optional<ExperimentConfig>& cfg) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gauss;
  auto random_state = [&](std::vector<int> tjs) {
    std::vector<Sector> secs;
    for (int tj : tjs) {
      Sector s{HalfInt::from_twice(tj), std::vector<cplx>(static_cast<std::size_t>(tj + 1))};
      for (auto& a : s.amps) a = {gauss(rng), gauss(rng)};
      secs.push_back(std::move(s));
    }
    return CollectiveState(std::move(secs)).normalized();
  };
  const QndParams p = cfg ? cfg->params : QndParams(std::polar(5.1, 0.2), 5.0, std::numbers::pi / 20);
  const CollectiveState psi = cfg ? cfg->initial : random_state({6, 11});

  {  // Poisson row sums encode sum M^dag M = 1.
    const auto dist = outcome_distribution(p, psi, {1e-10});
    std::vector<double> rows(static_cast<std::size_t>(dist.cutoff_total + 1), 0.0);
    for (const auto& e : dist.entries) rows[static_cast<std::size_t>(e.outcome.total())] += e.probability;
    double worst = 0.0;
    const double S = p.intensity();
    for (std::int64_t n = dist.min_total; n <= dist.cutoff_total; ++n)
      worst = std::max(worst, std::fabs(rows[static_cast<std::size_t>(n)] -
                                        std::exp(-S + n * std::log(S) - log_factorial(n))));
    out.push_back({"unity_decomposition", worst < 1e-12 && dist.captured_mass >= 1.0 - 1e-10,
                   "max row error " + fmt(worst) + ", captured " + fmt(dist.captured_mass)});
  }
  {
    std::uniform_real_distribution<double> mag(0.1, 6.0), ang(-std::numbers::pi, std::numbers::pi), g(0.0, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 300; ++t) {
      const QndParams q(std::polar(mag(rng), ang(rng)), std::polar(mag(rng), ang(rng)), g(rng));
      const int n = static_cast<int>(mag(rng) * 10);
      const PhotonOutcome oc{n / 3, n - n / 3};
      const HalfInt m = HalfInt::from_twice(static_cast<int>(ang(rng) * 20));
      const cplx d = reference::log_direct_element(q, oc, m);
      const double lm = log_operator_prefactor(q, oc) + log_amplitude(q, oc, m);
      const double ph = std::arg(measurement_phase(q, oc, m)) + static_cast<double>(n) * spectral_global_phase(q);
      worst = std::max({worst, std::fabs(lm - d.real()), std::fabs(std::remainder(ph - d.imag(), 2 * std::numbers::pi))});
    }
    out.push_back({"spectral_vs_direct", worst < 1e-9, "max log deviation " + fmt(worst)});
  }
  {
    double worst = 0.0;
    for (int m = -5; m <= 5; ++m) {
      const auto d = dicke_state(HalfInt(5), HalfInt(m));
      worst = std::max(worst, 1.0 - fidelity(posterior(p, {7, 9}, d), d));
    }
    out.push_back({"dicke_invariance", worst < 1e-12, "max infidelity " + fmt(worst)});
  }
  {
    double worst = 0.0;
    for (int tj = 0; tj <= 10; ++tj) {
      const auto s = random_state({tj});
      const auto rho = density_from_state(s, HalfInt::from_twice(tj));
      const auto mp = multipoles(rho);
      const HalfInt J = rho.J();
      for (std::size_t i = 0; i < rho.dim(); ++i)
        for (std::size_t k = 0; k < rho.dim(); ++k) {
          cplx back = 0.0;
          for (int L = 0; L <= tj; ++L)
            for (int M = -L; M <= L; ++M) {
              const int e = (J.twice() - rho.m_at(i).twice()) / 2 - M;
              back += (e % 2 == 0 ? 1.0 : -1.0) *
                      clebsch_gordan(J, rho.m_at(i), J, -rho.m_at(k), HalfInt(L), HalfInt(M)) *
                      mp[static_cast<std::size_t>(L)][static_cast<std::size_t>(M + L)];
            }
          worst = std::max(worst, std::abs(back - rho(i, k)));
        }
    }
    out.push_back({"rho_lm_round_trip", worst < 1e-8, "max element error " + fmt(worst)});
  }
  {
    const auto a = density_from_state(random_state({6}), HalfInt(3));
    const auto b = density_from_state(random_state({6}), HalfInt(3));
    const GridSpec g{19, 37};
    const auto wa = wigner(a, g), wb = wigner(b, g), wm = wigner(a.mixed_with(b, 0.25), g);
    double worst = 0.0;
    for (std::size_t i = 0; i < wm.values.size(); ++i)
      worst = std::max(worst, std::fabs(wm.values[i] - 0.25 * wa.values[i] - 0.75 * wb.values[i]));
    out.push_back({"wigner_linearity", worst < 1e-10, "max deviation " + fmt(worst)});
  }
  {
    double worst = 0.0;
    const HalfInt j(3);
    for (int L = 0; L <= 6; ++L)
      for (int Lp = 0; Lp <= 6; ++Lp)
        for (int M = -std::min(L, Lp); M <= std::min(L, Lp); ++M) {
          double s = 0.0;
          for (int m1 = -3; m1 <= 3; ++m1) {
            const int m2 = M - m1;
            if (std::abs(m2) > 3) continue;
            s += clebsch_gordan(j, HalfInt(m1), j, HalfInt(m2), HalfInt(L), HalfInt(M)) *
                 clebsch_gordan(j, HalfInt(m1), j, HalfInt(m2), HalfInt(Lp), HalfInt(M));
          }
          worst = std::max(worst, std::fabs(s - (L == Lp ? 1.0 : 0.0)));
        }
    out.push_back({"clebsch_gordan_orthogonality", worst < 1e-12, "max deviation " + fmt(worst)});
  }
  {
    const auto dist = outcome_distribution(p, psi, {1e-9});
    bool same = true;
    for (std::uint64_t s = 0; s < 100; ++s) same = same && sample_outcome(dist, s) == sample_outcome(dist, s);
    out.push_back({"sampling_determinism", same, "100 seeds replayed"});
  }
  return out;
}

inline int run_validate(const std::optional<ExperimentConfig>& cfg, const Options& o, std::ostream& out) {
  const auto results = invariant_suite(cfg);
  bool all = true;
  std::ostringstream s;
  const bool json_out = detail::format_or(o, "csv") == "json";
  if (!json_out) s << "# " << format_header() << "\ncheck,status,detail\n";
  json arr = json::array();
  for (const auto& r : results) {
    all = all && r.pass;
    if (json_out) arr.push_back({{"check", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    else s << r.name << "," << (r.pass ? "PASS" : "FAIL") << "," << r.detail << "\n";
  }
  if (json_out) s << json{{"header", format_header()}, {"command", "validate"}, {"checks", arr}, {"pass", all}}.dump(1) << "\n";
  detail::emit(o, s.str(), out);
  return all ? kOk : kCheckFailed;
}

// ---- entry point --------------------------------------------------------------

/// Parses argv, runs one subcommand and maps failures onto exit codes.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact QND-measurement POVM simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"amp-scan", "amplitude function A(m_z) over sweeps of parameter sets"},
      {"photon-dist", "joint photon-count distribution p(n_c, n_d)"},
      {"measure", "Monte-Carlo measurement shots with posterior moments"},
      {"wigner", "spin Wigner function of the prior or a posterior"},
      {"project", "projective-limit collapse at (u, m0)"},
      {"validate", "run the invariant suite (optionally on a config)"}};
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    auto* c = sub->add_option("--config", o.config, "experiment config (JSON)");
    if (std::string(name) != "validate") c->required();
    sub->add_option("--out", o.out, "output path (default stdout; a directory for amp-scan csv)");
    sub->add_option("--seed", o.seed, "RNG seed (u64)");
    sub->add_option("--mass-tol", o.mass_tol, "uncaptured probability mass tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->callback([&o, name = std::string(name)] { o.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    std::optional<ExperimentConfig> cfg;
    if (!o.config.empty()) cfg = parse_config(load_json_file(o.config));
    if (o.command == "validate") return run_validate(cfg, o, out);
    if (o.command == "amp-scan") return run_amp_scan(*cfg, o, out);
    if (o.command == "photon-dist") return run_photon_dist(*cfg, o, out);
    if (o.command == "measure") return run_measure(*cfg, o, out);
    if (o.command == "wigner") return run_wigner(*cfg, o, out);
    if (o.command == "project") return run_project(*cfg, o, out);
    err << "error: unknown command\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ResourceError& e) {
    err << "resource cap: " << e.what() << " (captured mass " << fmt(e.captured_mass()) << ")\n";
    return kResourceCap;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kDomainError;
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << "\n";
    return kDomainError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace qnd::cli
