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

// Exact measurement operator for a QND measurement of J_z with two coherent
// light modes, in its spectral (J_z-diagonal) form:
//
//   M(n_c, n_d) = e^{-S/2} (S/2)^{(n_c+n_d)/2}
//                 sum_{J, m} e^{i(n_c phi_c(m) + n_d phi_d(m))} A(m) |J,m><J,m|
//
// with S = |gamma|^2 + |chi|^2. Everything factorial-bearing is evaluated in
// log space and exponentiated last.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"
#include "qnd/numerics.hpp"
#include "qnd/parallel.hpp"
#include "qnd/spin_state.hpp"

namespace qnd {

/// Light amplitudes and interaction phase g t.
class QndParams {
 public:
  QndParams(cplx gamma, cplx chi, double gt) : gamma_(gamma), chi_(chi), gt_(gt) {
    if (!(std::abs(gamma) + std::abs(chi) > 0.0))
      throw PreconditionError("QndParams: |gamma| + |chi| must be positive");
    if (!std::isfinite(gt) || !std::isfinite(std::abs(gamma)) || !std::isfinite(std::abs(chi)))
      throw PreconditionError("QndParams: non-finite parameter");
  }

  cplx gamma() const { return gamma_; }
  cplx chi() const { return chi_; }
  double gt() const { return gt_; }

  /// Mean total photon number |gamma|^2 + |chi|^2.
  double intensity() const { return std::norm(gamma_) + std::norm(chi_); }

  /// tan(eta) = (|chi| - |gamma|) / (|chi| + |gamma|), eta in (-pi/4, pi/4).
  double eta() const {
    const double g = std::abs(gamma_), c = std::abs(chi_);
    return std::atan((c - g) / (c + g));
  }

  /// cos(2 eta) = 2|gamma||chi| / (|gamma|^2 + |chi|^2).
  double cos2eta() const { return 2.0 * std::abs(gamma_) * std::abs(chi_) / intensity(); }

  /// arg(chi) - arg(gamma) reduced to (-pi, pi].
  double phi_chigamma() const {
    double d = std::remainder(std::arg(chi_) - std::arg(gamma_), 2.0 * std::numbers::pi);
    if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
    return d;
  }

 private:
  cplx gamma_;
  cplx chi_;
  double gt_;
};

struct PhotonOutcome {
  std::int64_t n_c = 0;
  std::int64_t n_d = 0;

  std::int64_t total() const { return n_c + n_d; }
  double u() const { return 0.5 * static_cast<double>(n_d + n_c); }
  double v() const { return 0.5 * static_cast<double>(n_d - n_c); }
  /// (n_d - n_c) / (n_c + n_d); undefined for the empty outcome.
  double r() const {
    if (total() <= 0) throw DomainError("PhotonOutcome::r: no photons detected");
    return static_cast<double>(n_d - n_c) / static_cast<double>(total());
  }

  friend bool operator==(const PhotonOutcome&, const PhotonOutcome&) = default;
};

inline void check_outcome(const PhotonOutcome& o) {
  if (o.n_c < 0 || o.n_d < 0) throw DomainError("photon counts must be non-negative");
}

/// phi(m) = gt m / 2 + phi_chigamma / 2 + pi / 4.
inline double phase_phi(const QndParams& p, HalfInt m) {
  return 0.5 * p.gt() * m.value() + 0.5 * p.phi_chigamma() + 0.25 * std::numbers::pi;
}

namespace detail {

// arctan(tan(eta) tan(x)) continued across the poles of tan(x): the exact
// argument of cos(eta) cos(x) + i sin(eta) sin(x), unwrapped so that it
// tracks +x (eta >= 0) or -x (eta < 0) to within pi/2.
inline double unwrapped_phase(double eta, double x) {
  const double a = std::atan2(std::sin(eta) * std::sin(x), std::cos(eta) * std::cos(x));
  const double track = eta < 0.0 ? -x : x;
  return a + 2.0 * std::numbers::pi * std::round((track - a) / (2.0 * std::numbers::pi));
}

// ln(1 + cos2eta cos2x) and ln(1 - cos2eta cos2x), written as sums of
// squares so that neither base suffers cancellation near zero.
inline double log_base_c(double eta, double x) {
  const double ce = std::cos(eta), se = std::sin(eta), cx = std::cos(x), sx = std::sin(x);
  return std::log(2.0 * (ce * ce * cx * cx + se * se * sx * sx));
}
inline double log_base_d(double eta, double x) {
  const double ce = std::cos(eta), se = std::sin(eta), cx = std::cos(x), sx = std::sin(x);
  return std::log(2.0 * (ce * ce * sx * sx + se * se * cx * cx));
}

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

}  // namespace detail

struct DetectorPhases {
  double phi_c = 0.0;
  double phi_d = 0.0;
};

/// phi_c = arctan(tan eta tan phi), phi_d = arctan(cot eta tan phi) - pi/2,
/// each on the branch that follows the quadrant of phi. At eta = 0 this
/// gives phi_c in {0, pi} and phi_d in {0, -pi}: the sign of cos(phi),
/// sin(phi) carried by the light amplitudes.
inline DetectorPhases detector_phases(const QndParams& p, HalfInt m) {
  const double eta = p.eta();
  const double phi = phase_phi(p, m);
  return {detail::unwrapped_phase(eta, phi),
          detail::unwrapped_phase(eta, phi - 0.5 * std::numbers::pi)};
}

/// Global phase removed from the spectral form: the operator built directly
/// from the light amplitudes equals e^{i (n_c + n_d) Phi} times the spectral
/// form, with Phi = arg(gamma) + phi_chigamma / 2 + pi / 4.
inline double spectral_global_phase(const QndParams& p) {
  return std::arg(p.gamma()) + 0.5 * p.phi_chigamma() + 0.25 * std::numbers::pi;
}

/// ln A_{n_c n_d}(m), -inf where A vanishes.
inline double log_amplitude(const QndParams& p, const PhotonOutcome& o, HalfInt m) {
  check_outcome(o);
  const double eta = p.eta();
  const double phi = phase_phi(p, m);
  double l = -0.5 * (log_factorial(o.n_c) + log_factorial(o.n_d));
  if (o.n_c > 0) l += 0.5 * static_cast<double>(o.n_c) * detail::log_base_c(eta, phi);
  if (o.n_d > 0) l += 0.5 * static_cast<double>(o.n_d) * detail::log_base_d(eta, phi);
  return std::isnan(l) ? kNegInf : l;
}

/// A_{n_c n_d}(m) = (1 + cos2eta cos2phi)^{n_c/2} (1 - cos2eta cos2phi)^{n_d/2}
///                  / sqrt(n_c! n_d!), with 0^0 = 1.
inline double amplitude(const QndParams& p, const PhotonOutcome& o, HalfInt m) {
  return std::exp(log_amplitude(p, o, m));
}

/// ln of the m-independent prefactor e^{-S/2} (S/2)^{(n_c+n_d)/2}.
inline double log_operator_prefactor(const QndParams& p, const PhotonOutcome& o) {
  const double S = p.intensity();
  return -0.5 * S + 0.5 * static_cast<double>(o.total()) * std::log(0.5 * S);
}

/// Phase factor e^{i(n_c phi_c + n_d phi_d)}.
inline cplx measurement_phase(const QndParams& p, const PhotonOutcome& o, HalfInt m) {
  const DetectorPhases ph = detector_phases(p, m);
  const double total = std::fmod(static_cast<double>(o.n_c) * ph.phi_c, 2.0 * std::numbers::pi) +
                       std::fmod(static_cast<double>(o.n_d) * ph.phi_d, 2.0 * std::numbers::pi);
  return std::polar(1.0, total);
}

/// Diagonal matrix element <J,m| M(n_c,n_d) |J,m> of the spectral form.
inline cplx operator_element(const QndParams& p, const PhotonOutcome& o, HalfInt m) {
  const double lm = log_operator_prefactor(p, o) + log_amplitude(p, o, m);
  if (lm == kNegInf) return 0.0;
  return std::exp(lm) * measurement_phase(p, o, m);
}

namespace detail {

// ln of <psi| M^dag M |psi> for any (not necessarily normalized) state.
inline double log_expectation_MdagM(const QndParams& p, const PhotonOutcome& o,
                                    const CollectiveState& state) {
  std::vector<double> terms;
  const double lpre = 2.0 * log_operator_prefactor(p, o);
  for (const auto& sec : state.sectors()) {
    for (std::size_t i = 0; i < sec.dim(); ++i) {
      const double w = std::norm(sec.amps[i]);
      if (w == 0.0) continue;
      terms.push_back(lpre + 2.0 * log_amplitude(p, o, sec.m_at(i)) + std::log(w));
    }
  }
  return log_sum_exp(terms);
}

}  // namespace detail

/// M(n_c, n_d)|psi>, unnormalized. Diagonal in (J, m); norm_hint carries
/// the outcome weight <psi|M^dag M|psi> computed in log space.
inline CollectiveState apply(const QndParams& p, const PhotonOutcome& o,
                             const CollectiveState& state) {
  check_outcome(o);
  CollectiveState out = state;
  for (auto& sec : out.mutable_sectors())
    for (std::size_t i = 0; i < sec.dim(); ++i)
      if (sec.amps[i] != 0.0) sec.amps[i] *= operator_element(p, o, sec.m_at(i));
  out.set_norm_hint(std::exp(detail::log_expectation_MdagM(p, o, state)));
  return out;
}

inline double log_outcome_probability(const QndParams& p, const PhotonOutcome& o,
                                      const CollectiveState& state) {
  check_outcome(o);
  if (!state.is_normalized())
    throw PreconditionError("outcome_probability: state is not normalized");
  return detail::log_expectation_MdagM(p, o, state);
}

/// p(n_c, n_d) = <psi| M^dag M |psi>.
inline double outcome_probability(const QndParams& p, const PhotonOutcome& o,
                                  const CollectiveState& state) {
  return std::exp(log_outcome_probability(p, o, state));
}

/// Normalized post-measurement state. Magnitudes are rescaled in log space
/// before exponentiation so outcomes far in the tails still resolve.
inline CollectiveState posterior(const QndParams& p, const PhotonOutcome& o,
                                 const CollectiveState& state) {
  check_outcome(o);
  double lmax = kNegInf;
  std::vector<std::vector<double>> logs;
  for (const auto& sec : state.sectors()) {
    auto& row = logs.emplace_back(sec.dim(), kNegInf);
    for (std::size_t i = 0; i < sec.dim(); ++i) {
      const double w = std::abs(sec.amps[i]);
      if (w == 0.0) continue;
      row[i] = log_amplitude(p, o, sec.m_at(i)) + std::log(w);
      lmax = std::max(lmax, row[i]);
    }
  }
  if (lmax == kNegInf)
    throw DomainError("posterior: outcome (" + std::to_string(o.n_c) + ", " +
                      std::to_string(o.n_d) + ") has zero probability for this state");
  CollectiveState out = state;
  auto& secs = out.mutable_sectors();
  for (std::size_t s = 0; s < secs.size(); ++s) {
    auto& sec = secs[s];
    for (std::size_t i = 0; i < sec.dim(); ++i) {
      if (logs[s][i] == kNegInf) {
        sec.amps[i] = 0.0;
        continue;
      }
      const cplx unit = sec.amps[i] / std::abs(sec.amps[i]);
      sec.amps[i] = std::exp(logs[s][i] - lmax) * unit * measurement_phase(p, o, sec.m_at(i));
    }
  }
  return out.normalized();
}

struct OutcomeEntry {
  PhotonOutcome outcome;
  double probability = 0.0;
  double log_probability = kNegInf;
};

/// Enumerated outcome probabilities, ordered by ascending n_c + n_d and then
/// ascending n_c. Every (n_c, n_d) with min_total <= n_c + n_d <= cutoff_total
/// is present.
struct OutcomeDistribution {
  std::vector<OutcomeEntry> entries;
  std::int64_t min_total = 0;
  std::int64_t cutoff_total = 0;
  double captured_mass = 0.0;
};

struct DistributionOptions {
  double mass_tolerance = 1e-9;
  // Largest admissible n_c + n_d; negative selects 4 S + 100.
  std::int64_t max_total = -1;
};

namespace detail {

// Per-m_z weight and log bases, merged across sectors.
struct MzTerm {
  double log_weight;
  double log_c;
  double log_d;
};

inline std::vector<MzTerm> mz_terms(const QndParams& p, const CollectiveState& state) {
  std::map<int, double> weights;  // keyed by 2 m_z
  for (const auto& sec : state.sectors())
    for (std::size_t i = 0; i < sec.dim(); ++i)
      if (sec.amps[i] != 0.0) weights[sec.m_at(i).twice()] += std::norm(sec.amps[i]);
  std::vector<MzTerm> out;
  const double eta = p.eta();
  for (const auto& [twice_m, w] : weights) {
    const double phi = phase_phi(p, HalfInt::from_twice(twice_m));
    out.push_back({std::log(w), log_base_c(eta, phi), log_base_d(eta, phi)});
  }
  return out;
}

inline double log_cell(const QndParams& p, const std::vector<MzTerm>& terms, std::int64_t nc,
                       std::int64_t nd, std::vector<double>& scratch) {
  scratch.clear();
  for (const auto& t : terms) {
    double l = t.log_weight;
    if (nc > 0) l += static_cast<double>(nc) * t.log_c;
    if (nd > 0) l += static_cast<double>(nd) * t.log_d;
    if (!std::isnan(l)) scratch.push_back(l);
  }
  const double S = p.intensity();
  return log_sum_exp(scratch) - S + static_cast<double>(nc + nd) * std::log(0.5 * S) -
         log_factorial(nc) - log_factorial(nd);
}

}  // namespace detail

/// Enumerates p(n_c, n_d) over a window of total photon numbers centred on
/// S = |gamma|^2 + |chi|^2, widened in steps of sqrt(S) until the captured
/// probability reaches 1 - mass_tolerance. Throws ResourceError if the window
/// would have to pass max_total.
inline OutcomeDistribution outcome_distribution(const QndParams& p, const CollectiveState& state,
                                                const DistributionOptions& opts = {}) {
  if (!(opts.mass_tolerance > 0.0 && opts.mass_tolerance < 1.0))
    throw PreconditionError("outcome_distribution: mass_tolerance must lie in (0, 1)");
  if (!state.is_normalized())
    throw PreconditionError("outcome_distribution: state is not normalized");

  const double mu = p.intensity();
  const double sigma = std::sqrt(mu);
  const std::int64_t cap =
      opts.max_total >= 0 ? opts.max_total : static_cast<std::int64_t>(std::floor(4.0 * mu + 100.0));
  const std::int64_t step = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(sigma)));
  const auto terms = detail::mz_terms(p, state);

  // rows[n] holds log p(n_c, n - n_c) for n_c = 0..n.
  std::map<std::int64_t, std::vector<double>> rows;
  auto fill = [&](std::int64_t lo, std::int64_t hi) {
    std::vector<std::int64_t> todo;
    for (std::int64_t n = lo; n <= hi; ++n)
      if (!rows.count(n)) todo.push_back(n);
    std::vector<std::vector<double>> computed(todo.size());
    parallel_for(todo.size(), [&](std::size_t k) {
      const std::int64_t n = todo[k];
      std::vector<double> scratch;
      auto& row = computed[k];
      row.resize(static_cast<std::size_t>(n + 1));
      for (std::int64_t nc = 0; nc <= n; ++nc) row[nc] = detail::log_cell(p, terms, nc, n - nc, scratch);
    });
    for (std::size_t k = 0; k < todo.size(); ++k) rows[todo[k]] = std::move(computed[k]);
  };
  auto mass_of = [&]() {
    double m = 0.0;
    for (const auto& [n, row] : rows)
      for (double l : row) m += std::exp(l);
    return m;
  };

  std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(mu - 6.0 * sigma)));
  std::int64_t hi = std::min<std::int64_t>(cap, static_cast<std::int64_t>(std::ceil(mu + 6.0 * sigma)));
  fill(lo, hi);
  double mass = mass_of();
  while (mass < 1.0 - opts.mass_tolerance) {
    if (lo == 0 && hi >= cap)
      throw ResourceError("outcome_distribution: total-photon cap " + std::to_string(cap) +
                              " reached with captured mass " + std::to_string(mass),
                          mass);
    lo = std::max<std::int64_t>(0, lo - step);
    hi = std::min<std::int64_t>(cap, hi + step);
    fill(lo, hi);
    mass = mass_of();
  }

  OutcomeDistribution dist;
  dist.min_total = lo;
  dist.cutoff_total = hi;
  for (const auto& [n, row] : rows)
    for (std::int64_t nc = 0; nc <= n; ++nc) {
      const double l = row[static_cast<std::size_t>(nc)];
      dist.entries.push_back({{nc, n - nc}, std::exp(l), l});
    }
  dist.captured_mass = mass;
  return dist;
}

/// Inverse-CDF draw over the renormalized entries. The generator is
/// std::mt19937_64 seeded with `seed`; the uniform variate is the top 53
/// bits of one output scaled by 2^-53, so draws are identical on every
/// conforming platform.
inline PhotonOutcome sample_outcome(const OutcomeDistribution& dist, std::uint64_t seed) {
  if (dist.entries.empty() || !(dist.captured_mass > 0.0))
    throw DomainError("sample_outcome: empty distribution");
  double total = 0.0;
  for (const auto& e : dist.entries) total += e.probability;
  if (!(total > 0.0)) throw DomainError("sample_outcome: distribution has no mass");
  std::mt19937_64 gen(seed);
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53 * total;
  double acc = 0.0;
  const OutcomeEntry* last_positive = nullptr;
  for (const auto& e : dist.entries) {
    if (e.probability <= 0.0) continue;
    last_positive = &e;
    acc += e.probability;
    if (u < acc) return e.outcome;
  }
  return last_positive->outcome;
}

/// SplitMix64 step; derives independent per-shot seeds from one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace qnd
