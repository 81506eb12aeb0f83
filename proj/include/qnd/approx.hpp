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

// Short-interaction-time Gaussian form of the measurement operator and its
// projective (sigma << 1) limit.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"
#include "qnd/povm.hpp"
#include "qnd/spin_state.hpp"

namespace qnd {

/// Gaussian envelope exp(log_prefactor - (m - m0)^2 / (2 sigma2)).
struct GaussianModel {
  double m0 = 0.0;
  double sigma2 = 0.0;
  double log_prefactor = 0.0;
};

namespace detail {

inline void require_gaussian_regime(const QndParams& p, const PhotonOutcome& o) {
  check_outcome(o);
  if (o.n_c < 1 || o.n_d < 1)
    throw DomainError("gaussian_model: needs n_c >= 1 and n_d >= 1");
  if (p.gt() == 0.0) throw DomainError("gaussian_model: gt = 0 gives no envelope");
  if (std::fabs(o.r()) >= p.cos2eta())
    throw DomainError("gaussian_model: |r| >= cos(2 eta), no Gaussian peak");
}

}  // namespace detail

inline GaussianModel gaussian_model(const QndParams& p, const PhotonOutcome& o) {
  detail::require_gaussian_regime(p, o);
  const double nc = static_cast<double>(o.n_c), nd = static_cast<double>(o.n_d);
  const double n = nc + nd;
  const double c = p.cos2eta();
  const double gt = p.gt();
  GaussianModel g;
  g.sigma2 = 1.0 / ((gt * gt / 8.0) * (n / (nc * nd)) * (n * n * c * c - (nc - nd) * (nc - nd)));
  g.m0 = (std::asin(o.r() / c) - p.phi_chigamma()) / gt;
  // Stirling form of the peak value: (2e/n)^{n/2} / (4 pi^2 n_c n_d)^{1/4}.
  g.log_prefactor = 0.5 * n * std::log(2.0 * std::numbers::e / n) -
                    0.25 * std::log(4.0 * std::numbers::pi * std::numbers::pi * nc * nd);
  return g;
}

inline double gaussian_amplitude(const GaussianModel& g, HalfInt m) {
  const double d = m.value() - g.m0;
  return std::exp(g.log_prefactor - d * d / (2.0 * g.sigma2));
}

/// All m in [-J, J] with cos(2 eta) sin(gt m + phi_chigamma) = r, ascending.
inline std::vector<double> peak_solutions(const QndParams& p, const PhotonOutcome& o, HalfInt J) {
  check_outcome(o);
  if (o.total() <= 0) throw PreconditionError("peak_solutions: needs n_c + n_d > 0");
  const double c = p.cos2eta();
  const double r = o.r();
  std::vector<double> out;
  if (std::fabs(r) > c || p.gt() == 0.0) return out;
  const double gt = p.gt(), ph = p.phi_chigamma(), Jv = J.value();
  const double s0 = std::asin(std::clamp(r / c, -1.0, 1.0));
  const double xa = gt * -Jv + ph, xb = gt * Jv + ph;
  const double xlo = std::min(xa, xb), xhi = std::max(xa, xb);
  const double two_pi = 2.0 * std::numbers::pi;
  const double eps = 1e-12 * std::max(1.0, Jv);
  for (double base : {s0, std::numbers::pi - s0}) {
    const auto kmin = static_cast<long>(std::floor((xlo - base) / two_pi)) - 1;
    const auto kmax = static_cast<long>(std::ceil((xhi - base) / two_pi)) + 1;
    for (long k = kmin; k <= kmax; ++k) {
      const double m = (base + two_pi * static_cast<double>(k) - ph) / gt;
      if (m >= -Jv - eps && m <= Jv + eps) out.push_back(std::clamp(m, -Jv, Jv));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::fabs(a - b) <= 1e-9; }),
            out.end());
  return out;
}

/// Gaussian-approximated M(n_c, n_d)|psi>, unnormalized, with the exact
/// detector phases.
inline CollectiveState approx_apply(const QndParams& p, const PhotonOutcome& o,
                                    const CollectiveState& state) {
  const GaussianModel g = gaussian_model(p, o);
  const double lpre = log_operator_prefactor(p, o);
  CollectiveState out = state;
  for (auto& sec : out.mutable_sectors())
    for (std::size_t i = 0; i < sec.dim(); ++i) {
      const HalfInt m = sec.m_at(i);
      const double d = m.value() - g.m0;
      sec.amps[i] *= std::exp(lpre + g.log_prefactor - d * d / (2.0 * g.sigma2)) *
                     measurement_phase(p, o, m);
    }
  out.set_norm_hint(out.norm_squared());
  return out;
}

struct ProjectiveParams {
  double u = 0.0;
  double v = 0.0;
  double m0 = 0.0;
  double xi_plus = 0.0;
  double xi_minus = 0.0;
  double xi_c = 0.0;
  double xi_d = 0.0;
};

/// Linearization of phi_c, phi_d around m0 (slopes in units of gt):
///   xi_c = tan(eta) / (2 cos^2 phi0 (1 + tan^2 eta tan^2 phi0))
///   xi_d = tan(eta) / (2 cos^2 phi0 (tan^2 phi0 + tan^2 eta))
/// evaluated in the pole-free forms
///   xi_c = tan(eta) / (2 (cos^2 phi0 + tan^2 eta sin^2 phi0))
///   xi_d = tan(eta) / (2 (sin^2 phi0 + tan^2 eta cos^2 phi0)),
/// which extend continuously to eta = 0.
namespace detail {

// (xi_c, xi_d) at phi; cleared of the cot(eta) and sec(phi) poles.
inline std::pair<double, double> phase_slopes(double eta, double phi) {
  const double te = std::tan(eta);
  const double c2 = std::cos(phi) * std::cos(phi), s2 = std::sin(phi) * std::sin(phi);
  return {0.5 * te / (c2 + te * te * s2), 0.5 * te / (s2 + te * te * c2)};
}

}  // namespace detail

inline ProjectiveParams projective_params(const QndParams& p, const PhotonOutcome& o) {
  const GaussianModel g = gaussian_model(p, o);
  ProjectiveParams pp;
  pp.u = o.u();
  pp.v = o.v();
  pp.m0 = g.m0;
  const double phi0 = 0.5 * p.gt() * g.m0 + 0.5 * p.phi_chigamma() + 0.25 * std::numbers::pi;
  const auto [xc, xd] = detail::phase_slopes(p.eta(), phi0);
  pp.xi_c = xc;
  pp.xi_d = xd;
  pp.xi_plus = 1.0 - pp.xi_d - pp.xi_c;
  pp.xi_minus = pp.xi_d - pp.xi_c;
  return pp;
}

/// Nearest allowed m_z to x on the ladder of J (integer ladder when J is an
/// integer, half-odd ladder otherwise); ties go toward zero.
inline HalfInt round_to_ladder(double x, HalfInt J) {
  const double shift = J.is_integer() ? 0.0 : 0.5;
  const double y = x - shift;
  double k = std::floor(y);
  const double frac = y - k;
  if (frac > 0.5) {
    k += 1.0;
  } else if (frac == 0.5) {
    // Candidates k + shift and k + 1 + shift; keep the one nearer zero.
    if (std::fabs(k + 1.0 + shift) < std::fabs(k + shift)) k += 1.0;
  }
  return HalfInt::from_twice(static_cast<int>(std::lround(2.0 * (k + shift))));
}

struct Projection {
  double amplitude = 0.0;  // e^{-(u - S/2)^2 / S} / (pi u)^{1/4}
  CollectiveState state;
};

/// Projective limit: collapses every sector with J >= |int(m0)| onto
/// m_z = int(m0) (rounded on each sector's ladder) and renormalizes.
inline Projection project(const QndParams& p, const CollectiveState& state, double u, double m0) {
  if (!state.is_normalized()) throw PreconditionError("project: state is not normalized");
  if (!(u > 0.0)) throw DomainError("project: u must be positive");
  const double S = p.intensity();
  Projection pr;
  const double d = u - 0.5 * S;
  pr.amplitude = std::exp(-d * d / S) / std::pow(std::numbers::pi * u, 0.25);

  CollectiveState out = state;
  for (auto& sec : out.mutable_sectors()) {
    const HalfInt target = round_to_ladder(m0, sec.J);
    for (std::size_t i = 0; i < sec.dim(); ++i)
      if (!(sec.contains(target) && sec.m_at(i) == target)) sec.amps[i] = 0.0;
  }
  if (!(out.norm_squared() > 0.0))
    throw DomainError("project: no sector has weight at m_z = int(" + std::to_string(m0) + ")");
  pr.state = out.normalized();
  return pr;
}

}  // namespace qnd
