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

// State diagnostics: J_z squeezing, the parity structure of the amplitude at
// gt = pi/2, cat-state fidelity, and the spin Wigner function
//   W(theta, phi) = sum_{L=0}^{2J} sum_{M=-L}^{L} rho_LM Y_LM(theta, phi).

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"
#include "qnd/numerics.hpp"
#include "qnd/parallel.hpp"
#include "qnd/povm.hpp"
#include "qnd/spin_state.hpp"

namespace qnd {

/// Density matrix of one J sector; rho(i, k) = <J, -J+i| rho |J, -J+k>.
class DensityMatrix {
 public:
  DensityMatrix(HalfInt J, std::vector<cplx> rho) : J_(J), rho_(std::move(rho)) {
    if (rho_.size() != dim() * dim()) throw DomainError("DensityMatrix: size must be (2J+1)^2");
  }

  HalfInt J() const { return J_; }
  std::size_t dim() const { return static_cast<std::size_t>(J_.twice() + 1); }
  cplx operator()(std::size_t i, std::size_t k) const { return rho_[i * dim() + k]; }
  cplx& operator()(std::size_t i, std::size_t k) { return rho_[i * dim() + k]; }
  HalfInt m_at(std::size_t i) const { return HalfInt::from_twice(-J_.twice() + 2 * static_cast<int>(i)); }

  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) t += (*this)(i, i);
    return t;
  }

  double purity() const {
    double acc = 0.0;
    for (const auto& x : rho_) acc += std::norm(x);
    return acc;
  }

  DensityMatrix mixed_with(const DensityMatrix& other, double alpha) const {
    if (other.J_ != J_) throw DomainError("DensityMatrix: mixing different sectors");
    std::vector<cplx> out(rho_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * rho_[i] + (1.0 - alpha) * other.rho_[i];
    return DensityMatrix(J_, std::move(out));
  }

 private:
  HalfInt J_;
  std::vector<cplx> rho_;
};

/// |psi_J><psi_J| of one sector, normalized within that sector.
inline DensityMatrix density_from_state(const CollectiveState& state, HalfInt J) {
  const Sector* sec = state.find(J);
  if (sec == nullptr) throw DomainError("density_from_state: no sector J=" + J.str());
  double n2 = 0.0;
  for (const auto& a : sec->amps) n2 += std::norm(a);
  if (!(n2 > 0.0)) throw DomainError("density_from_state: sector J=" + J.str() + " is empty");
  const std::size_t d = sec->dim();
  std::vector<cplx> rho(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) rho[i * d + k] = sec->amps[i] * std::conj(sec->amps[k]) / n2;
  return DensityMatrix(J, std::move(rho));
}

/// Multipole component
///   rho_LM = sum_{m,m'} (-1)^{J-m-M} <J m; J -m' | L M> rho_{m m'}.
inline cplx rho_lm(const DensityMatrix& rho, int L, int M) {
  const HalfInt J = rho.J();
  if (L < 0 || L > J.twice()) throw DomainError("rho_lm: need 0 <= L <= 2J");
  if (std::abs(M) > L) throw DomainError("rho_lm: need |M| <= L");
  cplx acc = 0.0;
  for (std::size_t i = 0; i < rho.dim(); ++i) {
    const HalfInt m = rho.m_at(i);
    const HalfInt mp = m - HalfInt(M);  // CG vanishes unless m - m' = M
    if (abs(mp) > J) continue;
    const std::size_t k = static_cast<std::size_t>((mp.twice() + J.twice()) / 2);
    // J - m is an integer for every m on the ladder of J.
    const int exponent = (J.twice() - m.twice()) / 2 - M;
    const double sign = (exponent % 2 == 0) ? 1.0 : -1.0;
    acc += sign * clebsch_gordan(J, m, J, -mp, HalfInt(L), HalfInt(M)) * rho(i, k);
  }
  return acc;
}

/// All rho_LM, indexed [L][M + L].
inline std::vector<std::vector<cplx>> multipoles(const DensityMatrix& rho) {
  const int Lmax = rho.J().twice();
  std::vector<std::vector<cplx>> out(static_cast<std::size_t>(Lmax + 1));
  parallel_for(out.size(), [&](std::size_t L) {
    const int l = static_cast<int>(L);
    out[L].resize(static_cast<std::size_t>(2 * l + 1));
    for (int M = -l; M <= l; ++M) out[L][static_cast<std::size_t>(M + l)] = rho_lm(rho, l, M);
  });
  return out;
}

struct WignerGrid {
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> values;  // row-major, values[i * phis.size() + j]
  double max_imag_residue = 0.0;

  double at(std::size_t i, std::size_t j) const { return values[i * phis.size() + j]; }
  double min() const;
  double max() const;
};

inline double WignerGrid::min() const {
  double v = values.empty() ? 0.0 : values.front();
  for (double x : values) v = std::min(v, x);
  return v;
}
inline double WignerGrid::max() const {
  double v = values.empty() ? 0.0 : values.front();
  for (double x : values) v = std::max(v, x);
  return v;
}

struct GridSpec {
  std::size_t n_theta = 181;  // theta in [0, pi], inclusive
  std::size_t n_phi = 361;    // phi in [0, 2 pi], inclusive
};

/// Spin Wigner function on an equiangular grid. Throws DomainError if the
/// imaginary part of the sum exceeds 1e-10 (scaled by max(1, |W|max)).
inline WignerGrid wigner(const DensityMatrix& rho, const GridSpec& spec = {}) {
  if (spec.n_theta < 1 || spec.n_phi < 1) throw DomainError("wigner: empty grid");
  const int Lmax = rho.J().twice();
  const auto mp = multipoles(rho);

  WignerGrid grid;
  auto linspace = [](std::size_t n, double hi) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? 0.0 : hi * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
  };
  grid.thetas = linspace(spec.n_theta, std::numbers::pi);
  grid.phis = linspace(spec.n_phi, 2.0 * std::numbers::pi);
  grid.values.assign(spec.n_theta * spec.n_phi, 0.0);
  std::vector<double> imag_row(spec.n_theta, 0.0);

  parallel_for(spec.n_theta, [&](std::size_t it) {
    const LegendreTable leg(Lmax, grid.thetas[it]);
    // f[M + Lmax] = sum_L rho_LM Pbar_L^M(theta) (-1)^M for M < 0 folded in.
    std::vector<cplx> f(static_cast<std::size_t>(2 * Lmax + 1), 0.0);
    for (int L = 0; L <= Lmax; ++L)
      for (int M = -L; M <= L; ++M) {
        const double sign = (M < 0 && (-M) % 2 != 0) ? -1.0 : 1.0;
        f[static_cast<std::size_t>(M + Lmax)] +=
            mp[static_cast<std::size_t>(L)][static_cast<std::size_t>(M + L)] * (sign * leg(L, std::abs(M)));
      }
    double imag_max = 0.0;
    for (std::size_t ip = 0; ip < spec.n_phi; ++ip) {
      cplx w = 0.0;
      for (int M = -Lmax; M <= Lmax; ++M)
        w += f[static_cast<std::size_t>(M + Lmax)] * std::polar(1.0, M * grid.phis[ip]);
      grid.values[it * spec.n_phi + ip] = w.real();
      imag_max = std::max(imag_max, std::fabs(w.imag()));
    }
    imag_row[it] = imag_max;
  });

  double scale = 1.0;
  for (double v : grid.values) scale = std::max(scale, std::fabs(v));
  for (double v : imag_row) grid.max_imag_residue = std::max(grid.max_imag_residue, v);
  if (grid.max_imag_residue > 1e-10 * scale)
    throw DomainError("wigner: imaginary residue " + std::to_string(grid.max_imag_residue) +
                      " exceeds tolerance; density matrix is not Hermitian");
  return grid;
}

struct SqueezingReport {
  double var_prior = 0.0;
  double var_post = 0.0;
  double ratio = 0.0;
};

inline SqueezingReport squeezing_report(const CollectiveState& prior, const CollectiveState& post) {
  SqueezingReport rep;
  rep.var_prior = moments(prior).var_jz;
  rep.var_post = moments(post).var_jz;
  rep.ratio = rep.var_post / rep.var_prior;
  return rep;
}

enum class ParityCase { kEven, kMod4Eq1, kMod4Eq3 };

inline const char* to_string(ParityCase c) {
  switch (c) {
    case ParityCase::kEven: return "even";
    case ParityCase::kMod4Eq1: return "mod4_eq_1";
    case ParityCase::kMod4Eq3: return "mod4_eq_3";
  }
  return "unknown";
}

struct ParityPattern {
  ParityCase parity_case = ParityCase::kEven;
  std::vector<int> support;
  double expected_log_amplitude = 0.0;     // case 1: -ln sqrt(n_c! n_d!); else ln(2^{n/2} / sqrt(n!))
  double max_support_log_error = 0.0;      // max |ln A - expected| on support
  double max_off_support_relative = 0.0;   // max A / expected off support
  bool vanishes_off_support = false;       // relative < 1e-12
  bool matches_on_support = false;         // log error < 1e-10
};

/// Classifies an outcome at gt = pi/2, eta = 0, phi_chigamma = 0 and checks
/// the exact amplitude against the closed-form support pattern:
///   n_c, n_d > 0 -> even m_z;  n_c = 0 -> m_z = 1 (mod 4);  n_d = 0 -> m_z = 3 (mod 4).
inline ParityPattern parity_pattern_check(const QndParams& p, const PhotonOutcome& o, int N) {
  constexpr double kTol = 1e-9;
  check_outcome(o);
  if (std::fabs(p.gt() - 0.5 * std::numbers::pi) > kTol || std::fabs(p.phi_chigamma()) > kTol ||
      std::fabs(p.eta()) > kTol)
    throw PreconditionError("parity_pattern_check: requires gt = pi/2, eta = 0, phi_chigamma = 0");
  if (N < 2 || N % 2 != 0) throw PreconditionError("parity_pattern_check: N must be even");
  if (o.total() == 0) throw PreconditionError("parity_pattern_check: needs at least one photon");

  ParityPattern out;
  if (o.n_c > 0 && o.n_d > 0) out.parity_case = ParityCase::kEven;
  else if (o.n_c == 0) out.parity_case = ParityCase::kMod4Eq1;
  else out.parity_case = ParityCase::kMod4Eq3;

  // cos 2phi vanishes on even m_z, so case 1 carries no power of 2.
  const double lf = 0.5 * (log_factorial(o.n_c) + log_factorial(o.n_d));
  out.expected_log_amplitude =
      out.parity_case == ParityCase::kEven ? -lf : 0.5 * static_cast<double>(o.total()) * std::numbers::ln2 - lf;
  const int J = N / 2;
  for (int m = -J; m <= J; ++m) {
    const int mod4 = ((m % 4) + 4) % 4;
    bool on = false;
    switch (out.parity_case) {
      case ParityCase::kEven: on = (m % 2 == 0); break;
      case ParityCase::kMod4Eq1: on = (mod4 == 1); break;
      case ParityCase::kMod4Eq3: on = (mod4 == 3); break;
    }
    const double la = log_amplitude(p, o, HalfInt(m));
    if (on) {
      out.support.push_back(m);
      out.max_support_log_error = std::max(out.max_support_log_error, std::fabs(la - out.expected_log_amplitude));
    } else {
      out.max_off_support_relative =
          std::max(out.max_off_support_relative, std::exp(la - out.expected_log_amplitude));
    }
  }
  out.vanishes_off_support = out.max_off_support_relative < 1e-12;
  out.matches_on_support = !out.support.empty() && out.max_support_log_error < 1e-10;
  return out;
}

/// Two-component cat of spin coherent states at theta = +-pi/2,
/// normalize(|pi/2>> + s |-pi/2>>). For even N the relative sign is
/// s = (-1)^{N/2}, which keeps exactly the even-m_z components of |pi/2>>;
/// for odd N, s = +1.
inline CollectiveState cat_state(int N) {
  const CollectiveState plus = coherent_state(N, 0.5 * std::numbers::pi);
  const CollectiveState minus = coherent_state(N, -0.5 * std::numbers::pi);
  const double s = (N % 2 == 0 && (N / 2) % 2 != 0) ? -1.0 : 1.0;
  Sector sec = plus.sectors().front();
  const auto& mi = minus.sectors().front().amps;
  for (std::size_t i = 0; i < sec.dim(); ++i) sec.amps[i] += s * mi[i];
  return CollectiveState({std::move(sec)}).normalized();
}

inline double cat_fidelity(const CollectiveState& state, int N) {
  if (state.sectors().size() != 1 || state.sectors().front().J != HalfInt::from_twice(N))
    throw DomainError("cat_fidelity: state must be the single sector J = N/2");
  if (!state.is_normalized()) throw PreconditionError("cat_fidelity: state is not normalized");
  return fidelity(state, cat_state(N));
}

}  // namespace qnd
