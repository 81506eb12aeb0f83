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

// Collective spin states over |J, m_z> sectors: Dicke and spin coherent
// states, inner products and J_x / J_z moments.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"
#include "qnd/numerics.hpp"

namespace qnd {

using cplx = std::complex<double>;

/// Amplitudes of one total-spin sector; amps[i] belongs to m_z = -J + i.
struct Sector {
  HalfInt J;
  std::vector<cplx> amps;

  std::size_t dim() const { return amps.size(); }
  HalfInt m_at(std::size_t i) const { return HalfInt::from_twice(-J.twice() + 2 * static_cast<int>(i)); }
  bool contains(HalfInt m) const { return J.same_parity(m) && abs(m) <= J; }
  std::size_t index_of(HalfInt m) const {
    return static_cast<std::size_t>((m.twice() + J.twice()) / 2);
  }
};

/// Pure state as a direct sum of J sectors, sorted by ascending J.
/// norm_hint records the squared norm the producer computed (1 for
/// normalized states); it survives underflow of individual amplitudes.
class CollectiveState {
 public:
  CollectiveState() = default;

  explicit CollectiveState(std::vector<Sector> sectors) : sectors_(std::move(sectors)) {
    std::sort(sectors_.begin(), sectors_.end(),
              [](const Sector& a, const Sector& b) { return a.J < b.J; });
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
      const Sector& sec = sectors_[s];
      if (sec.J.twice() < 0) throw DomainError("CollectiveState: negative J");
      if (sec.amps.size() != static_cast<std::size_t>(sec.J.twice() + 1))
        throw DomainError("CollectiveState: sector J=" + sec.J.str() + " needs 2J+1 amplitudes");
      if (s > 0 && sectors_[s - 1].J == sec.J)
        throw DomainError("CollectiveState: duplicate sector J=" + sec.J.str());
    }
    norm_hint_ = norm_squared();
  }

  const std::vector<Sector>& sectors() const { return sectors_; }
  std::vector<Sector>& mutable_sectors() { return sectors_; }

  const Sector* find(HalfInt J) const {
    for (const auto& s : sectors_)
      if (s.J == J) return &s;
    return nullptr;
  }

  // Largest J present; the "N = 2J" used by normalized variances.
  HalfInt max_J() const { return sectors_.empty() ? HalfInt{} : sectors_.back().J; }

  double norm_squared() const {
    double acc = 0.0;
    for (const auto& s : sectors_)
      for (const auto& a : s.amps) acc += std::norm(a);
    return acc;
  }

  double norm_hint() const { return norm_hint_; }
  void set_norm_hint(double v) { norm_hint_ = v; }

  bool is_normalized(double tol = 1e-9) const { return std::abs(norm_squared() - 1.0) <= tol; }

  CollectiveState normalized() const {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DomainError("normalize: state has zero norm");
    CollectiveState out = *this;
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& s : out.sectors_)
      for (auto& a : s.amps) a *= inv;
    out.norm_hint_ = 1.0;
    return out;
  }

 private:
  std::vector<Sector> sectors_;
  double norm_hint_ = 0.0;
};

inline CollectiveState normalize(const CollectiveState& state) { return state.normalized(); }

inline CollectiveState dicke_state(HalfInt J, HalfInt m) {
  if (J.twice() < 0) throw DomainError("dicke_state: negative J");
  Sector sec{J, std::vector<cplx>(static_cast<std::size_t>(J.twice() + 1))};
  if (!sec.contains(m)) throw DomainError("dicke_state: m=" + m.str() + " not in J=" + J.str());
  sec.amps[sec.index_of(m)] = 1.0;
  return CollectiveState({std::move(sec)});
}

/// Spin coherent state |theta>> of N spin-1/2 particles in the xz plane,
/// sqrt(C(N, N/2+m)) cos^{N/2+m}(theta/2) sin^{N/2-m}(theta/2).
inline CollectiveState coherent_state(int N, double theta) {
  if (N < 1) throw DomainError("coherent_state: N must be >= 1");
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double lc = std::log(std::fabs(c));
  const double ls = std::log(std::fabs(s));
  Sector sec{HalfInt::from_twice(N), std::vector<cplx>(static_cast<std::size_t>(N + 1))};
  for (int k = 0; k <= N; ++k) {  // k = N/2 + m_z
    double logmag = 0.5 * log_binomial(N, k);
    logmag += (k == 0) ? 0.0 : k * lc;
    logmag += (N - k == 0) ? 0.0 : (N - k) * ls;
    double sign = 1.0;
    if (c < 0 && k % 2 != 0) sign = -sign;
    if (s < 0 && (N - k) % 2 != 0) sign = -sign;
    sec.amps[static_cast<std::size_t>(k)] = sign * std::exp(logmag);
  }
  return CollectiveState({std::move(sec)});
}

/// Sum over shared sectors of conj(a) * b.
inline cplx overlap(const CollectiveState& a, const CollectiveState& b) {
  cplx acc = 0.0;
  for (const auto& sa : a.sectors()) {
    const Sector* sb = b.find(sa.J);
    if (sb == nullptr) continue;
    for (std::size_t i = 0; i < sa.dim(); ++i) acc += std::conj(sa.amps[i]) * sb->amps[i];
  }
  return acc;
}

inline double fidelity(const CollectiveState& a, const CollectiveState& b) {
  return std::norm(overlap(a, b));
}

struct SpinMoments {
  double mean_jx = 0.0;
  double mean_jz = 0.0;
  double mean_jz2 = 0.0;
  double var_jz = 0.0;
  double normalized_var = 0.0;  // var_jz / N^2 with N = 2 J_max
};

inline SpinMoments moments(const CollectiveState& state) {
  if (!state.is_normalized())
    throw PreconditionError("moments: state is not normalized (|psi|^2 = " +
                            std::to_string(state.norm_squared()) + ")");
  SpinMoments mo;
  for (const auto& sec : state.sectors())
    for (std::size_t i = 0; i < sec.dim(); ++i) mo.mean_jz += std::norm(sec.amps[i]) * sec.m_at(i).value();
  double central = 0.0;
  for (const auto& sec : state.sectors()) {
    const double J = sec.J.value();
    for (std::size_t i = 0; i < sec.dim(); ++i) {
      const double m = sec.m_at(i).value();
      const double p = std::norm(sec.amps[i]);
      mo.mean_jz2 += p * m * m;
      central += p * (m - mo.mean_jz) * (m - mo.mean_jz);
      if (i + 1 < sec.dim()) {
        // <m+1| J_+ |m> = sqrt(J(J+1) - m(m+1)); <J_x> = Re <J_+>.
        const double ladder = std::sqrt(std::max(0.0, J * (J + 1.0) - m * (m + 1.0)));
        mo.mean_jx += ladder * std::real(std::conj(sec.amps[i + 1]) * sec.amps[i]);
      }
    }
  }
  mo.var_jz = central;
  const double N = static_cast<double>(state.max_J().twice());
  mo.normalized_var = N > 0 ? mo.var_jz / (N * N) : 0.0;
  return mo;
}

}  // namespace qnd
