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

// Direct evaluation of the measurement operator from the light amplitudes,
//
//   <J,m| M |J,m> = e^{-S/2} / sqrt(n_c! n_d!)
//                   ((gamma e^{-i gt m/2} + i chi e^{i gt m/2}) / sqrt 2)^{n_c}
//                   ((i gamma e^{-i gt m/2} + chi e^{i gt m/2}) / sqrt 2)^{n_d},
//
// with no trigonometric rewriting. It shares no code with povm.hpp beyond
// log_factorial and serves as the cross-check for the spectral form's
// phases and magnitudes.

#include <cmath>
#include <complex>

#include "qnd/half_int.hpp"
#include "qnd/numerics.hpp"
#include "qnd/povm.hpp"

namespace qnd::reference {

/// Complex logarithm of the direct matrix element; real part -inf when it
/// vanishes.
inline std::complex<double> log_direct_element(const QndParams& p, const PhotonOutcome& o,
                                               HalfInt m) {
  using C = std::complex<double>;
  const double half = 0.5 * p.gt() * m.value();
  const C I(0.0, 1.0);
  const C em = std::polar(1.0, -half), ep = std::polar(1.0, half);
  const C alpha = (p.gamma() * em + I * p.chi() * ep) / std::sqrt(2.0);
  const C beta = (I * p.gamma() * em + p.chi() * ep) / std::sqrt(2.0);
  C acc(-0.5 * p.intensity() - 0.5 * (log_factorial(o.n_c) + log_factorial(o.n_d)), 0.0);
  if (o.n_c > 0) {
    if (alpha == 0.0) return {kNegInf, 0.0};
    acc += static_cast<double>(o.n_c) * std::log(alpha);
  }
  if (o.n_d > 0) {
    if (beta == 0.0) return {kNegInf, 0.0};
    acc += static_cast<double>(o.n_d) * std::log(beta);
  }
  return acc;
}

inline std::complex<double> direct_element(const QndParams& p, const PhotonOutcome& o, HalfInt m) {
  const auto l = log_direct_element(p, o, m);
  if (l.real() == kNegInf) return 0.0;
  return std::exp(l);
}

}  // namespace qnd::reference
