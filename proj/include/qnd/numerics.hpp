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

// Log-domain special functions shared by every other module: factorials,
// binomials, Clebsch-Gordan coefficients and spherical harmonics.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "qnd/errors.hpp"
#include "qnd/half_int.hpp"

namespace qnd {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline constexpr int kLogFactorialTableSize = 4096;

inline const std::array<double, kLogFactorialTableSize>& log_factorial_table() {
  static const auto table = [] {
    std::array<double, kLogFactorialTableSize> t{};
    std::uint64_t exact = 1;
    long double acc = 0.0L;
    for (int n = 0; n < kLogFactorialTableSize; ++n) {
      if (n <= 20) {
        if (n > 1) exact *= static_cast<std::uint64_t>(n);
        acc = std::log(static_cast<long double>(exact));
      } else {
        acc += std::log(static_cast<long double>(n));
      }
      t[n] = static_cast<double>(acc);
    }
    return t;
  }();
  return table;
}

// ln Gamma(x) for x > 4096 by the Stirling series; next omitted term is
// below 1e-30 there.
inline double log_gamma_large(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

}  // namespace detail

/// ln(n!). Exact to double rounding for n <= 20; tabulated below 4096.
inline double log_factorial(std::int64_t n) {
  if (n < 0) throw DomainError("log_factorial: negative argument");
  if (n < detail::kLogFactorialTableSize) return detail::log_factorial_table()[n];
  return detail::log_gamma_large(static_cast<double>(n) + 1.0);
}

/// ln C(n, k); negative infinity when k lies outside [0, n].
inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (n < 0) throw DomainError("log_binomial: negative n");
  if (k < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// Base-raised-to-exponent in log space with the 0^0 = 1 convention.
/// Returns -inf for 0^p with p > 0.
inline double log_pow(double base, double exponent) {
  if (exponent == 0.0) return 0.0;
  if (base <= 0.0) return kNegInf;
  return exponent * std::log(base);
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | L M> in the Condon-Shortley
/// convention, evaluated with the Racah single sum. The prefactor is formed in
/// log space and the alternating sum relative to its first term; when that
/// sum cancels badly (large j) it is redone in exact integer arithmetic.
inline double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt L,
                             HalfInt M) {
  if (j1.twice() < 0 || j2.twice() < 0 || L.twice() < 0)
    throw DomainError("clebsch_gordan: negative angular momentum");
  if (!j1.same_parity(m1) || !j2.same_parity(m2) || !L.same_parity(M))
    throw DomainError("clebsch_gordan: projection parity does not match its angular momentum");
  if (abs(m1) > j1 || abs(m2) > j2 || abs(M) > L)
    throw DomainError("clebsch_gordan: |m| exceeds j");

  if (M != m1 + m2) return 0.0;
  // Perimeter parity is implied by the checks above once M = m1 + m2.
  const int a = j1.twice(), b = j2.twice(), c = L.twice();
  if (c > a + b || c < std::abs(a - b)) return 0.0;

  // Doubled quantities halve to integers below.
  const int j1pj2mL = (a + b - c) / 2;
  const int j1mj2pL = (a - b + c) / 2;
  const int mj1pj2pL = (-a + b + c) / 2;
  const int perim1 = (a + b + c) / 2 + 1;
  const int j1mm1 = (a - m1.twice()) / 2, j1pm1 = (a + m1.twice()) / 2;
  const int j2mm2 = (b - m2.twice()) / 2, j2pm2 = (b + m2.twice()) / 2;
  const int LmM = (c - M.twice()) / 2, LpM = (c + M.twice()) / 2;

  const double log_pref =
      0.5 * (std::log(static_cast<double>(c + 1)) + log_factorial(j1pj2mL) +
             log_factorial(j1mj2pL) + log_factorial(mj1pj2pL) - log_factorial(perim1) +
             log_factorial(LpM) + log_factorial(LmM) + log_factorial(j1mm1) +
             log_factorial(j1pm1) + log_factorial(j2mm2) + log_factorial(j2pm2));

  // Denominator factorial arguments: k, j1+j2-L-k, j1-m1-k, j2+m2-k,
  // L-j2+m1+k, L-j1-m2+k.
  const int off1 = (c - b + m1.twice()) / 2;
  const int off2 = (c - a - m2.twice()) / 2;
  const int kmin = std::max({0, -off1, -off2});
  const int kmax = std::min({j1pj2mL, j1mm1, j2pm2});
  if (kmin > kmax) return 0.0;

  const double log_first =
      -(log_factorial(kmin) + log_factorial(j1pj2mL - kmin) + log_factorial(j1mm1 - kmin) +
        log_factorial(j2pm2 - kmin) + log_factorial(off1 + kmin) + log_factorial(off2 + kmin));
  // Consecutive terms differ by an exact integer ratio -num/den.
  auto ratio_num = [&](int k) {
    return static_cast<std::int64_t>(j1pj2mL - k) * (j1mm1 - k) * (j2pm2 - k);
  };
  auto ratio_den = [&](int k) {
    return static_cast<std::int64_t>(k + 1) * (off1 + k + 1) * (off2 + k + 1);
  };

  long double term = 1.0L, sum = 1.0L, abs_sum = 1.0L;
  for (int k = kmin; k < kmax; ++k) {
    term *= -static_cast<long double>(ratio_num(k)) / static_cast<long double>(ratio_den(k));
    sum += term;
    abs_sum += std::fabs(term);
  }

  double rel;  // sum / first term
  if (sum != 0.0L && abs_sum / std::fabs(sum) < 1.0e3L) {
    rel = static_cast<double>(sum);
  } else {
    // Severe cancellation: Horner evaluation of 1 + r0(1 + r1(1 + ...)) in
    // exact integer arithmetic.
    using boost::multiprecision::cpp_int;
    cpp_int num = 1, den = 1;
    for (int k = kmax - 1; k >= kmin; --k) {
      const cpp_int q = ratio_den(k);
      num = q * den - ratio_num(k) * num;
      den *= q;
    }
    if (num == 0) return 0.0;
    using boost::multiprecision::cpp_bin_float_100;
    rel = static_cast<double>(cpp_bin_float_100(num) / cpp_bin_float_100(den));
  }
  if (rel == 0.0) return 0.0;
  const double sign = (rel < 0) != (kmin % 2 != 0) ? -1.0 : 1.0;
  return sign * std::exp(log_pref + log_first + std::log(std::fabs(rel)));
}

/// Fully normalized associated Legendre values
/// Pbar_L^M(x) = sqrt((2L+1)/(4 pi) (L-M)!/(L+M)!) P_L^M(x), with the
/// Condon-Shortley phase, for 0 <= M <= L <= lmax.
class LegendreTable {
 public:
  LegendreTable(int lmax, double theta) : lmax_(lmax), values_(size_for(lmax), 0.0) {
    if (lmax < 0) throw DomainError("LegendreTable: negative lmax");
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    double pmm = std::sqrt(1.0 / (4.0 * std::numbers::pi));
    for (int m = 0; m <= lmax; ++m) {
      if (m > 0) pmm *= -s * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      at(m, m) = pmm;
      if (m + 1 <= lmax) at(m + 1, m) = x * std::sqrt(2.0 * m + 3.0) * pmm;
      for (int l = m + 2; l <= lmax; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) /
                                   (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
      }
    }
  }

  int lmax() const { return lmax_; }
  double operator()(int l, int m) const { return values_[index(l, m)]; }

 private:
  static std::size_t size_for(int lmax) {
    return lmax < 0 ? 0 : static_cast<std::size_t>((lmax + 1) * (lmax + 2) / 2);
  }
  static std::size_t index(int l, int m) { return static_cast<std::size_t>(l * (l + 1) / 2 + m); }
  double& at(int l, int m) { return values_[index(l, m)]; }

  int lmax_;
  std::vector<double> values_;
};

/// Orthonormal spherical harmonic Y_LM(theta, phi), Condon-Shortley phase.
inline std::complex<double> spherical_harmonic(int L, int M, double theta, double phi) {
  if (L < 0 || std::abs(M) > L) throw DomainError("spherical_harmonic: need L >= 0, |M| <= L");
  const LegendreTable table(L, theta);
  const int am = std::abs(M);
  std::complex<double> y = table(L, am) * std::polar(1.0, am * phi);
  if (M < 0) {
    y = std::conj(y);
    if (am % 2 != 0) y = -y;
  }
  return y;
}

}  // namespace qnd
