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

#include "qnd/analysis.hpp"

#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace qnd {
namespace {

constexpr double kPi = std::numbers::pi;

DensityMatrix random_density(std::mt19937_64& rng, int twice_j, int rank) {
  const std::size_t d = static_cast<std::size_t>(twice_j + 1);
  std::vector<cplx> rho(d * d);
  for (int r = 0; r < rank; ++r) {
    const auto psi = oracle::random_state(rng, {twice_j});
    const auto& a = psi.sectors().front().amps;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) rho[i * d + k] += a[i] * std::conj(a[k]) / static_cast<double>(rank);
  }
  return DensityMatrix(HalfInt::from_twice(twice_j), std::move(rho));
}

DensityMatrix maximally_mixed(int twice_j) {
  const std::size_t d = static_cast<std::size_t>(twice_j + 1);
  std::vector<cplx> rho(d * d);
  for (std::size_t i = 0; i < d; ++i) rho[i * d + i] = 1.0 / static_cast<double>(d);
  return DensityMatrix(HalfInt::from_twice(twice_j), std::move(rho));
}

// Straight double sum with the independent Clebsch-Gordan oracle.
cplx brute_rho_lm(const DensityMatrix& rho, int L, int M) {
  const HalfInt J = rho.J();
  cplx acc = 0.0;
  for (std::size_t i = 0; i < rho.dim(); ++i)
    for (std::size_t k = 0; k < rho.dim(); ++k) {
      const HalfInt m = rho.m_at(i), mp = rho.m_at(k);
      const double e = J.value() - m.value() - M;
      const double sign = std::fmod(std::fabs(e), 2.0) == 0.0 ? 1.0 : -1.0;
      acc += sign * oracle::clebsch_gordan(J, m, J, -mp, HalfInt(L), HalfInt(M)) * rho(i, k);
    }
  return acc;
}

TEST(DensityFromState, PureProjector) {
  std::mt19937_64 rng(1);
  const auto psi = oracle::random_state(rng, {4, 7});
  const auto rho = density_from_state(psi, HalfInt::from_twice(7));
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
  EXPECT_NEAR(rho.purity(), 1.0, 1e-14);
  for (std::size_t i = 0; i < rho.dim(); ++i)
    for (std::size_t k = 0; k < rho.dim(); ++k) EXPECT_NEAR(std::abs(rho(i, k) - std::conj(rho(k, i))), 0.0, 1e-16);
  EXPECT_THROW(density_from_state(psi, HalfInt(3)), DomainError);
  EXPECT_LT(rho.mixed_with(maximally_mixed(7), 0.5).purity(), 1.0);
  EXPECT_THROW(rho.mixed_with(maximally_mixed(4), 0.5), DomainError);
}

TEST(RhoLM, MaximallyMixedHasOnlyMonopole) {
  for (int tj = 1; tj <= 10; ++tj) {
    const auto rho = maximally_mixed(tj);
    EXPECT_NEAR(std::abs(rho_lm(rho, 0, 0)), 1.0 / std::sqrt(tj + 1.0), 1e-14);
    for (int L = 1; L <= tj; ++L)
      for (int M = -L; M <= L; ++M) ASSERT_NEAR(std::abs(rho_lm(rho, L, M)), 0.0, 1e-14) << tj << " " << L << " " << M;
  }
}

TEST(RhoLM, AgreesWithBruteForce) {
  std::mt19937_64 rng(2);
  for (int tj = 1; tj <= 6; ++tj) {
    const auto rho = random_density(rng, tj, 2);
    for (int L = 0; L <= tj; ++L)
      for (int M = -L; M <= L; ++M)
        ASSERT_NEAR(std::abs(rho_lm(rho, L, M) - brute_rho_lm(rho, L, M)), 0.0, 1e-12) << tj << " " << L << " " << M;
  }
}

TEST(RhoLM, HermitianSymmetry) {
  std::mt19937_64 rng(3);
  const auto rho = random_density(rng, 9, 3);
  for (int L = 0; L <= 9; ++L)
    for (int M = 0; M <= L; ++M) {
      const cplx want = (M % 2 == 0 ? 1.0 : -1.0) * std::conj(rho_lm(rho, L, M));
      ASSERT_NEAR(std::abs(rho_lm(rho, L, -M) - want), 0.0, 1e-13);
    }
}

TEST(RhoLM, RoundTrip) {
  std::mt19937_64 rng(4);
  for (int tj = 0; tj <= 10; ++tj) {
    const auto rho = random_density(rng, tj, 3);
    const auto mp = multipoles(rho);
    const HalfInt J = rho.J();
    for (std::size_t i = 0; i < rho.dim(); ++i)
      for (std::size_t k = 0; k < rho.dim(); ++k) {
        const HalfInt m = rho.m_at(i), mq = rho.m_at(k);
        cplx back = 0.0;
        for (int L = 0; L <= tj; ++L)
          for (int M = -L; M <= L; ++M) {
            const double e = J.value() - m.value() - M;
            const double sign = std::fmod(std::fabs(e), 2.0) == 0.0 ? 1.0 : -1.0;
            back += sign * oracle::clebsch_gordan(J, m, J, -mq, HalfInt(L), HalfInt(M)) *
                    mp[static_cast<std::size_t>(L)][static_cast<std::size_t>(M + L)];
          }
        ASSERT_NEAR(std::abs(back - rho(i, k)), 0.0, 1e-8) << tj;
      }
  }
}

TEST(RhoLM, RejectsBadIndices) {
  const auto rho = maximally_mixed(2);
  EXPECT_THROW(rho_lm(rho, 3, 0), DomainError);
  EXPECT_THROW(rho_lm(rho, 1, 2), DomainError);
  EXPECT_THROW(rho_lm(rho, -1, 0), DomainError);
}

TEST(Wigner, GridLayout) {
  const auto w = wigner(maximally_mixed(2));
  ASSERT_EQ(w.thetas.size(), 181u);
  ASSERT_EQ(w.phis.size(), 361u);
  ASSERT_EQ(w.values.size(), 181u * 361u);
  EXPECT_EQ(w.thetas.front(), 0.0);
  EXPECT_NEAR(w.thetas.back(), kPi, 1e-15);
  EXPECT_NEAR(w.phis.back(), 2 * kPi, 1e-15);
  EXPECT_NEAR(w.thetas[90], kPi / 2, 1e-15);
  // Maximally mixed: W = rho_00 Y_00, flat.
  EXPECT_NEAR(w.min(), w.max(), 1e-14);
  EXPECT_NEAR(w.max(), 1.0 / std::sqrt(3.0) / std::sqrt(4 * kPi), 1e-14);
}

TEST(Wigner, MatchesSphericalHarmonicSum) {
  std::mt19937_64 rng(5);
  for (int tj : {1, 4, 7}) {
    const auto rho = random_density(rng, tj, 2);
    const auto w = wigner(rho, {13, 17});
    for (std::size_t it = 0; it < w.thetas.size(); it += 3)
      for (std::size_t ip = 0; ip < w.phis.size(); ip += 4) {
        cplx want = 0.0;
        for (int L = 0; L <= tj; ++L)
          for (int M = -L; M <= L; ++M)
            want += brute_rho_lm(rho, L, M) * boost::math::spherical_harmonic(L, M, w.thetas[it], w.phis[ip]);
        EXPECT_NEAR(w.at(it, ip), want.real(), 1e-12);
        EXPECT_NEAR(want.imag(), 0.0, 1e-12);
      }
  }
}

TEST(Wigner, Linearity) {
  std::mt19937_64 rng(6);
  const auto a = random_density(rng, 6, 1), b = random_density(rng, 6, 2);
  const GridSpec g{31, 41};
  const auto wa = wigner(a, g), wb = wigner(b, g), wm = wigner(a.mixed_with(b, 0.3), g);
  for (std::size_t i = 0; i < wm.values.size(); ++i)
    ASSERT_NEAR(wm.values[i], 0.3 * wa.values[i] + 0.7 * wb.values[i], 1e-13);
}

TEST(Wigner, TopDickeIsAzimuthalAndPolar) {
  const auto rho = density_from_state(dicke_state(HalfInt(5), HalfInt(5)), HalfInt(5));
  const auto w = wigner(rho, {91, 73});
  for (std::size_t it = 0; it < w.thetas.size(); ++it)
    for (std::size_t ip = 1; ip < w.phis.size(); ++ip) ASSERT_NEAR(w.at(it, ip), w.at(it, 0), 1e-12);
  EXPECT_EQ(w.at(0, 0), w.max());
}

TEST(Wigner, CoherentStatePeaksAtItsDirection) {
  const auto rho = density_from_state(coherent_state(20, kPi / 2), HalfInt(10));
  const auto w = wigner(rho, {91, 181});
  std::size_t best = 0;
  for (std::size_t i = 0; i < w.values.size(); ++i)
    if (w.values[i] > w.values[best]) best = i;
  EXPECT_NEAR(w.thetas[best / 181], kPi / 2, 1e-12);
  const double phi = w.phis[best % 181];
  EXPECT_TRUE(phi < 1e-12 || std::fabs(phi - 2 * kPi) < 1e-12) << phi;
}

TEST(Wigner, CatHasNegativeFringes) {
  const auto w = wigner(density_from_state(cat_state(10), HalfInt(5)));
  EXPECT_LT(w.min(), -1e-3);
  EXPECT_LT(w.max_imag_residue, 1e-12);
}

TEST(Wigner, RejectsNonHermitian) {
  auto rho = maximally_mixed(3);
  rho(0, 1) = cplx(0.0, 0.3);
  rho(1, 0) = cplx(0.0, 0.3);
  EXPECT_THROW(wigner(rho, {11, 11}), DomainError);
  EXPECT_THROW(wigner(maximally_mixed(3), {0, 11}), DomainError);
}

TEST(SqueezingReport, RatioBelowOneAfterMeasurement) {
  const int N = 100;
  const auto prior = coherent_state(N, kPi / 2);
  const auto post = posterior(QndParams(5.1, 5.0, kPi / N), {25, 25}, prior);
  const auto rep = squeezing_report(prior, post);
  EXPECT_NEAR(rep.var_prior, N / 4.0, 1e-10);
  EXPECT_LT(rep.ratio, 1.0);
  EXPECT_DOUBLE_EQ(rep.ratio, rep.var_post / rep.var_prior);
  const auto same = squeezing_report(prior, prior);
  EXPECT_DOUBLE_EQ(same.ratio, 1.0);
}

TEST(SqueezingReport, EveryBalancedOutcomeSqueezes) {
  for (int N : {20, 50, 100}) {
    const auto prior = coherent_state(N, kPi / 2);
    const QndParams p(5.1, 5.0, kPi / N);
    for (int n = 5; n <= 40; ++n)
      ASSERT_LT(squeezing_report(prior, posterior(p, {n, n}, prior)).ratio, 1.0) << N << " " << n;
  }
}

TEST(SqueezingReport, NoInteractionNoSqueezing) {
  const auto prior = coherent_state(40, kPi / 2);
  EXPECT_NEAR(squeezing_report(prior, posterior(QndParams(5.1, 5.0, 0.0), {25, 25}, prior)).ratio, 1.0, 1e-12);
}

TEST(SqueezingReport, LongerInteractionSqueezesMore) {
  for (int N : {20, 50, 100}) {
    const auto prior = coherent_state(N, kPi / 2);
    const double half = squeezing_report(prior, posterior(QndParams(5.1, 5.0, kPi / (2 * N)), {25, 25}, prior)).ratio;
    const double full = squeezing_report(prior, posterior(QndParams(5.1, 5.0, kPi / N), {25, 25}, prior)).ratio;
    EXPECT_LT(full, half) << N;
  }
}

QndParams parity_params() { return QndParams(5.0, 5.0, kPi / 2); }

TEST(ParityPattern, BothDetectorsFireEvenSupport) {
  // n_c = 1 or n_d = 1 leaves |cos phi| ~ 1e-16 to a single power; skip it.
  for (int nc : {2, 4, 26}) {
    const auto r = parity_pattern_check(parity_params(), {nc, 52 - nc}, 10);
    EXPECT_EQ(r.parity_case, ParityCase::kEven);
    EXPECT_EQ(r.support, (std::vector<int>{-4, -2, 0, 2, 4}));
    EXPECT_TRUE(r.vanishes_off_support);
    EXPECT_LT(r.max_off_support_relative, 1e-20);
    EXPECT_TRUE(r.matches_on_support);
    EXPECT_NEAR(r.expected_log_amplitude, -0.5 * (log_factorial(nc) + log_factorial(52 - nc)), 1e-12);
  }
}

TEST(ParityPattern, SingleDetectorCases) {
  const auto c2 = parity_pattern_check(parity_params(), {0, 100}, 12);
  EXPECT_EQ(c2.parity_case, ParityCase::kMod4Eq1);
  EXPECT_EQ(c2.support, (std::vector<int>{-3, 1, 5}));
  EXPECT_TRUE(c2.vanishes_off_support);
  EXPECT_TRUE(c2.matches_on_support);
  const auto c3 = parity_pattern_check(parity_params(), {100, 0}, 12);
  EXPECT_EQ(c3.parity_case, ParityCase::kMod4Eq3);
  EXPECT_EQ(c3.support, (std::vector<int>{-5, -1, 3}));
  EXPECT_TRUE(c3.vanishes_off_support);
  EXPECT_TRUE(c3.matches_on_support);
}

TEST(ParityPattern, EvenMLeakageDecaysAsPowerOfTwo) {
  // Off-support even m_z keep A = 1/sqrt(n!), i.e. 2^{-n/2} relative.
  for (int n : {11, 51, 80}) {
    const auto r = parity_pattern_check(parity_params(), {0, n}, 10);
    EXPECT_NEAR(std::log2(r.max_off_support_relative), -0.5 * n, 1e-9) << n;
    EXPECT_EQ(r.vanishes_off_support, n >= 80);
  }
}

TEST(ParityPattern, Preconditions) {
  EXPECT_THROW(parity_pattern_check(QndParams(5.0, 5.0, 1.0), {1, 1}, 10), PreconditionError);
  EXPECT_THROW(parity_pattern_check(QndParams(5.1, 5.0, kPi / 2), {1, 1}, 10), PreconditionError);
  EXPECT_THROW(parity_pattern_check(parity_params(), {1, 1}, 9), PreconditionError);
  EXPECT_THROW(parity_pattern_check(parity_params(), {0, 0}, 10), PreconditionError);
  EXPECT_STREQ(to_string(ParityCase::kMod4Eq3), "mod4_eq_3");
}

TEST(CatState, StructureAndFidelity) {
  for (int N : {2, 8, 10, 11}) {
    const auto cat = cat_state(N);
    EXPECT_NEAR(cat.norm_squared(), 1.0, 1e-14);
    EXPECT_NEAR(cat_fidelity(cat, N), 1.0, 1e-14);
    // Equal-weight two-lobe superposition.
    const auto a = coherent_state(N, kPi / 2), b = coherent_state(N, -kPi / 2);
    EXPECT_NEAR(fidelity(cat, a), fidelity(cat, b), 1e-14);
    const double o = std::abs(overlap(a, b));
    EXPECT_NEAR(fidelity(cat, a), (1.0 + o) / 2.0, 1e-12) << N;
  }
  // Even N: only even m_z survive.
  const auto cat10 = cat_state(10);
  const auto& amps = cat10.sectors().front().amps;
  for (std::size_t i = 0; i < amps.size(); ++i)
    if ((static_cast<int>(i) - 5) % 2 != 0) {
      EXPECT_EQ(std::abs(amps[i]), 0.0);
    }
}

TEST(CatState, CoherentInputHalf) {
  EXPECT_NEAR(cat_fidelity(coherent_state(10, kPi / 2), 10), 0.5, 1e-14);
}

TEST(CatState, MeasurementPosteriorIsCat) {
  for (int N : {8, 10, 12})
    for (int n : {2, 26}) {
      const auto post = posterior(parity_params(), {n, n}, coherent_state(N, kPi / 2));
      EXPECT_NEAR(cat_fidelity(post, N), 1.0, 1e-12) << N << " " << n;
    }
}

TEST(CatState, Preconditions) {
  EXPECT_THROW(cat_fidelity(coherent_state(8, 1.0), 10), DomainError);
  auto s = coherent_state(10, 1.0);
  s.mutable_sectors()[0].amps[0] += 1.0;
  EXPECT_THROW(cat_fidelity(s, 10), PreconditionError);
}

}  // namespace
}  // namespace qnd
