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

#include "qnd/approx.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace qnd {
namespace {

constexpr double kPi = std::numbers::pi;

QndParams fig_params(int N) { return QndParams(5.1, 5.0, kPi / N); }

TEST(GaussianModel, SimplifiedVarianceAtEtaZero) {
  for (double gt : {0.01, 0.05, 0.2})
    for (int n : {5, 25, 80}) {
      const auto g = gaussian_model(QndParams(3.0, 3.0, gt), {n, n});
      EXPECT_NEAR(g.sigma2 * gt * gt * n, 1.0, 1e-12);
      EXPECT_NEAR(g.m0, 0.0, 1e-15);
    }
}

TEST(GaussianModel, WidthScalesWithN) {
  const double ref = std::sqrt(gaussian_model(fig_params(100), {25, 25}).sigma2) / 100.0;
  for (int N : {20, 50, 200, 1000})
    EXPECT_NEAR(std::sqrt(gaussian_model(fig_params(N), {25, 25}).sigma2) / N, ref, 1e-12 * ref);
}

TEST(GaussianModel, PeakOnPeakCondition) {
  const QndParams p(std::polar(2.0, 0.3), std::polar(2.5, 1.1), 0.02);
  const PhotonOutcome o{10, 14};
  const auto g = gaussian_model(p, o);
  EXPECT_NEAR(p.cos2eta() * std::sin(p.gt() * g.m0 + p.phi_chigamma()), o.r(), 1e-14);
}

TEST(GaussianModel, DomainErrors) {
  EXPECT_THROW(gaussian_model(fig_params(100), {0, 5}), DomainError);
  EXPECT_THROW(gaussian_model(fig_params(100), {5, 0}), DomainError);
  // cos 2 eta = 0.6 here, r = -0.8.
  EXPECT_THROW(gaussian_model(QndParams(1.0, 3.0, 0.1), {1, 9}), DomainError);
  EXPECT_THROW(gaussian_model(QndParams(1.0, 1.0, 0.0), {3, 3}), DomainError);
}

TEST(GaussianAmplitude, ShapeAndPeak) {
  const auto g = gaussian_model(fig_params(100), {25, 25});
  const double peak = gaussian_amplitude(g, HalfInt(0));
  for (int m = -50; m <= 50; ++m)
    if (m != 0) {
      EXPECT_LT(gaussian_amplitude(g, HalfInt(m)), peak);
    }
  GaussianModel shifted = g;
  shifted.m0 = 3.0 - std::sqrt(g.sigma2);
  EXPECT_NEAR(gaussian_amplitude(shifted, HalfInt(3)) / std::exp(g.log_prefactor), std::exp(-0.5), 1e-14);
}

TEST(GaussianAmplitude, TracksExactNearPeak) {
  // Stirling costs ~0.3% at the peak; the quartic term of ln(1 - c^2 sin^2)
  // adds about 2 (gt dm)^4, i.e. 2% at 1.5 sigma and 5% at 2 sigma.
  const auto p = fig_params(100);
  const PhotonOutcome o{25, 25};
  const auto g = gaussian_model(p, o);
  const double s = std::sqrt(g.sigma2);
  int checked = 0;
  for (int m = -50; m <= 50; ++m) {
    const double dm = std::fabs(m - g.m0);
    if (dm > 2.0 * s) continue;
    const double err = std::fabs(gaussian_amplitude(g, HalfInt(m)) / amplitude(p, o, HalfInt(m)) - 1.0);
    EXPECT_LT(err, dm <= 1.5 * s ? 0.02 : 0.05) << m;
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(GaussianModel, VarianceMatchesExactCurvature) {
  const auto p = fig_params(100);
  for (const PhotonOutcome o : {PhotonOutcome{25, 25}, PhotonOutcome{20, 31}}) {
    const auto g = gaussian_model(p, o);
    // Second difference on the unit m grid around the nearest integer to m0.
    const int m = static_cast<int>(std::lround(g.m0));
    const double d2 = log_amplitude(p, o, HalfInt(m + 1)) - 2.0 * log_amplitude(p, o, HalfInt(m)) +
                      log_amplitude(p, o, HalfInt(m - 1));
    EXPECT_NEAR(-1.0 / d2 / g.sigma2, 1.0, 0.05);
  }
}

TEST(PeakSolutions, OneToOneAtPiOverN) {
  for (int N : {20, 100, 400})
    for (int nd : {10, 25, 40}) {
      const auto sol = peak_solutions(fig_params(N), {50 - nd, nd}, HalfInt(N / 2));
      ASSERT_EQ(sol.size(), 1u) << N << " " << nd;
    }
}

TEST(PeakSolutions, MultipleAtLargerCoupling) {
  const int N = 100;
  const auto sol = peak_solutions(QndParams(5.0, 5.0, 4.0 * kPi / N), {25, 25}, HalfInt(N / 2));
  ASSERT_EQ(sol.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(sol[k], -50.0 + 25.0 * k, 1e-9);
}

TEST(PeakSolutions, ZerosOfSine) {
  const auto sol = peak_solutions(QndParams(2.0, 2.0, 0.3), {4, 4}, HalfInt(20));
  ASSERT_EQ(sol.size(), 3u);
  EXPECT_NEAR(sol[0], -kPi / 0.3, 1e-12);
  EXPECT_NEAR(sol[1], 0.0, 1e-12);
  EXPECT_NEAR(sol[2], kPi / 0.3, 1e-12);
}

TEST(PeakSolutions, AgreesWithBracketing) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const QndParams p(std::polar(1.0 + 3.0 * U(rng), 6.0 * U(rng)), std::polar(1.0 + 3.0 * U(rng), 6.0 * U(rng)),
                      0.02 + 0.5 * U(rng));
    const PhotonOutcome o{static_cast<std::int64_t>(1 + 30 * U(rng)), static_cast<std::int64_t>(1 + 30 * U(rng))};
    const double J = 30.0;
    const auto sol = peak_solutions(p, o, HalfInt(30));
    auto f = [&](double m) { return p.cos2eta() * std::sin(p.gt() * m + p.phi_chigamma()) - o.r(); };
    for (double m : sol) {
      EXPECT_LE(std::fabs(m), J + 1e-9);
      EXPECT_NEAR(f(m), 0.0, 1e-12);
    }
    int crossings = 0;
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) {
      const double a = -J + 2.0 * J * i / steps, b = -J + 2.0 * J * (i + 1) / steps;
      if ((f(a) < 0) != (f(b) < 0)) ++crossings;
    }
    // Tangencies can hide a crossing pair; generic draws have none.
    EXPECT_EQ(static_cast<int>(sol.size()), crossings) << trial;
  }
}

TEST(PeakSolutions, EmptyBeyondCos2Eta) {
  EXPECT_TRUE(peak_solutions(QndParams(1.0, 3.0, 0.1), {1, 9}, HalfInt(10)).empty());
  EXPECT_TRUE(peak_solutions(QndParams(1.0, 1.0, 0.0), {1, 1}, HalfInt(10)).empty());
  EXPECT_THROW(peak_solutions(QndParams(1.0, 1.0, 0.1), {0, 0}, HalfInt(10)), PreconditionError);
}

double approx_fidelity(const QndParams& p, const PhotonOutcome& o, const CollectiveState& psi) {
  return fidelity(posterior(p, o, psi), approx_apply(p, o, psi).normalized());
}

TEST(ApproxApply, HighFidelityOnCoherentInput) {
  const int N = 100;
  EXPECT_GT(approx_fidelity(fig_params(N), {25, 25}, coherent_state(N, kPi / 2)), 0.99);
}

TEST(ApproxApply, DickeInDickeOut) {
  const auto d = dicke_state(HalfInt(10), HalfInt(-3));
  EXPECT_NEAR(approx_fidelity(fig_params(20), {20, 30}, d), 1.0, 1e-14);
}

TEST(ApproxApply, FidelityDegradesWithCoupling) {
  const int N = 100;
  const auto psi = coherent_state(N, kPi / 2);
  double prev = 1.0;
  for (double gt : {kPi / 800, kPi / 400, kPi / 200, kPi / 100, kPi / 10}) {
    const double f = approx_fidelity(QndParams(5.1, 5.0, gt), {25, 25}, psi);
    EXPECT_LE(f, prev + 1e-12) << gt;
    prev = f;
  }
  EXPECT_LT(prev, 0.99);
}

TEST(ProjectiveParams, CountsAndXi) {
  const auto pp = projective_params(fig_params(100), {20, 31});
  EXPECT_DOUBLE_EQ(pp.u, 25.5);
  EXPECT_DOUBLE_EQ(pp.v, 5.5);
  EXPECT_GT(pp.u * pp.u, pp.v * pp.v);
  EXPECT_DOUBLE_EQ(pp.xi_plus, 1.0 - pp.xi_d - pp.xi_c);
  EXPECT_DOUBLE_EQ(pp.xi_minus, pp.xi_d - pp.xi_c);
}

TEST(ProjectiveParams, MatchesPhaseDerivatives) {
  // xi_c, xi_d are half the slopes of the two detector phases in phi at m0.
  const QndParams p(std::polar(2.0, 0.4), 2.6, 0.01);
  const PhotonOutcome o{14, 19};
  const auto pp = projective_params(p, o);
  const double h = 1e-5;
  const double eta = p.eta();
  const double phi0 = 0.5 * p.gt() * pp.m0 + 0.5 * p.phi_chigamma() + 0.25 * kPi;
  auto c = [&](double x) { return std::atan(std::tan(eta) * std::tan(x)); };
  auto d = [&](double x) { return std::atan(std::tan(x) / std::tan(eta)); };
  const double dc = (c(phi0 + h) - c(phi0 - h)) / (2 * h);
  const double dd = (d(phi0 + h) - d(phi0 - h)) / (2 * h);
  EXPECT_NEAR(pp.xi_c, 0.5 * dc, 1e-8);
  EXPECT_NEAR(pp.xi_d, 0.5 * dd, 1e-8);
}

TEST(ProjectiveParams, EtaZeroLimit) {
  const auto pp = projective_params(QndParams(4.0, 4.0, 0.01), {10, 13});
  EXPECT_EQ(pp.xi_c, 0.0);
  EXPECT_TRUE(std::isfinite(pp.xi_d));
  EXPECT_EQ(pp.xi_d, 0.0);
}

TEST(ProjectiveParams, SmallEtaAgainstExtendedPrecision) {
  // eta = 1e-8, phi = pi/4 + 0.3; 40-digit evaluation of the printed forms.
  const auto [xc, xd] = detail::phase_slopes(1e-8, kPi / 4 + 0.3);
  EXPECT_NEAR(xc / 2.296962700514837210603505254589853919439e-8, 1.0, 1e-12);
  EXPECT_NEAR(xd / 6.391236445410769366809525505501391e-9, 1.0, 1e-12);
  const auto [c0, d0] = detail::phase_slopes(0.0, 0.7);
  EXPECT_EQ(c0, 0.0);
  EXPECT_EQ(d0, 0.0);
}

TEST(RoundToLadder, IntegerAndHalfIntegerLadders) {
  EXPECT_EQ(round_to_ladder(2.4, HalfInt(5)), HalfInt(2));
  EXPECT_EQ(round_to_ladder(2.6, HalfInt(5)), HalfInt(3));
  EXPECT_EQ(round_to_ladder(2.5, HalfInt(5)), HalfInt(2));
  EXPECT_EQ(round_to_ladder(-2.5, HalfInt(5)), HalfInt(-2));
  EXPECT_EQ(round_to_ladder(-0.3, HalfInt(5)), HalfInt(0));
  const HalfInt J = HalfInt::from_twice(7);
  EXPECT_EQ(round_to_ladder(0.2, J), HalfInt::from_twice(1));
  EXPECT_EQ(round_to_ladder(-0.9, J), HalfInt::from_twice(-1));
  EXPECT_EQ(round_to_ladder(1.0, J), HalfInt::from_twice(1));
  EXPECT_EQ(round_to_ladder(-1.0, J), HalfInt::from_twice(-1));
  EXPECT_EQ(round_to_ladder(2.1, J), HalfInt::from_twice(5));
  // Brute force: nearest ladder point, ties to the smaller |m|.
  for (int tj = 0; tj <= 5; ++tj)
    for (double x = -4.0; x <= 4.0; x += 0.125) {
      const HalfInt got = round_to_ladder(x, HalfInt::from_twice(tj));
      const double step_origin = (tj % 2 == 0) ? 0.0 : 0.5;
      double best = 1e9;
      for (double c = step_origin - 10; c <= 10; c += 1.0) {
        const double dc = std::fabs(c - x), db = std::fabs(best - x);
        if (dc < db - 1e-12 || (std::fabs(dc - db) < 1e-12 && std::fabs(c) < std::fabs(best))) best = c;
      }
      if (tj % 2 == 1 && x == 0.0) continue;  // equidistant and equal |m|
      EXPECT_EQ(got.value(), best) << x << " tj=" << tj;
    }
}

TEST(Project, DickeIsFixedAndIdempotent) {
  const QndParams p = fig_params(20);
  const auto d = dicke_state(HalfInt(10), HalfInt(4));
  const auto a = project(p, d, 25.0, 4.2);
  EXPECT_NEAR(fidelity(a.state, d), 1.0, 1e-15);
  const auto b = project(p, a.state, 25.0, 4.2);
  EXPECT_NEAR(fidelity(b.state, a.state), 1.0, 1e-15);
  EXPECT_THROW(project(p, d, 25.0, 2.0), DomainError);
}

TEST(Project, CoherentToCentralDicke) {
  const auto p = fig_params(100);
  const double S = p.intensity();
  const auto pr = project(p, coherent_state(100, kPi / 2), S / 2, 0.0);
  EXPECT_NEAR(fidelity(pr.state, dicke_state(HalfInt(50), HalfInt(0))), 1.0, 1e-14);
  EXPECT_NEAR(pr.amplitude, std::pow(kPi * S / 2, -0.25), 1e-15);
  const auto off = project(p, coherent_state(100, kPi / 2), S / 2 + 3.0, 0.0);
  EXPECT_NEAR(off.amplitude, std::exp(-9.0 / S) * std::pow(kPi * (S / 2 + 3.0), -0.25), 1e-15);
}

TEST(Project, SectorsBelowTargetDrop) {
  std::mt19937_64 rng(17);
  const auto psi = oracle::random_state(rng, {2, 6, 8});
  const auto pr = project(fig_params(10), psi, 20.0, 2.2);
  EXPECT_EQ(pr.state.find(HalfInt(1))->amps, std::vector<cplx>(3));
  EXPECT_NEAR(pr.state.norm_squared(), 1.0, 1e-14);
  EXPECT_THROW(project(fig_params(10), psi, 0.0, 0.0), DomainError);
  auto bad = psi;
  bad.mutable_sectors()[0].amps[0] += 1.0;
  EXPECT_THROW(project(fig_params(10), bad, 20.0, 0.0), PreconditionError);
}

TEST(Project, HalfIntegerSectorsUseTheirLadder) {
  const auto d = dicke_state(HalfInt::from_twice(7), HalfInt::from_twice(3));
  EXPECT_NEAR(fidelity(project(fig_params(10), d, 20.0, 1.3).state, d), 1.0, 1e-15);
  EXPECT_THROW(project(fig_params(10), d, 20.0, 0.3), DomainError);
}

TEST(Project, CompletenessOverM0Grid) {
  // Projection weights |<P psi>|^2 = F(P psi / |P psi|, psi) sum to one.
  std::mt19937_64 rng(23);
  for (const auto& tjs : {std::vector<int>{4, 8, 12}, std::vector<int>{3, 7}}) {
    const auto psi = oracle::random_state(rng, tjs);
    const bool half = tjs.front() % 2 == 1;
    const int jmax2 = tjs.back();
    double total = 0.0;
    for (int t = -jmax2; t <= jmax2; t += 2) {
      try {
        total += fidelity(project(fig_params(10), psi, 20.0, 0.5 * t).state, psi);
      } catch (const DomainError&) {
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12) << half;
  }
}

TEST(Project, ClassicalFactorNormalizesInLargeIntensity) {
  // integral du amplitude^2 -> 1 with O(1/S) corrections.
  const QndParams p(707.1, 707.1, 0.001);
  const double S = p.intensity();
  const double su = std::sqrt(S) / 2.0;
  const auto d = dicke_state(HalfInt(2), HalfInt(0));
  double integral = 0.0;
  const double h = 0.5;
  for (double u = S / 2 - 14 * su; u <= S / 2 + 14 * su; u += h) {
    const double a = project(p, d, u, 0.0).amplitude;
    integral += a * a * h;
  }
  EXPECT_NEAR(integral, 1.0, 1e-6);
}

}  // namespace
}  // namespace qnd
