// SPDX-License-Identifier: Apache-2.0
//! \file test_extract.cpp
#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pisp/extract.hpp"

using namespace pisp;

namespace {
Chord chord_of_length(double d) {
  Chord c;
  c.x = {0.5 * d, 0, 0};
  c.y = {-0.5 * d, 0, 0};
  return c;
}

KSeries f1(double A, double dist, double delta, const KGrid& g = {}, const NoiseModel& nm = {},
           std::mt19937_64* rng = nullptr) {
  return synth_f1(chord_of_length(dist), {dist + delta, A, dist}, g, nm, rng);
}

KGrid unit_step_grid() { return {50, 350, 301}; }
} // namespace

TEST(DetectLineOfSight, ConstantSeries) {
  EXPECT_TRUE(detect_line_of_sight(f1(0.1, 1.0, 0.0)));
}

TEST(DetectLineOfSight, OscillatingSeries) {
  EXPECT_FALSE(detect_line_of_sight(f1(0.1, 1.0, 0.05)));
}

TEST(DetectLineOfSight, SlowOscillationIsIndeterminate) {
  // Period 2 pi / 0.005 ~ 1257 against a span of 400.
  EXPECT_THROW(detect_line_of_sight(f1(0.1, 1.0, 0.005)), SpanError);
}

TEST(DetectLineOfSight, FreeChordIsAllZero) {
  const double a0 = free_amplitude(1.0);
  const auto s = f1(a0, 1.0, 0.0);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(detect_line_of_sight(s));
  EXPECT_EQ(extract_A_from_f1(s), a0);
}

TEST(DetectLineOfSight, DegenerateSeriesRejected) {
  KSeries bad = f1(0.1, 1.0, 0.05);
  bad.values[3] = std::nan("");
  EXPECT_THROW(detect_line_of_sight(bad), NumericalError);
  KSeries short_ = f1(0.1, 1.0, 0.05);
  short_.values.resize(10);
  EXPECT_THROW(detect_line_of_sight(short_), NumericalError);
}

TEST(DetectLineOfSight, WrongKindRejected) {
  const auto s = synth_f2(chord_of_length(1.0), {1.0, 0.1, 1.0}, KGrid{});
  EXPECT_THROW(detect_line_of_sight(s), ConfigError);
}

TEST(ExtractA, WorkedExample) {
  const auto s = f1(0.1, 1.0, 0.05, unit_step_grid());
  EXPECT_NEAR(extract_A_from_f1(s), 0.1, 1e-3 * 0.1);
}

TEST(ExtractA, LineOfSightUsesPlusBranch) {
  const double a0 = free_amplitude(1.0);
  const double A = 1.3 * a0;
  const auto s = f1(A, 1.0, 0.0);
  EXPECT_NEAR(extract_A_from_f1(s), A, 1e-12 * A);
}

TEST(ExtractA, InconsistentDataRejected) {
  KSeries s = f1(0.1, 1.0, 0.05);
  for (auto& v : s.values) v *= 1e-6;  // peak far below a0^2
  EXPECT_THROW(extract_A_from_f1(s), NumericalError);
}

TEST(ExtractA, OnePercentNoiseWithinTwoPercent) {
  std::mt19937_64 rng(11);
  const double A = 0.1;
  NoiseModel nm{0.01, 0};
  ExtractOptions opt;
  opt.los_tol = 0.03;
  opt.robust = true;
  int bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = f1(A, 1.0, 0.05, KGrid{}, nm, &rng);
    if (std::abs(extract_A_from_f1(s, opt) - A) > 0.02 * A) ++bad;
  }
  EXPECT_EQ(bad, 0);
}

TEST(ExtractTau, WorkedExample) {
  const auto s = f1(0.1, 1.0, 0.05, unit_step_grid());
  EXPECT_NEAR(extract_tau(s) - 1.0, 0.05, 1e-4);
}

TEST(ExtractTau, PeriodReadBack) {
  const auto s = f1(0.1, 1.0, 0.05, KGrid{50, 450, 801});
  const double period = kTwoPi / (extract_tau(s) - 1.0);
  EXPECT_NEAR(period, kTwoPi / 0.05, 0.3);
}

TEST(ExtractTau, DoublingDelayHalvesPeriod) {
  const double p1 = kTwoPi / (extract_tau(f1(0.1, 1.0, 0.06)) - 1.0);
  const double p2 = kTwoPi / (extract_tau(f1(0.1, 1.0, 0.12)) - 1.0);
  EXPECT_NEAR(p1 / p2, 2.0, 1e-3);
}

TEST(ExtractTau, LineOfSightReturnsDistanceExactly) {
  const auto s = f1(0.1, 0.8, 0.0);
  EXPECT_EQ(extract_tau(s), s.dist());
}

TEST(ExtractTau, FewerThanTwoMaximaIsSpanError) {
  // Period ~ 251 against a span of 300 starting mid-cycle: at most one maximum.
  const auto s = f1(0.1, 1.0, 0.025, KGrid{10, 250, 401});
  EXPECT_THROW(extract_tau(s), SpanError);
}

TEST(ExtractTau, MonotoneInDelay) {
  double prev_spacing = 1e300;
  for (double d = 0.04; d <= 0.4; d += 0.02) {
    const double spacing = kTwoPi / (extract_tau(f1(0.09, 1.1, d)) - 1.1);
    EXPECT_LT(spacing, prev_spacing);
    prev_spacing = spacing;
  }
}

TEST(ExtractTau, NeverBelowDistanceUnderNoise) {
  std::mt19937_64 rng(5);
  NoiseModel nm{0.02, 0};
  ExtractOptions opt;
  opt.los_tol = 0.06;
  for (int trial = 0; trial < 50; ++trial) {
    const double delta = trial % 5 == 0 ? 0.0 : 0.03 + 0.01 * (trial % 7);
    const auto s = f1(0.1, 1.0, delta, KGrid{}, nm, &rng);
    double tau = 0;
    try {
      tau = extract_chord(s, opt).tau_hat;
    } catch (const NumericalError&) {
      continue;
    }
    EXPECT_GE(tau, s.dist());
  }
}

TEST(ExtractionRoundTrip, RandomChords) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const KGrid g{};  // dk = 0.5, span 400
  int n = 0;
  for (int i = 0; i < 1000; ++i) {
    const double dist = 0.3 + 1.7 * U(rng);
    const double a0 = free_amplitude(dist);
    const double A = a0 * (0.7 + 0.6 * U(rng));
    // Span >= 2 periods and dk <= period / 20.
    const double dmin = 2 * kTwoPi / g.span(), dmax = kTwoPi / (20 * g.dk());
    const double delta = dmin + (dmax - dmin) * U(rng);
    const auto r = extract_chord(f1(A, dist, delta, g));
    ASSERT_FALSE(r.line_of_sight);
    EXPECT_NEAR(r.A_hat, A, 1e-3 * A) << "dist " << dist << " delta " << delta;
    EXPECT_NEAR(r.tau_hat - dist, delta, 1e-4) << "dist " << dist << " delta " << delta;
    ++n;
  }
  EXPECT_EQ(n, 1000);
}

TEST(ExtractChord, LineOfSightResult) {
  const auto r = extract_chord(f1(0.1, 1.0, 0.0));
  EXPECT_TRUE(r.line_of_sight);
  EXPECT_EQ(r.method, ExtractMethod::line_of_sight);
  EXPECT_EQ(r.tau_hat, 1.0);
  EXPECT_GT(r.A_hat, 0);
}

TEST(ExtractChord, ShortSpanFallsBackToModelFit) {
  const auto s = f1(0.1, 1.0, 0.025, KGrid{10, 250, 401});
  const auto r = extract_chord(s);
  EXPECT_EQ(r.method, ExtractMethod::model_fit);
  EXPECT_NEAR(r.tau_hat - 1.0, 0.025, 1e-4);
  EXPECT_NEAR(r.A_hat, 0.1, 1e-3 * 0.1);
}

TEST(ExtractChord, QualityIsSmallForCleanData) {
  const auto r = extract_chord(f1(0.1, 1.0, 0.05));
  EXPECT_LT(r.quality, 1e-3);
}

TEST(ExtractF2, ConstantSeries) {
  const auto s = synth_f2(chord_of_length(1.0), {1.0, 0.1, 1.0}, KGrid{});
  EXPECT_NEAR(extract_A_from_f2(s), 0.1, 1e-15);
}

TEST(ExtractF2, RemainderBiasBound) {
  const double A = 0.08, c = 0.02;
  const KGrid g{};
  const auto s = synth_f2(chord_of_length(1.0), {1.0, A, 1.0}, g, NoiseModel{0, c});
  const double A2 = sq(extract_A_from_f2(s));
  const double k_tail = g.k(g.n_k - g.n_k / 4);
  EXPECT_LE(std::abs(A2 - A * A), c / k_tail);
  EXPECT_GT(A2, A * A);
}

TEST(ExtractF2, OnePercentNoise) {
  std::mt19937_64 rng(3);
  const double A = 0.08;
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = synth_f2(chord_of_length(1.0), {1.0, A, 1.0}, KGrid{}, NoiseModel{0.01, 0}, &rng);
    EXPECT_NEAR(extract_A_from_f2(s), A, 0.01 * A);
  }
}

TEST(ExtractF2, NonPositiveTailRejected) {
  KSeries s = synth_f2(chord_of_length(1.0), {1.0, 0.1, 1.0}, KGrid{});
  for (auto& v : s.values) v = 0;
  EXPECT_THROW(extract_A_from_f2(s), NumericalError);
}
