// SPDX-License-Identifier: Apache-2.0
//! \file test_geometry.cpp
#include <random>

#include <gtest/gtest.h>

#include "pisp/geometry.hpp"

using namespace pisp;

TEST(SliceRadius, EquatorAndThreeFourFive) {
  BallConfig cfg;
  EXPECT_DOUBLE_EQ(slice_radius(0.0, cfg), 1.0);
  EXPECT_NEAR(slice_radius(0.6, cfg), 0.8, 1e-15);
}

TEST(SliceRadius, PoleIsEmpty) {
  BallConfig cfg;
  EXPECT_THROW(slice_radius(1.0, cfg), DomainError);
  EXPECT_THROW(slice_radius(-1.2, cfg), DomainError);
}

TEST(BallConfig, Invariants) {
  EXPECT_THROW((BallConfig{1.0, 1.0, 64}.validate()), ConfigError);
  EXPECT_THROW((BallConfig{1.0, 0.0, 64}.validate()), ConfigError);
  EXPECT_THROW((BallConfig{1.0, 0.5, 4}.validate()), ConfigError);
  EXPECT_NO_THROW((BallConfig{1.0, 0.5, 8}.validate()));
}

TEST(ChordFromEndpoints, Diameter) {
  const auto c = chord_from_endpoints({1, 0, 0}, {-1, 0, 0});
  EXPECT_EQ(c.s, 0.0);
  EXPECT_EQ(c.z, 0.0);
}

TEST(ChordFromEndpoints, HorizontalChord) {
  const auto c = chord_from_endpoints({0.8, 0.6, 0}, {-0.8, 0.6, 0});
  EXPECT_NEAR(c.s, 0.6, 1e-15);
  EXPECT_NEAR(c.alpha, kPi / 2, 1e-15);
}

TEST(ChordFromEndpoints, Errors) {
  EXPECT_THROW(chord_from_endpoints({1, 0, 0}, {0, 1, 0.1}), DomainError);
  EXPECT_THROW(chord_from_endpoints({1, 0, 0}, {1, 0, 0}), DomainError);
}

TEST(ChordFromEndpoints, OrderFree) {
  const Vec3 x{0.3, 0.7, 0.2}, y{-0.5, -0.1, 0.2};
  const auto a = chord_from_endpoints(x, y), b = chord_from_endpoints(y, x);
  EXPECT_DOUBLE_EQ(a.alpha, b.alpha);
  EXPECT_DOUBLE_EQ(a.s, b.s);
}

TEST(EndpointsFromChord, InverseOfHorizontalChord) {
  BallConfig cfg;
  const auto [x, y] = endpoints_from_chord({0, kPi / 2, 0.6}, cfg);
  // First endpoint at angle alpha + arccos(s / B_z).
  EXPECT_NEAR(x.x, -0.8, 1e-15);
  EXPECT_NEAR(x.y, 0.6, 1e-15);
  EXPECT_NEAR(y.x, 0.8, 1e-15);
  EXPECT_NEAR(y.y, 0.6, 1e-15);
}

TEST(EndpointsFromChord, ChordLengthIdentity) {
  BallConfig cfg;
  for (double s : {0.0, 0.3, 0.9, 0.999999}) {
    const auto [x, y] = endpoints_from_chord({0, 1.3, s}, cfg);
    EXPECT_NEAR(norm(x - y), 2 * std::sqrt(1 - s * s), 1e-10);
  }
  const auto [x, y] = endpoints_from_chord({0.6, 0.0, 0.0}, cfg);
  EXPECT_NEAR(norm(x - y), 1.6, 1e-12);
}

TEST(EndpointsFromChord, MissesCircle) {
  BallConfig cfg;
  EXPECT_THROW(endpoints_from_chord({0, 1.0, 1.0}, cfg), DomainError);
  EXPECT_THROW(endpoints_from_chord({0.6, 1.0, -0.8}, cfg), DomainError);
}

TEST(EndpointsFromChord, RoundTripRandom) {
  BallConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(0, kTwoPi);
  const double z = 0.3, bz = slice_radius(z, cfg);
  for (int i = 0; i < 500; ++i) {
    const double a = ang(rng), b = ang(rng);
    if (std::abs(std::remainder(a - b, kTwoPi)) < 1e-3) continue;
    const Vec3 x{bz * std::cos(a), bz * std::sin(a), z}, y{bz * std::cos(b), bz * std::sin(b), z};
    const auto c = chord_from_endpoints(x, y);
    const auto [p, q] = endpoints_from_chord(c, cfg);
    const double direct = norm(p - x) + norm(q - y), swapped = norm(p - y) + norm(q - x);
    EXPECT_LT(std::min(direct, swapped), 1e-10);
    const auto c2 = chord_from_endpoints(p, q);
    EXPECT_NEAR(c2.alpha, c.alpha, 1e-10);
    EXPECT_NEAR(c2.s, c.s, 1e-10);
    EXPECT_NEAR(c2.z, c.z, 1e-12);
  }
}

TEST(Canonical, FoldsNegativeOffsets) {
  const auto c = canonical({0.1, 0.5, -0.2});
  EXPECT_NEAR(c.alpha, 0.5 + kPi, 1e-15);
  EXPECT_NEAR(c.s, 0.2, 1e-15);
  BallConfig cfg;
  const auto [x, y] = endpoints_from_chord({0.1, 0.5, -0.2}, cfg);
  const auto d = chord_from_endpoints(x, y);
  EXPECT_NEAR(d.alpha, c.alpha, 1e-12);
  EXPECT_NEAR(d.s, c.s, 1e-12);
}

TEST(WrapAngle, Range) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), kTwoPi);
  EXPECT_DOUBLE_EQ(wrap_angle(kTwoPi), kTwoPi);
  EXPECT_NEAR(wrap_angle(-kPi / 2), 1.5 * kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(5 * kPi), kPi, 1e-14);
}

TEST(ChordGrid, Cardinality) {
  BallConfig cfg;
  const auto set = chord_grid(cfg, std::vector<double>{0.0}, 4, 3);
  EXPECT_EQ(set.chords.size(), 12u);
}

TEST(ChordGrid, EndpointsOnSphereAndInPlane) {
  BallConfig cfg;
  const auto set = chord_grid(cfg, 6, 16, 12);
  ASSERT_EQ(set.chords.size(), 6u * 16 * 12);
  for (const auto& c : set.chords) {
    EXPECT_NEAR(norm(c.x), cfg.B, 1e-12 * cfg.B);
    EXPECT_NEAR(norm(c.y), cfg.B, 1e-12 * cfg.B);
    EXPECT_EQ(c.x.z, c.param.z);
    EXPECT_EQ(c.y.z, c.param.z);
    EXPECT_LT(std::abs(c.param.s), support_radius(c.param.z, cfg));
    EXPECT_GT(c.param.alpha, 0.0);
    EXPECT_LE(c.param.alpha, kTwoPi);
  }
}

TEST(ChordGrid, NearPoleSlicesShrinkButKeepCount) {
  BallConfig cfg;
  const double z = 0.999 * cfg.R;
  const auto set = chord_grid(cfg, std::vector<double>{z}, 8, 8);
  EXPECT_EQ(set.chords.size(), 64u);
  const double rho0 = support_radius(z, cfg);
  for (const auto& c : set.chords) EXPECT_LT(std::abs(c.param.s), rho0);
}

TEST(ChordGrid, UniformMidpoints) {
  BallConfig cfg;
  const auto set = chord_grid(cfg, 4, 8, 4);
  ASSERT_EQ(set.z_values.size(), 4u);
  EXPECT_NEAR(set.z_values[0], -0.45, 1e-15);
  EXPECT_NEAR(set.z_values[3], 0.45, 1e-15);
  const auto a = alpha_grid(8);
  EXPECT_NEAR(a.front(), kPi / 4, 1e-15);
  EXPECT_NEAR(a.back(), kTwoPi, 1e-15);
}

TEST(ChordGrid, RejectsBadCounts) {
  BallConfig cfg;
  EXPECT_THROW(chord_grid(cfg, 0, 8, 8), ConfigError);
  EXPECT_THROW(chord_grid(cfg, 2, 2, 8), ConfigError);
}
