// SPDX-License-Identifier: Apache-2.0
//! \file test_radon.cpp
#include <cmath>

#include <gtest/gtest.h>

#include "pisp/pipeline.hpp"

using namespace pisp;

namespace {
const BallConfig kBall{1.0, 0.6, 64};

Phantom bump_at(Vec3 c, double eps = 0.01, double a = 0.4) { return Phantom({Bump{c, a, eps}}, kBall); }

// Single-slice table of exact line integrals at height z.
ObservablesTable slice_table(const Phantom& ph, double z, int n_alpha, int n_s) {
  const auto chords = chord_grid(kBall, std::vector<double>{z}, n_alpha, n_s);
  return direct_table(chords, forward_observables(ph, chords, ForwardModel::linearized, false));
}

Sinogram slice_sinogram(const Phantom& ph, double z, int n_alpha, int n_s) {
  return assemble_h_sinogram(slice_table(ph, z, n_alpha, n_s), z);
}

double peak(const Sinogram& sg) {
  double m = 0;
  for (double v : sg.data) m = std::max(m, std::abs(v));
  return m;
}

Vec3 centroid(const SliceImage& img) {
  double sx = 0, sy = 0, sw = 0;
  for (int j = 0; j < img.n; ++j)
    for (int i = 0; i < img.n; ++i) {
      const double w = std::max(0.0, img.at(i, j));
      sx += w * img.coord(i);
      sy += w * img.coord(j);
      sw += w;
    }
  return {sx / sw, sy / sw, 0};
}

Sinogram synthetic(int n_alpha, int n_s) {
  Sinogram sg;
  sg.alphas = alpha_grid(n_alpha);
  sg.s_values = midpoint_grid(-0.6, 0.6, n_s);
  sg.data.assign(std::size_t(n_alpha) * n_s, 0.0);
  return sg;
}
} // namespace

TEST(AssembleSinogram, EmptyPhantomGivesZeros) {
  const auto sg = slice_sinogram(Phantom({}, kBall), 0.1, 32, 32);
  for (double v : sg.data) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(sg.warnings.empty());
}

TEST(AssembleSinogram, RadialBumpIsAngleIndependent) {
  const auto sg = slice_sinogram(bump_at({0, 0, 0}), 0.1, 64, 48);
  const double p = peak(sg);
  ASSERT_GT(p, 0);
  double worst = 0;
  for (std::size_t is = 0; is < sg.n_s(); ++is)
    for (std::size_t ia = 1; ia < sg.n_alpha(); ++ia)
      worst = std::max(worst, std::abs(sg.at(ia, is) - sg.at(0, is)));
  EXPECT_LT(worst, 1e-6 * p);
}

TEST(AssembleSinogram, OppositeChordsAgree) {
  const auto sg = slice_sinogram(bump_at({0.12, -0.05, 0.02}), 0.0, 64, 40);
  const std::size_t na = sg.n_alpha(), ns = sg.n_s();
  const double p = peak(sg);
  for (std::size_t ia = 0; ia < na; ++ia)
    for (std::size_t is = 0; is < ns; ++is)
      EXPECT_NEAR(sg.at(ia, is), sg.at((ia + na / 2) % na, ns - 1 - is), 1e-9 * p);
}

TEST(AssembleSinogram, MissingSliceRejected) {
  const auto t = slice_table(bump_at({0, 0, 0}), 0.1, 32, 32);
  EXPECT_THROW(assemble_h_sinogram(t, 0.3), DomainError);
}

TEST(AssembleSinogram, MissingChordsWarnAndZero) {
  auto t = slice_table(bump_at({0, 0, 0}), 0.0, 32, 32);
  const ObsRow dropped = t.rows[16];
  t.rows.erase(t.rows.begin() + 16);
  const auto sg = assemble_h_sinogram(t, 0.0);
  ASSERT_EQ(sg.warnings.size(), 1u);
  EXPECT_EQ(sg.at(0, 16), 0.0);
  EXPECT_EQ(dropped.alpha, sg.alphas[0]);
}

TEST(InverseRadon, ZeroSinogramGivesZeroImage) {
  const auto img = inverse_radon_fbp(synthetic(64, 64), 32, 1.0);
  for (double v : img.values) EXPECT_EQ(v, 0.0);
}

TEST(InverseRadon, RejectsSmallAndNonUniformGrids) {
  EXPECT_THROW(inverse_radon_fbp(synthetic(16, 64), 32, 1.0), ConfigError);
  auto sg = synthetic(64, 64);
  sg.s_values[10] += 1e-3;
  EXPECT_THROW(inverse_radon_fbp(sg, 32, 1.0), ConfigError);
  auto sg2 = synthetic(64, 64);
  sg2.alphas[5] += 1e-3;
  EXPECT_THROW(inverse_radon_fbp(sg2, 32, 1.0), ConfigError);
}

TEST(InverseRadon, RoundTripOnBumpSlice) {
  const auto ph = bump_at({0.1, -0.05, 0}, 0.01, 0.4);
  const auto sg = slice_sinogram(ph, 0.0, 256, 256);
  const auto img = inverse_radon_fbp(sg, 128, kBall.B);
  const double err = slice_rel_l2(img, [&](double x, double y) { return ph.beta({x, y, 0.0}); }, 0.0, kBall.B);
  EXPECT_LE(err, 0.05);
}

TEST(InverseRadon, ShiftEquivariance) {
  const Vec3 shift{0.12, -0.08, 0};
  const auto a = inverse_radon_fbp(slice_sinogram(bump_at({0, 0, 0}, 0.01, 0.3), 0.0, 128, 128), 96, 1.0);
  const auto b = inverse_radon_fbp(slice_sinogram(bump_at(shift, 0.01, 0.3), 0.0, 128, 128), 96, 1.0);
  const Vec3 d = centroid(b) - centroid(a);
  EXPECT_LT(norm(d - shift), a.spacing());
}

TEST(InverseRadon, Linearity) {
  const auto sg = slice_sinogram(bump_at({0.05, 0, 0}), 0.0, 64, 64);
  auto sg3 = sg;
  for (auto& v : sg3.data) v *= -3.0;
  const auto a = inverse_radon_fbp(sg, 48, 1.0), b = inverse_radon_fbp(sg3, 48, 1.0);
  double m = 0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(b.values[i], -3.0 * a.values[i], 1e-13 * m);
}

TEST(InverseRadon, RadialSliceIsRadiallySymmetric) {
  const auto img = inverse_radon_fbp(slice_sinogram(bump_at({0, 0, 0}), 0.0, 128, 128), 96, 1.0);
  double p = 0;
  for (double v : img.values) p = std::max(p, std::abs(v));
  for (double r : {0.05, 0.1, 0.2, 0.3}) {
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 36; ++k) {
      const double t = kTwoPi * k / 36;
      const double v = bilinear(img, r * std::cos(t), r * std::sin(t));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_LT(hi - lo, 0.01 * p) << "r " << r;
  }
}

TEST(InverseRadon, HalfTurnCoverage) {
  // Angles on [0, pi) reproduce the full-turn reconstruction.
  const auto full = slice_sinogram(bump_at({0.05, 0.02, 0}), 0.0, 128, 96);
  Sinogram half = full;
  half.alphas.assign(full.alphas.begin(), full.alphas.begin() + 64);
  half.data.assign(full.data.begin(), full.data.begin() + 64 * 96);
  const auto a = inverse_radon_fbp(full, 48, 1.0), b = inverse_radon_fbp(half, 48, 1.0);
  double m = 0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 0.02 * m);
}

namespace {
VolumeGrid radon_volume(const Phantom& ph, int n_z, int n_ang, int n_s) {
  const auto chords = chord_grid(kBall, n_z, n_ang, n_s);
  const auto table = direct_table(chords, forward_observables(ph, chords, ForwardModel::linearized, false, {}, 4));
  return reconstruct_beta_radon(table, kBall, {{}, 4});
}
} // namespace

TEST(ReconstructRadon, EmptyPhantomGivesZeroVolume) {
  const auto v = radon_volume(Phantom({}, kBall), 4, 32, 32);
  for (double x : v.values) EXPECT_EQ(x, 0.0);
}

TEST(ReconstructRadon, SingleBumpVolume) {
  const auto ph = bump_at({0, 0, 0}, 0.01, 0.5);
  const auto v = radon_volume(ph, 32, 128, 128);
  const auto m = compare_volumes(v, analytic_beta(ph, VolumeGrid::cube(kBall.B, kBall.grid_n)), kBall.R);
  EXPECT_LE(m.rel_l2, 0.10);
}

TEST(ReconstructRadon, AmplitudeScaling) {
  const auto a = radon_volume(bump_at({0.05, 0, 0}, 0.01, 0.4), 8, 64, 64);
  const auto b = radon_volume(bump_at({0.05, 0, 0}, 0.005, 0.4), 8, 64, 64);
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) na += sq(a.values[i]), nb += sq(b.values[i]);
  EXPECT_NEAR(std::sqrt(na / nb), 2.0, 0.04);
}

TEST(ReconstructRadon, ZeroOutsideBall) {
  const auto v = radon_volume(bump_at({0, 0, 0}, 0.01, 0.5), 4, 32, 32);
  for (int k = 0; k < v.nz; ++k)
    for (int j = 0; j < v.ny; ++j)
      for (int i = 0; i < v.nx; ++i)
        if (norm(v.position(i, j, k)) >= kBall.B || std::abs(v.position(i, j, k).z) >= kBall.R)
          EXPECT_EQ(v.at(i, j, k), 0.0);
}
