// SPDX-License-Identifier: Apache-2.0
//! \file geometry.hpp
//! Measurement sphere S of radius B, its horizontal slice circles S_z, and the
//! correspondence between chord endpoint pairs on S_z and parallel-beam
//! (alpha, s) coordinates.
//!
//! A chord of the slice at height z is the line {r : <r, nu(alpha)> = s} with
//! nu(alpha) = (cos alpha, sin alpha). Endpoints are ordered so that the first
//! one sits at polar angle alpha + acos(s / B_z) and the second at
//! alpha - acos(s / B_z).
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core.hpp"

namespace pisp {

struct BallConfig {
  double B = 1.0;   //!< radius of the measurement sphere S
  double R = 0.6;   //!< radius of the support ball Omega
  int grid_n = 64;  //!< voxels per axis for volume grids

  void validate() const {
    if (!(R > 0) || !(R < B))
      throw ConfigError("BallConfig: require 0 < R < B (got R=" + std::to_string(R) +
                        ", B=" + std::to_string(B) + ")");
    if (grid_n < 8) throw ConfigError("BallConfig: grid_n must be >= 8");
  }
};

struct ChordParam {
  double z = 0;
  double alpha = 0;  //!< normal angle in (0, 2 pi]
  double s = 0;      //!< signed distance from 0_z
};

struct Chord {
  ChordParam param;
  Vec3 x, y;  //!< endpoints on S_z
  double length() const { return norm(x - y); }
};

//! Chords on a (z, alpha, s) product grid; index = (iz * n_alpha + ia) * n_s + is.
struct ChordSet {
  double B = 1, R = 0.6;
  std::vector<double> z_values;
  int n_alpha = 0, n_s = 0;
  std::vector<Chord> chords;

  std::size_t index(std::size_t iz, std::size_t ia, std::size_t is) const {
    return (iz * n_alpha + ia) * n_s + is;
  }
};

//! Maps an angle to (0, 2 pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= 0) a += kTwoPi;
  return a;
}

//! Radius B_z of the slice circle S_z.
inline double slice_radius(double z, const BallConfig& cfg) {
  if (!(std::abs(z) < cfg.B))
    throw DomainError("slice_radius: |z| >= B, the slice Q_z is empty");
  return std::sqrt(cfg.B * cfg.B - z * z);
}

//! Support radius rho_0 = sqrt(R^2 - z^2) of the slice; 0 when |z| >= R.
inline double support_radius(double z, const BallConfig& cfg) {
  return std::abs(z) < cfg.R ? std::sqrt(cfg.R * cfg.R - z * z) : 0.0;
}

//! Canonical (z, alpha, s) of the chord through x and y: s >= 0 with nu
//! pointing away from 0_z; chords through 0_z take alpha in (0, pi].
//! The result does not depend on the order of x and y.
inline ChordParam chord_from_endpoints(const Vec3& x, const Vec3& y) {
  const double scale = std::max({1.0, norm(x), norm(y)});
  if (std::abs(x.z - y.z) > 1e-12 * scale)
    throw DomainError("chord_from_endpoints: endpoints are not in one horizontal plane");
  const double dx = y.x - x.x, dy = y.y - x.y;
  const double len = std::hypot(dx, dy);
  if (len <= 1e-14 * scale) throw DomainError("chord_from_endpoints: degenerate chord (x == y)");
  // Either in-plane normal; fix the sign below.
  double nx = -dy / len, ny = dx / len;
  double s = 0.5 * ((x.x + y.x) * nx + (x.y + y.y) * ny);
  if (s < 0) {
    nx = -nx;
    ny = -ny;
    s = -s;
  }
  double alpha = wrap_angle(std::atan2(ny, nx));
  if (s <= 1e-15 * scale) {
    s = 0;
    if (alpha > kPi) alpha -= kPi;
  }
  return {0.5 * (x.z + y.z), alpha, s};
}

//! Same chord with the representation (alpha, s) -> (alpha + pi, -s) folded
//! to the canonical form returned by chord_from_endpoints.
inline ChordParam canonical(const ChordParam& c) {
  if (c.s > 0) return {c.z, wrap_angle(c.alpha), c.s};
  if (c.s < 0) return {c.z, wrap_angle(c.alpha + kPi), -c.s};
  double a = wrap_angle(c.alpha);
  return {c.z, a > kPi ? a - kPi : a, 0.0};
}

inline std::pair<Vec3, Vec3> endpoints_from_chord(const ChordParam& c, const BallConfig& cfg) {
  const double bz = slice_radius(c.z, cfg);
  if (!(std::abs(c.s) < bz))
    throw DomainError("endpoints_from_chord: |s| >= B_z, the line misses the slice circle");
  const double half = std::acos(c.s / bz);
  const double a1 = c.alpha + half, a2 = c.alpha - half;
  return {Vec3{bz * std::cos(a1), bz * std::sin(a1), c.z},
          Vec3{bz * std::cos(a2), bz * std::sin(a2), c.z}};
}

inline Chord make_chord(const ChordParam& c, const BallConfig& cfg) {
  auto [x, y] = endpoints_from_chord(c, cfg);
  return {c, x, y};
}

//! Uniform midpoint samples of (lo, hi).
inline std::vector<double> midpoint_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) v[i] = lo + (i + 0.5) * h;
  return v;
}

//! Normal angles alpha_i = (i + 1) 2 pi / n, covering (0, 2 pi].
inline std::vector<double> alpha_grid(int n_alpha) {
  std::vector<double> a(n_alpha);
  for (int i = 0; i < n_alpha; ++i) a[i] = (i + 1) * kTwoPi / n_alpha;
  return a;
}

//! Offsets s_j in (-rho_0, rho_0) for the slice at height z.
inline std::vector<double> offset_grid(double z, int n_s, const BallConfig& cfg) {
  const double rho0 = support_radius(z, cfg);
  return midpoint_grid(-rho0, rho0, n_s);
}

inline ChordSet chord_grid(const BallConfig& cfg, const std::vector<double>& z_values,
                           int n_alpha, int n_s) {
  cfg.validate();
  if (n_alpha < 4 || n_s < 2 || z_values.empty())
    throw ConfigError("chord_grid: need n_alpha >= 4, n_s >= 2 and at least one slice");
  ChordSet set;
  set.B = cfg.B;
  set.R = cfg.R;
  set.z_values = z_values;
  set.n_alpha = n_alpha;
  set.n_s = n_s;
  set.chords.reserve(z_values.size() * n_alpha * n_s);
  const auto alphas = alpha_grid(n_alpha);
  for (double z : z_values) {
    if (!(std::abs(z) < cfg.R)) throw ConfigError("chord_grid: slice height outside (-R, R)");
    const auto offsets = offset_grid(z, n_s, cfg);
    for (double a : alphas)
      for (double s : offsets) set.chords.push_back(make_chord({z, a, s}, cfg));
  }
  return set;
}

//! n_z slices at the midpoints of a uniform partition of (-R, R).
inline ChordSet chord_grid(const BallConfig& cfg, int n_z, int n_alpha, int n_s) {
  if (n_z < 1) throw ConfigError("chord_grid: n_z must be >= 1");
  return chord_grid(cfg, midpoint_grid(-cfg.R, cfg.R, n_z), n_alpha, n_s);
}

} // namespace pisp
