// SPDX-License-Identifier: Apache-2.0
//! \file forward.hpp
//! Straight-line (linearized) observables of a phantom and the phaseless
//! intensity series f1 = |u_sc|^2, f2 = |u|^2 sampled over a frequency grid.
#pragma once

#include <random>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "phantom.hpp"
#include "quadrature.hpp"

namespace pisp {

//! Uniform frequency samples k_i = k0 + i dk, i = 0..n_k-1, dk = (k_max - k0)/(n_k - 1).
struct KGrid {
  double k0 = 50;
  double k_max = 450;
  int n_k = 801;

  double dk() const { return (k_max - k0) / (n_k - 1); }
  double k(int i) const { return k0 + i * dk(); }
  double span() const { return k_max - k0; }

  void validate() const {
    if (!(k0 > 0)) throw ConfigError("KGrid: k0 must be positive");
    if (n_k < 16) throw ConfigError("KGrid: n_k must be >= 16");
    if (!(k_max > k0)) throw ConfigError("KGrid: k_max must exceed k0");
  }
};

enum class SeriesKind { F1, F2 };

struct KSeries {
  Chord chord;
  KGrid grid;
  std::vector<double> values;
  SeriesKind kind = SeriesKind::F1;

  double dist() const { return chord.length(); }
};

struct ChordObservables {
  double tau = 0;   //!< travel time
  double A = 0;     //!< amplitude of the leading singularity
  double dist = 0;  //!< |x - y|
};

//! Free-space amplitude 1 / (4 pi |x - y|).
inline double free_amplitude(double dist) { return 1.0 / (4.0 * kPi * dist); }

namespace detail {

// Parameter interval [t0, t1] within [0, 1] where p + t d lies inside the ball
// (c, a); returns false when the segment misses it.
inline bool segment_ball(const Vec3& p, const Vec3& d, const Vec3& c, double a, double& t0,
                         double& t1) {
  const Vec3 m = p - c;
  const double qa = dot(d, d), qb = dot(m, d), qc = dot(m, m) - a * a;
  const double disc = qb * qb - qa * qc;
  if (disc <= 0) return false;
  const double root = std::sqrt(disc);
  t0 = std::max(0.0, (-qb - root) / qa);
  t1 = std::min(1.0, (-qb + root) / qa);
  return t1 > t0;
}

// Sum over bumps of integral_0^1 weight(t) * field_i(y + t (x - y)) dt, each
// bump integrated over its own chord intersection.
template <typename Field, typename Weight>
double integrate_bumps(const Phantom& p, const Vec3& x, const Vec3& y, Field&& field,
                       Weight&& weight, double rel_tol) {
  const Vec3 d = x - y;
  double total = 0;
  AdaptiveOptions opt;
  opt.rel_tol = rel_tol;
  opt.min_level = 1;
  for (const auto& b : p.bumps()) {
    if (b.amplitude == 0) continue;
    double t0, t1;
    if (!segment_ball(y, d, b.center, b.radius, t0, t1)) continue;
    total += integrate_adaptive(
        [&](double t) { return weight(t) * field(b, y + t * d); }, t0, t1, opt);
  }
  return total;
}

inline double bump_value(const Bump& b, const Vec3& x) {
  const double u = dot(x - b.center, x - b.center) / (b.radius * b.radius);
  return u < 1 ? b.amplitude * bump_profile(u).w : 0.0;
}

inline double bump_laplacian(const Bump& b, const Vec3& x) {
  const double a2 = b.radius * b.radius;
  const double u = dot(x - b.center, x - b.center) / a2;
  if (u >= 1) return 0.0;
  const auto pr = bump_profile(u);
  return b.amplitude * (pr.d2w * 4.0 * u / a2 + pr.dw * 6.0 / a2);
}

} // namespace detail

//! h(x, y): integral of beta along the straight segment from x to y.
inline double line_integral_beta(const Phantom& p, const Vec3& x, const Vec3& y,
                                 double rel_tol = 1e-10) {
  const double len = norm(x - y);
  if (len == 0) throw DomainError("line_integral_beta: x == y");
  return len * detail::integrate_bumps(p, x, y, detail::bump_value,
                                       [](double) { return 1.0; }, rel_tol);
}

//! Straight-line travel time |x - y| + integral of beta.
inline double tau_linearized(const Phantom& p, const Vec3& x, const Vec3& y) {
  return norm(x - y) + line_integral_beta(p, x, y);
}

//! |x - y| * integral_0^1 q(y + s (x - y)) s (1 - s) ds for an arbitrary
//! scalar field q.
template <typename Field>
double weighted_line_integral(Field&& q, const Vec3& x, const Vec3& y,
                              double rel_tol = 1e-12) {
  const double len = norm(x - y);
  if (len == 0) throw DomainError("weighted_line_integral: x == y");
  AdaptiveOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = 1e-300;
  opt.min_level = 4;
  opt.max_level = 14;
  const Vec3 d = x - y;
  return len * integrate_adaptive(
                   [&](double s) { return q(y + s * d) * s * (1.0 - s); }, 0.0, 1.0, opt);
}

//! Weighted integral of the phantom Laplacian, split over bump supports.
inline double weighted_laplacian_integral(const Phantom& p, const Vec3& x, const Vec3& y,
                                          double rel_tol = 1e-12) {
  const double len = norm(x - y);
  if (len == 0) throw DomainError("weighted_laplacian_integral: x == y");
  return len * detail::integrate_bumps(p, x, y, detail::bump_laplacian,
                                       [](double s) { return s * (1.0 - s); }, rel_tol);
}

//! A(x, y) = (1 / (4 pi |x-y|)) (1 - |x-y|^2 / 2 * int_0^1 Lap beta(y + s(x-y)) s(1-s) ds).
inline double amplitude_linearized(const Phantom& p, const Vec3& x, const Vec3& y) {
  const double len = norm(x - y);
  if (len == 0) throw DomainError("amplitude_linearized: x == y");
  // weighted_laplacian_integral already carries one factor of |x - y|.
  const double w = weighted_laplacian_integral(p, x, y);
  return free_amplitude(len) * (1.0 - 0.5 * len * w);
}

inline ChordObservables observables_linearized(const Phantom& p, const Chord& c) {
  return {tau_linearized(p, c.x, c.y), amplitude_linearized(p, c.x, c.y), c.length()};
}

//! Perturbations applied on top of the leading asymptotics.
struct NoiseModel {
  double level = 0;        //!< Gaussian sigma relative to the series peak
  double remainder_c = 0;  //!< coefficient of an added c / k term
};

namespace detail {
inline void perturb(std::vector<double>& v, const KGrid& grid, const NoiseModel& noise,
                    double peak, std::mt19937_64* rng) {
  if (noise.remainder_c != 0)
    for (int i = 0; i < grid.n_k; ++i) v[i] += noise.remainder_c / grid.k(i);
  if (noise.level > 0) {
    if (!rng) throw ConfigError("noise requested without a random generator");
    std::normal_distribution<double> gauss(0.0, noise.level * peak);
    for (auto& x : v) x += gauss(*rng);
  }
  for (auto& x : v) x = std::max(0.0, x);
}
} // namespace detail

//! f1(k) = A^2 + 1/(16 pi^2 |x-y|^2) - A / (2 pi |x-y|) cos(k (tau - |x-y|)).
inline KSeries synth_f1(const Chord& chord, const ChordObservables& obs, const KGrid& grid,
                        const NoiseModel& noise = {}, std::mt19937_64* rng = nullptr) {
  grid.validate();
  KSeries out{chord, grid, std::vector<double>(grid.n_k), SeriesKind::F1};
  const double a0 = free_amplitude(obs.dist);
  const double delta = obs.tau - obs.dist;
  const double base = obs.A * obs.A + a0 * a0, amp = 2.0 * obs.A * a0;
  for (int i = 0; i < grid.n_k; ++i) out.values[i] = base - amp * std::cos(grid.k(i) * delta);
  detail::perturb(out.values, grid, noise, *std::max_element(out.values.begin(), out.values.end()), rng);
  return out;
}

//! f2(k) = A^2; the O(1/k) remainder is only present through NoiseModel.
inline KSeries synth_f2(const Chord& chord, const ChordObservables& obs, const KGrid& grid,
                        const NoiseModel& noise = {}, std::mt19937_64* rng = nullptr) {
  grid.validate();
  KSeries out{chord, grid, std::vector<double>(grid.n_k, obs.A * obs.A), SeriesKind::F2};
  detail::perturb(out.values, grid, noise, obs.A * obs.A, rng);
  return out;
}

} // namespace pisp
