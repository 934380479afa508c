// SPDX-License-Identifier: Apache-2.0
//! \file raytrace.hpp
//! Geodesic travel times and amplitudes in the metric n(x)|dx|.
//!
//! Rays follow the characteristics of |grad tau|^2 = n^2 written with the
//! Hamiltonian H = (|p|^2 - n^2)/2:
//!   dr/dt = p,  dp/dt = grad(beta)/2,  dtau/dt = n^2.
//! The independent variable is switched to the projection xi = <r - x, e>
//! onto the straight chord direction e, so every ray ends exactly on the plane
//! through the receiver and the step count can be held fixed across the
//! finite-difference stencil used for the geodesic Jacobian.
#pragma once

#include <array>
#include <optional>

#include "core.hpp"
#include "phantom.hpp"

namespace pisp {

struct RayOptions {
  double step_fraction = 1.0 / 50.0;  //!< step = fraction * smallest bump radius
  int max_newton = 50;
  double miss_tol = 1e-10;            //!< relative to B
  std::optional<int> n_steps;         //!< overrides the step count when set
};

struct GeodesicResult {
  double tau = 0;
  double miss = 0;      //!< final endpoint miss distance
  int iterations = 0;   //!< Newton iterations used
  Vec3 p_end;           //!< slowness vector at the receiver
};

namespace detail {

struct RayState {
  Vec3 r, p;
  double tau = 0;
};

// d(state)/d(xi) along direction e.
inline RayState ray_rhs(const Phantom& ph, const RayState& s, const Vec3& e) {
  const double pe = dot(s.p, e);
  if (!(pe > 1e-6)) throw NumericalError("ray turned back relative to the chord direction");
  const double inv = 1.0 / pe;
  const double n2 = 1.0 + ph.beta(s.r);
  return {s.p * inv, 0.5 * inv * ph.grad_beta(s.r), n2 * inv};
}

inline RayState axpy(const RayState& s, double h, const RayState& k) {
  return {s.r + h * k.r, s.p + h * k.p, s.tau + h * k.tau};
}

// Classical RK4 from x with unit launch direction d over xi in [0, len].
inline RayState trace(const Phantom& ph, const Vec3& x, const Vec3& d, const Vec3& e,
                      double len, int steps) {
  RayState s{x, std::sqrt(1.0 + ph.beta(x)) * d, 0.0};
  const double h = len / steps;
  for (int i = 0; i < steps; ++i) {
    const RayState k1 = ray_rhs(ph, s, e);
    const RayState k2 = ray_rhs(ph, axpy(s, 0.5 * h, k1), e);
    const RayState k3 = ray_rhs(ph, axpy(s, 0.5 * h, k2), e);
    const RayState k4 = ray_rhs(ph, axpy(s, h, k3), e);
    s.r += (h / 6.0) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
    s.p += (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    s.tau += (h / 6.0) * (k1.tau + 2.0 * k2.tau + 2.0 * k3.tau + k4.tau);
  }
  return s;
}

inline std::pair<Vec3, Vec3> transverse_basis(const Vec3& e) {
  const Vec3 trial = std::abs(e.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  const Vec3 u = normalized(cross(e, trial));
  return {u, cross(e, u)};
}

} // namespace detail

//! Step count used for the chord x -> y under the given options.
inline int ray_steps(const Phantom& ph, const Vec3& x, const Vec3& y, const RayOptions& opt) {
  if (opt.n_steps) return *opt.n_steps;
  const double h = opt.step_fraction * ph.min_radius();
  return std::max(8, static_cast<int>(std::ceil(norm(y - x) / h)));
}

//! Two-point ray by damped Newton shooting on the transverse launch angles.
inline GeodesicResult tau_geodesic_detail(const Phantom& ph, const Vec3& x, const Vec3& y,
                                          const RayOptions& opt = {}) {
  const double len = norm(y - x);
  if (len == 0) throw DomainError("tau_geodesic: x == y");
  const Vec3 e = (y - x) / len;
  const auto [u, v] = detail::transverse_basis(e);
  const int steps = ray_steps(ph, x, y, opt);
  const double tol = opt.miss_tol * ph.config().B;

  auto shoot = [&](double a, double b) {
    const Vec3 d = normalized(e + a * u + b * v);
    const auto end = detail::trace(ph, x, d, e, len, steps);
    const Vec3 m = end.r - y;  // lies in the receiver plane
    return std::pair{end, std::array<double, 2>{dot(m, u), dot(m, v)}};
  };

  double a = 0, b = 0;
  auto [end, miss] = shoot(a, b);
  double mnorm = std::hypot(miss[0], miss[1]);
  int it = 0;
  for (; it < opt.max_newton && mnorm >= tol; ++it) {
    // Finite-difference Jacobian of the miss with respect to (a, b).
    const double fd = 1e-7;
    const auto ma = shoot(a + fd, b).second;
    const auto mb = shoot(a, b + fd).second;
    const double j00 = (ma[0] - miss[0]) / fd, j10 = (ma[1] - miss[1]) / fd;
    const double j01 = (mb[0] - miss[0]) / fd, j11 = (mb[1] - miss[1]) / fd;
    const double det = j00 * j11 - j01 * j10;
    if (det == 0 || !std::isfinite(det)) throw NumericalError("tau_geodesic: singular shooting Jacobian");
    const double da = -(j11 * miss[0] - j01 * miss[1]) / det;
    const double db = -(-j10 * miss[0] + j00 * miss[1]) / det;
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 20; ++halving, lambda *= 0.5) {
      auto trial = shoot(a + lambda * da, b + lambda * db);
      const double tn = std::hypot(trial.second[0], trial.second[1]);
      if (tn < mnorm) {
        a += lambda * da;
        b += lambda * db;
        end = trial.first;
        miss = trial.second;
        mnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (mnorm >= tol)
    throw NumericalError("tau_geodesic: shooting did not converge, miss distance " +
                         std::to_string(mnorm));
  // First-order correction for the residual miss: grad_y tau = p at the receiver.
  const Vec3 mvec = miss[0] * u + miss[1] * v;
  return {end.tau - dot(end.p, mvec), mnorm, it, end.p};
}

inline double tau_geodesic(const Phantom& ph, const Vec3& x, const Vec3& y,
                           const RayOptions& opt = {}) {
  return tau_geodesic_detail(ph, x, y, opt).tau;
}

struct GeodesicAmplitude {
  double A = 0;
  double J = 0;
  double tau = 0;
};

//! A = n^2(y) sqrt(J) / (4 pi n(x) tau) with zeta = -(1/(2 n^2(y))) grad_y tau^2
//! and J = det(d zeta / d x), both by central differences of step fd_step * B.
inline GeodesicAmplitude amplitude_geodesic(const Phantom& ph, const Vec3& x, const Vec3& y,
                                            double fd_step = 1e-4, RayOptions opt = {}) {
  const double h = fd_step * ph.config().B;
  if (!opt.n_steps) opt.n_steps = ray_steps(ph, x, y, opt);
  auto tau2 = [&](const Vec3& a, const Vec3& b) {
    const double t = tau_geodesic(ph, a, b, opt);
    return t * t;
  };
  const double n2y = 1.0 + ph.beta(y);
  std::array<std::array<double, 3>, 3> jac{};
  for (int i = 0; i < 3; ++i) {    // zeta component (derivative in y_i)
    for (int j = 0; j < 3; ++j) {  // derivative in x_j
      Vec3 ei, ej;
      ei[i] = h;
      ej[j] = h;
      const double mixed = (tau2(x + ej, y + ei) - tau2(x + ej, y - ei) -
                            tau2(x - ej, y + ei) + tau2(x - ej, y - ei)) /
                           (4.0 * h * h);
      jac[i][j] = -mixed / (2.0 * n2y);
    }
  }
  const double J = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                   jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
                   jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
  if (!(J > 0))
    throw NumericalError("amplitude_geodesic: non-positive geodesic Jacobian (caustic or step too large)");
  const double tau = tau_geodesic(ph, x, y, opt);
  const double A = n2y * std::sqrt(J) / (4.0 * kPi * ph.n(x) * tau);
  return {A, J, tau};
}

} // namespace pisp
