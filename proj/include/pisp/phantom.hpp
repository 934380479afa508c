// SPDX-License-Identifier: Apache-2.0
//! \file phantom.hpp
//! Analytic media n(x)^2 = 1 + beta(x), beta a sum of compactly supported
//! C-infinity bumps with closed-form gradient and Laplacian.
#pragma once

#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"

namespace pisp {

//! eps * exp(1 - 1 / (1 - |x - c|^2 / a^2)) inside the ball |x - c| < a.
struct Bump {
  Vec3 center;
  double radius = 0.25;
  double amplitude = 0.01;
};

struct SmallnessLimits {
  double max_beta = 0.05;           //!< bound on max beta
  double max_laplacian_r2 = 1.0;    //!< bound on max |Laplacian beta| * R^2
};

namespace detail {

// Profile w(u) = exp(1 - 1/(1-u)) with u = |x-c|^2/a^2 and its first two
// u-derivatives. Below 1e-3 of the edge w underflows to zero in double.
struct ProfileDerivs {
  double w = 0, dw = 0, d2w = 0;
};

inline ProfileDerivs bump_profile(double u) {
  ProfileDerivs p;
  const double t = 1.0 - u;
  if (t <= 1e-3) return p;
  const double inv = 1.0 / t;
  p.w = std::exp(1.0 - inv);
  const double g = -inv * inv;        // d/du of (1 - 1/(1-u))
  const double dg = -2.0 * inv * inv * inv;
  p.dw = p.w * g;
  p.d2w = p.w * (g * g + dg);
  return p;
}

} // namespace detail

class Phantom {
public:
  Phantom() = default;
  Phantom(std::vector<Bump> bumps, BallConfig cfg) : bumps_(std::move(bumps)), cfg_(cfg) {
    cfg_.validate();
    for (const auto& b : bumps_) {
      if (!(b.radius > 0)) throw ConfigError("Bump: radius must be positive");
      if (!(b.amplitude >= 0)) throw ConfigError("Bump: amplitude must be >= 0");
      if (norm(b.center) + b.radius > cfg_.R * (1 + 1e-12))
        throw ConfigError("Bump: support |c| + a must lie inside the ball of radius R");
    }
  }

  const std::vector<Bump>& bumps() const { return bumps_; }
  const BallConfig& config() const { return cfg_; }
  bool empty() const {
    for (const auto& b : bumps_)
      if (b.amplitude > 0) return false;
    return true;
  }

  double beta(const Vec3& x) const {
    double sum = 0;
    for (const auto& b : bumps_) {
      const double u = dot(x - b.center, x - b.center) / (b.radius * b.radius);
      if (u < 1) sum += b.amplitude * detail::bump_profile(u).w;
    }
    return sum;
  }

  Vec3 grad_beta(const Vec3& x) const {
    Vec3 g;
    for (const auto& b : bumps_) {
      const Vec3 d = x - b.center;
      const double a2 = b.radius * b.radius, u = dot(d, d) / a2;
      if (u < 1) g += (b.amplitude * detail::bump_profile(u).dw * 2.0 / a2) * d;
    }
    return g;
  }

  //! Trace of the analytic Hessian.
  double laplacian_beta(const Vec3& x) const {
    double sum = 0;
    for (const auto& b : bumps_) {
      const Vec3 d = x - b.center;
      const double a2 = b.radius * b.radius, u = dot(d, d) / a2;
      if (u >= 1) continue;
      const auto p = detail::bump_profile(u);
      sum += b.amplitude * (p.d2w * 4.0 * u / a2 + p.dw * 6.0 / a2);
    }
    return sum;
  }

  //! Refractive index n = sqrt(1 + beta).
  double n(const Vec3& x) const { return std::sqrt(1.0 + beta(x)); }

  //! Upper bounds on max beta and max |Laplacian beta| (sums of per-bump maxima).
  std::pair<double, double> derivative_bounds() const {
    double bmax = 0, lmax = 0;
    for (const auto& b : bumps_) {
      bmax += b.amplitude;
      double peak = 0;
      for (int i = 0; i <= 4000; ++i) {
        const double u = i / 4000.0;
        const auto p = detail::bump_profile(u);
        peak = std::max(peak, std::abs(p.d2w * 4.0 * u + p.dw * 6.0));
      }
      lmax += b.amplitude * peak / (b.radius * b.radius);
    }
    return {bmax, lmax};
  }

  //! Throws ConfigError when the medium is too strong for linearization.
  void check_smallness(const SmallnessLimits& lim = {}) const {
    auto [bmax, lmax] = derivative_bounds();
    if (bmax > lim.max_beta)
      throw ConfigError("phantom violates smallness gate: max beta bound " +
                        std::to_string(bmax) + " > " + std::to_string(lim.max_beta));
    if (lmax * cfg_.R * cfg_.R > lim.max_laplacian_r2)
      throw ConfigError("phantom violates smallness gate: max |Laplacian beta| R^2 bound " +
                        std::to_string(lmax * cfg_.R * cfg_.R) + " > " +
                        std::to_string(lim.max_laplacian_r2));
  }

  //! Same bumps with every amplitude multiplied by factor.
  Phantom scaled(double factor) const {
    auto b = bumps_;
    for (auto& x : b) x.amplitude *= factor;
    return Phantom(std::move(b), cfg_);
  }

  //! Smallest bump radius (used as the ray-integration length scale).
  double min_radius() const {
    double a = cfg_.R;
    for (const auto& b : bumps_) a = std::min(a, b.radius);
    return a;
  }

private:
  std::vector<Bump> bumps_;
  BallConfig cfg_;
};

} // namespace pisp
