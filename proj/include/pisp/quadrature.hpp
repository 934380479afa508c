// SPDX-License-Identifier: Apache-2.0
//! \file quadrature.hpp
//! Gauss-Legendre rules and a panel-doubling composite integrator.
#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "core.hpp"

namespace pisp {

//! Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendreRule(int n) : nodes(n), weights(n) {
    if (n < 1) throw DomainError("Gauss-Legendre order must be positive");
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      // Tricomi initial guess, then Newton on P_n.
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double dp = 0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1, p1 = 0;
        for (int j = 1; j <= n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (x * p0 - p1) / (x * x - 1.0);
        double dx = p0 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // Recompute the derivative at the converged node.
      double p0 = 1, p1 = 0;
      for (int j = 1; j <= n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  int size() const { return static_cast<int>(nodes.size()); }

  //! Integral of f over [a, b].
  template <typename F> auto integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    decltype(f(a)) sum{};
    for (std::size_t i = 0; i < nodes.size(); ++i)
      sum += weights[i] * f(mid + half * nodes[i]);
    return sum * half;
  }
};

//! Shared, lazily built rule of order n.
inline const GaussLegendreRule& gauss_legendre(int n) {
  static std::mutex m;
  static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendreRule>(n);
  return *slot;
}

struct AdaptiveOptions {
  int order = 16;
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int min_level = 2;
  int max_level = 12;  // up to 2^12 panels
};

//! Composite Gauss-Legendre on 2^k equal panels; k grows until the relative
//! change between successive levels drops below rel_tol.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  const auto& rule = gauss_legendre(opt.order);
  auto composite = [&](int panels) {
    double h = (b - a) / panels, sum = 0;
    for (int p = 0; p < panels; ++p) sum += rule.integrate(f, a + p * h, a + (p + 1) * h);
    return sum;
  };
  double prev = composite(1);
  for (int level = 1, panels = 2; level <= opt.max_level; ++level, panels *= 2) {
    double cur = composite(panels);
    double diff = std::abs(cur - prev);
    if (level >= opt.min_level &&
        (diff <= opt.rel_tol * std::abs(cur) || diff <= opt.abs_tol))
      return cur;
    prev = cur;
  }
  return prev;
}

} // namespace pisp
