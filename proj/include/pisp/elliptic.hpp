// SPDX-License-Identifier: Apache-2.0
//! \file elliptic.hpp
//! Dirichlet problem  Lap beta = q in |x| < B, beta = 0 on |x| = B, on a
//! Cartesian grid with a symmetric embedded boundary and matrix-free CG.
#pragma once

#include <string>
#include <vector>

#include "core.hpp"
#include "volume.hpp"

namespace pisp {

struct PoissonOptions {
  double rel_tol = 1e-10;
  int max_iter = 20000;
  double theta_min = 1e-3;  //!< smallest boundary fraction kept in the stencil
};

struct PoissonReport {
  int iterations = 0;
  double rel_residual = 0;
  std::vector<double> history;  //!< relative residual every 10 iterations
  std::vector<std::string> warnings;
};

namespace detail {

//! 7-point Laplacian restricted to voxels inside the ball. A neighbour
//! outside is replaced by the boundary value 0 at the crossing point,
//! a distance theta * h away: the arm contributes (0 - u) / (theta h^2).
struct BallLaplacian {
  int nx = 0, ny = 0, nz = 0;
  double h2 = 1;
  std::vector<int> inside;     //!< voxel -> unknown index, or -1
  std::vector<std::size_t> voxel;
  std::vector<double> diag;    //!< sum of arm coefficients (positive)
  std::vector<int> nbr;        //!< 6 per unknown, -1 when the arm crosses S

  BallLaplacian(const VolumeGrid& g, double B, double theta_min) : nx(g.nx), ny(g.ny), nz(g.nz) {
    const double h = g.spacing;
    h2 = h * h;
    inside.assign(g.size(), -1);
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
          if (norm(g.position(i, j, k)) < B) {
            inside[g.index(i, j, k)] = static_cast<int>(voxel.size());
            voxel.push_back(g.index(i, j, k));
          }
    const int di[6] = {1, -1, 0, 0, 0, 0}, dj[6] = {0, 0, 1, -1, 0, 0}, dk[6] = {0, 0, 0, 0, 1, -1};
    diag.assign(voxel.size(), 0.0);
    nbr.assign(voxel.size() * 6, -1);
    for (std::size_t u = 0; u < voxel.size(); ++u) {
      const std::size_t v = voxel[u];
      const int i = static_cast<int>(v % nx), j = static_cast<int>((v / nx) % ny),
                k = static_cast<int>(v / (std::size_t(nx) * ny));
      const Vec3 p = g.position(i, j, k);
      for (int a = 0; a < 6; ++a) {
        const int ii = i + di[a], jj = j + dj[a], kk = k + dk[a];
        int w = -1;
        if (ii >= 0 && jj >= 0 && kk >= 0 && ii < nx && jj < ny && kk < nz)
          w = inside[g.index(ii, jj, kk)];
        if (w >= 0) {
          nbr[u * 6 + a] = w;
          diag[u] += 1.0;
        } else {
          // Crossing |p + t e| = B along the arm, t in (0, h].
          const Vec3 e{double(di[a]), double(dj[a]), double(dk[a])};
          const double pe = dot(p, e), c = dot(p, p) - B * B;
          const double t = -pe + std::sqrt(std::max(0.0, pe * pe - c));
          diag[u] += 1.0 / std::max(theta_min, std::min(1.0, t / h));
        }
      }
    }
  }

  std::size_t size() const { return voxel.size(); }

  //! y = -h^2 Lap_h x (symmetric positive definite).
  void apply_neg(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::size_t u = 0; u < size(); ++u) {
      double acc = diag[u] * x[u];
      const int* nb = &nbr[u * 6];
      for (int a = 0; a < 6; ++a)
        if (nb[a] >= 0) acc -= x[nb[a]];
      y[u] = acc;
    }
  }
};

inline double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

} // namespace detail

//! Solves Lap beta = q in the ball |x| < B with beta = 0 on the sphere.
//! Voxels outside the ball are returned as 0.
inline VolumeGrid poisson_solve_ball(const VolumeGrid& q, double B, const PoissonOptions& opt = {},
                                     PoissonReport* report = nullptr) {
  for (double v : q.values)
    if (!std::isfinite(v)) throw DomainError("poisson_solve_ball: q is not finite");
  const detail::BallLaplacian L(q, B, opt.theta_min);
  const std::size_t n = L.size();
  PoissonReport rep;
  double outside = 0, total = 0;
  for (std::size_t v = 0; v < q.size(); ++v) {
    total += std::abs(q.values[v]);
    if (L.inside[v] < 0) outside += std::abs(q.values[v]);
  }
  if (outside > 1e-12 * total && outside > 0)
    rep.warnings.push_back("poisson: q has mass outside the ball (ignored)");

  // -h^2 Lap u = -h^2 q.
  std::vector<double> b(n), x(n, 0.0), r(n), p(n), Ap(n);
  for (std::size_t u = 0; u < n; ++u) b[u] = -L.h2 * q.values[L.voxel[u]];
  const double bnorm = std::sqrt(detail::dot_vec(b, b));
  VolumeGrid beta = q;
  std::fill(beta.values.begin(), beta.values.end(), 0.0);
  if (bnorm == 0) {
    if (report) *report = rep;
    return beta;
  }
  r = b;
  p = r;
  double rr = detail::dot_vec(r, r);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const double rel = std::sqrt(rr) / bnorm;
    if (it % 10 == 0) rep.history.push_back(rel);
    if (rel <= opt.rel_tol) break;
    L.apply_neg(p, Ap);
    const double alpha = rr / detail::dot_vec(p, Ap);
    for (std::size_t u = 0; u < n; ++u) {
      x[u] += alpha * p[u];
      r[u] -= alpha * Ap[u];
    }
    const double rr_new = detail::dot_vec(r, r);
    const double bta = rr_new / rr;
    rr = rr_new;
    for (std::size_t u = 0; u < n; ++u) p[u] = r[u] + bta * p[u];
  }
  rep.iterations = it;
  rep.rel_residual = std::sqrt(rr) / bnorm;
  if (report) *report = rep;
  if (rep.rel_residual > opt.rel_tol)
    throw NumericalError("poisson_solve_ball: CG did not converge in " + std::to_string(it) +
                         " iterations, relative residual " + std::to_string(rep.rel_residual));
  for (std::size_t u = 0; u < n; ++u) beta.values[L.voxel[u]] = x[u];
  return beta;
}

//! ||Lap_h beta - q||_2 / ||q||_2 over voxels inside the ball, with the
//! solver's discrete operator; 0 when both vanish.
inline double residual_check(const VolumeGrid& q, const VolumeGrid& beta, double B,
                             double theta_min = 1e-3) {
  if (!q.same_shape(beta)) throw DomainError("residual_check: grid mismatch");
  const detail::BallLaplacian L(q, B, theta_min);
  std::vector<double> x(L.size()), y(L.size());
  for (std::size_t u = 0; u < L.size(); ++u) x[u] = beta.values[L.voxel[u]];
  L.apply_neg(x, y);
  double num = 0, den = 0;
  for (std::size_t u = 0; u < L.size(); ++u) {
    const double qv = q.values[L.voxel[u]];
    num += sq(-y[u] / L.h2 - qv);
    den += qv * qv;
  }
  if (den == 0) return num == 0 ? 0.0 : std::sqrt(num);
  return std::sqrt(num / den);
}

} // namespace pisp
