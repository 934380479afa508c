// SPDX-License-Identifier: Apache-2.0
//! \file abelgeo.hpp
//! Amplitude path: g = -8 pi A + 2 / |x - y| per chord, angular Fourier
//! modes in midpoint-polar coordinates, Abel operator L, second-kind
//! Volterra equation for p_n = q_n (B_z^2 - r^2) r, and resummation to q.
#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "observables.hpp"
#include "quadrature.hpp"
#include "spline.hpp"
#include "volume.hpp"

namespace pisp {

using cplx = std::complex<double>;

//! g(x, y) sampled on midpoint-polar coordinates: data[ia * n_rho + j] is g
//! for the chord whose midpoint is rho_j (cos alpha_ia, sin alpha_ia).
struct WeightedRayData {
  double z = 0;
  double B_z = 1;   //!< slice radius of S_z
  double rho0 = 0;  //!< support radius sqrt(R^2 - z^2)
  std::vector<double> rho;
  std::vector<double> alphas;
  std::vector<double> data;
  std::vector<std::string> warnings;

  std::size_t n_rho() const { return rho.size(); }
  std::size_t n_alpha() const { return alphas.size(); }
  double at(std::size_t ia, std::size_t j) const { return data[ia * n_rho() + j]; }
};

//! Complex radial profiles for modes n = -N..N; values[(n + N) * n_r + j].
struct ModeTable {
  double z = 0;
  double B_z = 1;
  double rho0 = 0;
  int N = 0;
  std::vector<double> r;
  std::vector<cplx> values;
  std::string quantity = "g";  //!< "g": modes of 4 (B_z^2 - rho^2) g; "p": Volterra solutions

  std::size_t n_r() const { return r.size(); }
  cplx& at(int n, std::size_t j) { return values[std::size_t(n + N) * n_r() + j]; }
  cplx at(int n, std::size_t j) const { return values[std::size_t(n + N) * n_r() + j]; }
};

inline double g_from_amplitude(double A, double dist) {
  if (!(dist > 0)) throw DomainError("g: degenerate chord with |x - y| = 0");
  const double g = -8.0 * kPi * A + 2.0 / dist;
  // Cancellation residue of the two terms is treated as zero.
  return std::abs(g) <= 1e-12 * (2.0 / dist) ? 0.0 : g;
}

//! Collects g for one slice. Chords with s < 0 map to (|s|, alpha + pi);
//! both copies of a chord are averaged, and s = 0 chords are skipped.
inline WeightedRayData assemble_g(const ObservablesTable& table, double z, const BallConfig& cfg) {
  const auto sl = select_slice(table, z);
  WeightedRayData w;
  w.z = z;
  w.B_z = slice_radius(z, cfg);
  w.rho0 = support_radius(z, cfg);
  for (double s : sl.offsets)
    if (s > 0) w.rho.push_back(s);
  w.alphas = sl.alphas;
  if (w.rho.empty()) throw DomainError("assemble_g: no chords with s > 0 in slice");
  w.data.assign(w.n_alpha() * w.n_rho(), 0.0);
  std::vector<int> count(w.data.size(), 0);
  for (const ObsRow* r : sl.rows) {
    if (r->s == 0) continue;
    const double rho = std::abs(r->s);
    const double a = r->s > 0 ? r->alpha : wrap_angle(r->alpha + kPi);
    const int j = detail::find_index(w.rho, rho, 1e-12);
    int ia = detail::find_index(w.alphas, a, 1e-9);
    if (ia < 0 && std::abs(a - kTwoPi) < 1e-9) ia = detail::find_index(w.alphas, 0.0, 1e-9);
    if (j < 0 || ia < 0) continue;
    const std::size_t k = std::size_t(ia) * w.n_rho() + j;
    w.data[k] += g_from_amplitude(r->A_hat, r->dist);
    ++count[k];
  }
  std::size_t missing = 0;
  for (std::size_t k = 0; k < w.data.size(); ++k) {
    if (count[k] > 0) w.data[k] /= count[k];
    else ++missing;
  }
  if (missing > 0)
    w.warnings.push_back("slice z=" + std::to_string(z) + ": " + std::to_string(missing) +
                         " (rho, alpha) samples without a chord, set to 0");
  return w;
}

//! Largest mode count the angular grid resolves: n_alpha >= 4N + 2.
inline int max_modes(std::size_t n_alpha) { return (static_cast<int>(n_alpha) - 2) / 4; }

//! Discrete Fourier coefficients over alpha of 4 (B_z^2 - rho^2) g, i.e. of
//! |x - y|^2 g, which is the Radon transform of q (B_z^2 - r^2).
inline ModeTable fourier_modes(const WeightedRayData& w, int N) {
  if (N < 0) throw ConfigError("fourier_modes: N must be >= 0");
  if (w.n_alpha() < std::size_t(4 * N + 2))
    throw ConfigError("fourier_modes: resolution error, n_alpha = " + std::to_string(w.n_alpha()) +
                      " < 4N + 2 = " + std::to_string(4 * N + 2));
  const double da = kTwoPi / w.n_alpha();
  for (std::size_t i = 0; i < w.n_alpha(); ++i)
    if (std::abs(std::remainder(w.alphas[i] - w.alphas[0] - i * da, kTwoPi)) > 1e-9)
      throw ConfigError("fourier_modes: angles must be uniform over (0, 2 pi]");
  ModeTable m;
  m.z = w.z;
  m.B_z = w.B_z;
  m.rho0 = w.rho0;
  m.N = N;
  m.r = w.rho;
  m.values.assign(std::size_t(2 * N + 1) * w.n_rho(), cplx{});
  for (int n = 0; n <= N; ++n) {
    std::vector<cplx> e(w.n_alpha());
    for (std::size_t i = 0; i < w.n_alpha(); ++i)
      e[i] = std::polar(1.0 / w.n_alpha(), -n * w.alphas[i]);
    for (std::size_t j = 0; j < w.n_rho(); ++j) {
      const double weight = 4.0 * (sq(w.B_z) - sq(w.rho[j]));
      cplx acc{};
      for (std::size_t i = 0; i < w.n_alpha(); ++i) acc += w.at(i, j) * e[i];
      acc *= weight;
      m.at(n, j) = acc;
      m.at(-n, j) = std::conj(acc);
    }
    if (n == 0)
      for (std::size_t j = 0; j < w.n_rho(); ++j) m.at(0, j) = m.at(0, j).real();
  }
  return m;
}

//! L(h)(s) = (1/pi) int_s^rho0 h(rho) rho / sqrt(rho^2 - s^2) d rho, with
//! rho = sqrt(s^2 + u^2) and Gauss-Legendre in u.
template <typename F> auto abel_L(F&& h, double s, double rho0, int order = 64) {
  if (s >= rho0) throw DomainError("abel_L: s must be < rho0");
  if (s < 0) throw DomainError("abel_L: s must be >= 0");
  const double U = std::sqrt(rho0 * rho0 - s * s);
  return gauss_legendre(order).integrate(
             [&](double u) { return h(std::sqrt(s * s + u * u)); }, 0.0, U) /
         kPi;
}

namespace detail {

//! Abel operator applied to a spline, integrating piece by piece between the
//! spline knots mapped to u; zero for s >= rho0.
template <typename T>
T abel_L_spline(const BasicCubicSpline<T>& h, double s, double rho0, int per_piece = 8) {
  if (s >= rho0) return T{};
  const auto& gl = gauss_legendre(per_piece);
  const auto& k = h.knots();
  T acc{};
  double lo = s;
  std::size_t i = h.piece(s);
  while (lo < rho0) {
    double hi = i + 1 < k.size() ? std::min(k[i + 1], rho0) : rho0;
    if (hi <= lo) {
      ++i;
      continue;
    }
    const double ua = std::sqrt(std::max(0.0, lo * lo - s * s));
    const double ub = std::sqrt(std::max(0.0, hi * hi - s * s));
    const double c = 0.5 * (ub - ua), m = 0.5 * (ub + ua);
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double u = m + c * gl.nodes[q];
      acc += gl.weights[q] * c * h.eval(i, std::sqrt(s * s + u * u));
    }
    lo = hi;
    if (i + 2 < k.size()) ++i;
  }
  return acc / kPi;
}

//! Geometrically graded panels on [0, pi] refined toward theta = pi, where
//! the kernels vary on a scale ~ s / r.
template <typename F> double graded_theta_integral(F&& f, double t, int order) {
  const auto& gl = gauss_legendre(order);
  double acc = 0;
  double hi = kPi, w = std::max(2.0 * t, 1e-300);
  while (hi > 0) {
    const double lo = std::max(0.0, hi - w);
    acc += gl.integrate(f, lo, hi);
    hi = lo;
    w *= 4.0;
  }
  return acc;
}

inline double theta_cos_ratio(double theta, double t) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  return std::min(1.0, std::sqrt(c * c + t * t * s * s));
}

} // namespace detail

//! Q_n(r, s) = (1/pi) int_0^pi cos(n arccos(sqrt(r^2 cos^2(th/2) + s^2 sin^2(th/2)) / r)) d th.
inline double kernel_Q(int n, double r, double s, int order = 64) {
  if (!(s > 0) || s > r) throw DomainError("kernel_Q: need 0 < s <= r");
  const double t = s / r;
  return gauss_legendre(order).integrate(
             [&](double th) { return std::cos(n * std::acos(detail::theta_cos_ratio(th, t))); },
             0.0, kPi) /
         kPi;
}

//! T~_n as a function of t = s / r in (0, 1]:
//! (n t / pi) int_0^pi sin(n arccos x) sin(th/2) / x d th, x = sqrt(cos^2 + t^2 sin^2).
inline double kernel_T_tilde_ratio(int n, double t, int order = 32) {
  if (n == 0 || t <= 0) return 0.0;
  if (t > 1) throw DomainError("kernel_T_tilde: need s <= r");
  const double I = detail::graded_theta_integral(
      [&](double th) {
        const double x = detail::theta_cos_ratio(th, t);
        return std::sin(n * std::acos(x)) * std::sin(0.5 * th) / x;
      },
      t, order);
  return n * t * I / kPi;
}

//! Continuous factor T~_n(r, s) = T_n(r, s) sqrt(r^2 - s^2).
inline double kernel_T_tilde(int n, double r, double s, int order = 32) {
  if (!(s >= 0) || s > r || !(r > 0)) throw DomainError("kernel_T_tilde: need 0 <= s <= r, r > 0");
  return kernel_T_tilde_ratio(n, s / r, order);
}

//! T_n(r, s) = d/ds Q_n(r, s), weakly singular at r = s.
inline double kernel_T(int n, double r, double s, int order = 32) {
  if (!(s > 0) || r <= s) throw DomainError("kernel_T: need 0 < s < r");
  return kernel_T_tilde(n, r, s, order) / std::sqrt(r * r - s * s);
}

//! Discrete Volterra operator on s_i = i * delta, i = 0..M:
//! (K p)_i = sum_j K[i][j] p_j approximates int_{s_i}^{rho0} T_n(r, s_i) p(r) dr
//! for piecewise-linear p. Each hat function is integrated against
//! T~_n(r, s) / sqrt(r^2 - s^2) with r = s + v^2, which removes the
//! singular factor; K does not depend on delta.
struct VolterraOperator {
  int n = 0, M = 0;
  std::vector<double> K;  //!< (M + 1) x (M + 1), row-major, upper triangular

  double operator()(int i, int j) const { return K[std::size_t(i) * (M + 1) + j]; }
};

inline VolterraOperator build_volterra_operator(int n, int M, int order = 8) {
  if (M < 2) throw ConfigError("volterra: need at least 2 radial intervals");
  VolterraOperator op;
  op.n = n;
  op.M = M;
  op.K.assign(std::size_t(M + 1) * (M + 1), 0.0);
  if (n == 0) return op;
  const auto& gl = gauss_legendre(order);
  for (int i = 1; i < M; ++i) {
    const double s = i;
    double* row = &op.K[std::size_t(i) * (M + 1)];
    for (int j = i; j < M; ++j) {
      const double va = std::sqrt(j - s), vb = std::sqrt(j + 1 - s);
      const double c = 0.5 * (vb - va), m = 0.5 * (vb + va);
      for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        const double v = m + c * gl.nodes[q];
        const double r = s + v * v;
        const double w = gl.weights[q] * c * 2.0 / std::sqrt(2.0 * s + v * v) *
                         kernel_T_tilde_ratio(n, s / r);
        row[j] += w * (j + 1 - r);
        row[j + 1] += w * (r - j);
      }
    }
  }
  return op;
}

//! Shared read-only operators keyed by (|n|, M); T~_{-n} = -T~_n is not
//! needed because negative modes are solved through conjugate symmetry.
inline std::shared_ptr<const VolterraOperator> volterra_operator(int n, int M) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const VolterraOperator>> cache;
  const auto key = std::make_pair(n, M);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto op = std::make_shared<const VolterraOperator>(build_volterra_operator(n, M));
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, op).first->second;
}

struct VolterraOptions {
  double tol = 1e-10;      //!< max-norm change between sweeps
  bool relative = false;   //!< scale tol by max |rhs|
  int max_iter = 500;
};

template <typename T> struct VolterraResult {
  std::vector<T> p;
  int iterations = 0;
  double last_change = 0;
};

//! Successive approximation p^k = K p^{k-1} + rhs starting from p^0 = rhs.
//! The diagonal term of the product rule couples p_i to itself over the
//! first interval and is kept implicit, so each sweep divides by 1 - K_ii.
template <typename T>
VolterraResult<T> volterra_solve(const VolterraOperator& op, const std::vector<T>& rhs,
                                 const VolterraOptions& opt = {}) {
  const int M = op.M;
  if (rhs.size() != std::size_t(M + 1)) throw DomainError("volterra_solve: rhs size mismatch");
  for (int i = 0; i <= M; ++i)
    if (std::abs(1.0 - op(i, i)) < 1e-12)
      throw NumericalError("volterra_solve: singular diagonal at i = " + std::to_string(i));
  double scale = 1.0;
  if (opt.relative) {
    scale = 0;
    for (const auto& v : rhs) scale = std::max(scale, std::abs(v));
    if (scale == 0) scale = 1;
  }
  VolterraResult<T> res;
  res.p.resize(M + 1);
  for (int i = 0; i <= M; ++i) res.p[i] = rhs[i] / (1.0 - op(i, i));
  std::vector<T> next(M + 1);
  for (int it = 1; it <= opt.max_iter; ++it) {
    double change = 0;
    for (int i = 0; i <= M; ++i) {
      T acc = rhs[i];
      const double* row = &op.K[std::size_t(i) * (M + 1)];
      for (int j = i + 1; j <= M; ++j) acc += row[j] * res.p[j];
      acc /= (1.0 - row[i]);
      next[i] = acc;
      change = std::max(change, std::abs(acc - res.p[i]));
    }
    res.p.swap(next);
    res.iterations = it;
    res.last_change = change;
    if (!std::isfinite(change)) break;
    if (change < opt.tol * scale) return res;
  }
  throw NumericalError("volterra_solve: iteration diverged for n = " + std::to_string(op.n) +
                       " after " + std::to_string(res.iterations) +
                       " sweeps, last change " + std::to_string(res.last_change));
}

//! Uniform Volterra grid s_i = i rho0 / M.
inline std::vector<double> volterra_grid(double rho0, int M) {
  std::vector<double> s(M + 1);
  for (int i = 0; i <= M; ++i) s[i] = rho0 * i / M;
  return s;
}

//! Spline through g~_n on the data radii, mirrored by g~_n(-rho) = (-1)^n g~_n(rho)
//! and pinned to zero at +-rho0.
inline ComplexSpline mode_spline(const ModeTable& m, int n) {
  const std::size_t J = m.n_r();
  std::vector<double> x;
  std::vector<cplx> y;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  x.push_back(-m.rho0);
  y.push_back({});
  for (std::size_t j = J; j-- > 0;) {
    x.push_back(-m.r[j]);
    y.push_back(sign * m.at(n, j));
  }
  for (std::size_t j = 0; j < J; ++j) {
    x.push_back(m.r[j]);
    y.push_back(m.at(n, j));
  }
  if (m.r.back() < m.rho0 - 1e-12) {
    x.push_back(m.rho0);
    y.push_back({});
  }
  return ComplexSpline(std::move(x), std::move(y));
}

//! -d/ds L(g~_n)(s) on s_i = i rho0 / M: central differences with steps
//! delta / 4 and delta / 8 combined by Richardson extrapolation (one-sided at
//! s = 0). h must vanish at rho0.
inline std::vector<cplx> rhs_from_mode(const ComplexSpline& h, double rho0, int M) {
  const double delta = rho0 / M, hs = 0.25 * delta;
  auto L = [&](double s) { return detail::abel_L_spline(h, s, rho0); };
  std::vector<cplx> rhs(M + 1);
  rhs[0] = -(-3.0 * L(0.0) + 4.0 * L(hs) - L(2 * hs)) / (2 * hs);
  for (int i = 1; i < M; ++i) {
    const double s = i * delta;
    const cplx d1 = (L(s + hs) - L(s - hs)) / (2 * hs);
    const cplx d2 = (L(s + 0.5 * hs) - L(s - 0.5 * hs)) / hs;
    rhs[i] = -(4.0 * d2 - d1) / 3.0;
  }
  // h(rho0) = 0, so d/ds L vanishes at s = rho0.
  rhs[M] = 0.0;
  return rhs;
}

enum class AxisFill { zero, extend };

struct AbelOptions {
  int n_modes = -1;            //!< -1: largest N with n_alpha >= 4N + 2
  int radial_intervals = -1;   //!< M; -1: number of positive data radii
  double mode_floor = 1e-13;   //!< modes below this fraction of the largest are skipped
  AxisFill axis = AxisFill::zero;
  //! Scanning inward, a mode is zeroed from the first radius where |p_n|
  //! exceeds this multiple of max(|p_0|, |rhs_n|); 0 disables.
  double growth_guard = 2.0;
  VolterraOptions volterra{1e-10, true, 500};
  unsigned threads = 1;
};

struct AbelSliceInfo {
  double z = 0;
  int modes_solved = 0;
  int max_iterations = 0;
  double imag_residue = 0;  //!< max |Im q| / max |q| after resummation
  int masked_pixels = 0;
  int truncated_modes = 0;
  double r_min = 0;  //!< pixels with r < r_min are masked
};

//! p_n on the Volterra grid for n = -N..N (negative modes by conjugation).
inline ModeTable solve_modes(const ModeTable& g, const AbelOptions& opt, AbelSliceInfo* info = nullptr) {
  const int M = opt.radial_intervals > 0 ? opt.radial_intervals : static_cast<int>(g.n_r());
  ModeTable p;
  p.z = g.z;
  p.B_z = g.B_z;
  p.rho0 = g.rho0;
  p.N = g.N;
  p.quantity = "p";
  p.r = volterra_grid(g.rho0, M);
  p.values.assign(std::size_t(2 * g.N + 1) * (M + 1), cplx{});
  double peak = 0;
  for (const auto& v : g.values) peak = std::max(peak, std::abs(v));
  double p0_max = 0;
  for (int n = 0; n <= g.N; ++n) {
    double mx = 0;
    for (std::size_t j = 0; j < g.n_r(); ++j) mx = std::max(mx, std::abs(g.at(n, j)));
    if (mx == 0 || mx < opt.mode_floor * peak) continue;
    const auto rhs = rhs_from_mode(mode_spline(g, n), g.rho0, M);
    const auto op = volterra_operator(n, M);
    VolterraResult<cplx> res;
    try {
      res = volterra_solve(*op, rhs, opt.volterra);
    } catch (const NumericalError&) {
      if (n == 0 || opt.growth_guard <= 0) throw;
      if (info) ++info->truncated_modes;
      continue;
    }
    if (n == 0)
      for (const auto& v : res.p) p0_max = std::max(p0_max, std::abs(v));
    if (n > 0 && opt.growth_guard > 0) {
      double bound = p0_max;
      for (const auto& v : rhs) bound = std::max(bound, std::abs(v));
      bound *= opt.growth_guard;
      for (int i = M; i >= 0; --i)
        if (!(std::abs(res.p[i]) <= bound)) {
          std::fill(res.p.begin(), res.p.begin() + i + 1, cplx{});
          if (info) ++info->truncated_modes;
          break;
        }
    }
    for (int i = 0; i <= M; ++i) {
      p.at(n, i) = res.p[i];
      p.at(-n, i) = std::conj(res.p[i]);
    }
    if (info) {
      ++info->modes_solved;
      info->max_iterations = std::max(info->max_iterations, res.iterations);
    }
  }
  return p;
}

//! q~_n = p_n / ((B_z^2 - r^2) r) for r >= r_min = 2 delta, resummed over n
//! on a polar grid and resampled bilinearly onto an n x n slice of
//! half-width hw. Pixels with r < r_min are zero (or take q~_0(r_min) with
//! AxisFill::extend); pixels beyond rho0 are zero.
inline SliceImage modes_to_q(const ModeTable& p, int n, double hw, AxisFill axis = AxisFill::zero,
                             AbelSliceInfo* info = nullptr) {
  const int M = static_cast<int>(p.n_r()) - 1;
  const double delta = p.rho0 / M, r_min = 2 * delta;
  const int n_phi = std::max(256, 4 * p.N + 4);
  std::vector<double> polar(std::size_t(M + 1) * n_phi, 0.0);
  double imag = 0, peak = 0;
  std::vector<cplx> qn(2 * p.N + 1);
  for (int i = 0; i <= M; ++i) {
    const double r = p.r[i];
    if (r < r_min - 1e-12 * delta) continue;
    const double wgt = (sq(p.B_z) - r * r) * r;
    if (!(wgt > 0)) throw DomainError("modes_to_q: weight vanishes inside the grid");
    for (int k = -p.N; k <= p.N; ++k) qn[k + p.N] = p.at(k, i) / wgt;
    for (int l = 0; l < n_phi; ++l) {
      const double phi = kTwoPi * l / n_phi;
      cplx acc{};
      for (int k = -p.N; k <= p.N; ++k)
        if (qn[k + p.N] != cplx{}) acc += qn[k + p.N] * std::polar(1.0, k * phi);
      polar[std::size_t(i) * n_phi + l] = acc.real();
      imag = std::max(imag, std::abs(acc.imag()));
      peak = std::max(peak, std::abs(acc.real()));
    }
  }
  if (axis == AxisFill::extend) {
    const int i0 = static_cast<int>(std::ceil(r_min / delta - 1e-9));
    const double q0 = (p.at(0, i0) / ((sq(p.B_z) - sq(p.r[i0])) * p.r[i0])).real();
    for (int i = 0; i < i0; ++i)
      for (int l = 0; l < n_phi; ++l) polar[std::size_t(i) * n_phi + l] = q0;
  }
  SliceImage img(p.z, n, hw);
  int masked = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = img.coord(i), y = img.coord(j);
      const double r = std::hypot(x, y);
      if (r > p.rho0) continue;
      if (r < r_min && axis == AxisFill::zero) {
        ++masked;
        continue;
      }
      double phi = std::atan2(y, x);
      if (phi < 0) phi += kTwoPi;
      const double fr = std::min(r / delta, double(M) - 1e-12);
      const int ir = static_cast<int>(fr);
      const double tr = fr - ir;
      const double fp = phi / kTwoPi * n_phi;
      const int ip = static_cast<int>(fp) % n_phi;
      const double tp = fp - std::floor(fp);
      const int ip1 = (ip + 1) % n_phi;
      auto P = [&](int a, int b) { return polar[std::size_t(a) * n_phi + b]; };
      img.at(i, j) = (1 - tr) * ((1 - tp) * P(ir, ip) + tp * P(ir, ip1)) +
                     tr * ((1 - tp) * P(ir + 1, ip) + tp * P(ir + 1, ip1));
    }
  if (info) {
    info->imag_residue = peak > 0 ? imag / peak : 0.0;
    info->masked_pixels = masked;
    info->r_min = r_min;
  }
  return img;
}

struct AbelResult {
  std::vector<SliceImage> slices;  //!< q per slice, cfg.grid_n^2 over [-B, B]^2
  std::vector<AbelSliceInfo> info;
  VolumeGrid q;                    //!< slices stacked onto the cfg.grid_n^3 cube
  std::vector<std::string> warnings;
};

//! Runs the amplitude path for every slice in the table.
inline AbelResult reconstruct_q_abel(const ObservablesTable& table, const BallConfig& cfg,
                                     const AbelOptions& opt = {}) {
  cfg.validate();
  const auto heights = slice_heights(table);
  AbelResult out;
  out.slices.resize(heights.size());
  out.info.resize(heights.size());
  std::vector<std::vector<std::string>> warn(heights.size());
  parallel_for(heights.size(), opt.threads, [&](std::size_t k) {
    const auto w = assemble_g(table, heights[k], cfg);
    warn[k] = w.warnings;
    const int N = opt.n_modes >= 0 ? opt.n_modes : max_modes(w.n_alpha());
    const auto g = fourier_modes(w, N);
    AbelSliceInfo& info = out.info[k];
    info.z = heights[k];
    const auto p = solve_modes(g, opt, &info);
    out.slices[k] = modes_to_q(p, cfg.grid_n, cfg.B, opt.axis, &info);
    if (info.masked_pixels > 0)
      warn[k].push_back("slice z=" + std::to_string(heights[k]) + ": " +
                        std::to_string(info.masked_pixels) + " pixels below r_min masked to 0");
  });
  for (auto& w : warn) out.warnings.insert(out.warnings.end(), w.begin(), w.end());
  out.q = stack_slices(out.slices, VolumeGrid::cube(cfg.B, cfg.grid_n), cfg.R);
  return out;
}

} // namespace pisp
