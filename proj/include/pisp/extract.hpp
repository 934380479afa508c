// SPDX-License-Identifier: Apache-2.0
//! \file extract.hpp
//! Recovery of the amplitude A(x, y) and travel time tau(x, y) of one chord
//! from its intensity-versus-frequency record.
//!
//! f1 oscillates as C - D cos(k delta) with delta = tau - |x - y|, peak value
//! (A + a0)^2 and successive maxima 2 pi / delta apart (a0 = 1/(4 pi |x-y|)).
//! Resolving delta needs Delta k <= (2 pi / delta) / 20 for 1e-4 accuracy and a
//! span k_max - k0 covering at least two periods, i.e. delta >= 4 pi / span.
#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "forward.hpp"

namespace pisp {

//! Raised when the record does not sample enough of the oscillation.
struct SpanError : NumericalError {
  explicit SpanError(const std::string& w) : NumericalError(w) {}
};

struct ExtractOptions {
  double los_tol = 1e-6;  //!< relative flatness threshold for line of sight
  bool robust = false;    //!< least-squares frequency and amplitude fit (noisy data)
};

enum class ExtractMethod { line_of_sight, peaks, model_fit };

struct ExtractionResult {
  double A_hat = 0;
  double tau_hat = 0;
  double dist = 0;
  bool line_of_sight = false;
  double quality = 0;  //!< RMS model residual relative to the series peak
  ExtractMethod method = ExtractMethod::peaks;
};

namespace detail {

inline void check_series(const KSeries& s, SeriesKind want) {
  if (s.kind != want) throw ConfigError("series has the wrong kind for this extraction");
  if (s.values.size() != static_cast<std::size_t>(s.grid.n_k) || s.values.size() < 3)
    throw NumericalError("degenerate data: series length does not match its k grid");
  for (double v : s.values)
    if (!std::isfinite(v)) throw NumericalError("degenerate data: non-finite intensity sample");
}

// Vertex of the parabola through (i-1, i, i+1); offset in samples and value.
inline std::pair<double, double> quadratic_peak(const std::vector<double>& v, std::size_t i) {
  const double fm = v[i - 1], f0 = v[i], fp = v[i + 1];
  const double den = fm - 2.0 * f0 + fp;
  if (den >= 0) return {0.0, f0};
  const double off = 0.5 * (fm - fp) / den;
  return {off, f0 - 0.25 * (fm - fp) * off};
}

// Exact peak of C + D cos(w (k - k_p)) through three samples spaced dk,
// given the angular frequency w. Returns offset (in k units) and peak value.
inline std::pair<double, double> cosine_peak(const std::vector<double>& v, std::size_t i,
                                             double w, double dk) {
  const double fm = v[i - 1], f0 = v[i], fp = v[i + 1];
  const double wd = w * dk;
  const double c = std::cos(wd) - 1.0, s = std::sin(wd);
  if (c == 0 || s == 0) return {0.0, f0};
  const double X = (0.5 * (fp + fm) - f0) / c;  // D cos(phi)
  const double Y = -0.5 * (fp - fm) / s;        // D sin(phi)
  const double D = std::hypot(X, Y);
  const double phi = std::atan2(Y, X);
  return {-phi / w, f0 - X + D};
}

struct Peak {
  std::size_t index = 0;
  double k = 0;
  double value = 0;
};

// One maximum per excursion above the mid level, excluding excursions that
// touch either end of the record (their peak may lie outside the span).
inline std::vector<Peak> find_peaks(const KSeries& s) {
  const auto& v = s.values;
  const double hi = *std::max_element(v.begin(), v.end());
  const double lo = *std::min_element(v.begin(), v.end());
  const double mid = 0.5 * (hi + lo), gate = mid + 0.25 * (hi - lo);
  std::vector<Peak> peaks;
  const std::size_t n = v.size();
  std::size_t i = 0;
  while (i < n) {
    if (v[i] <= mid) {
      ++i;
      continue;
    }
    std::size_t start = i, best = i;
    while (i < n && v[i] > mid) {
      if (v[i] > v[best]) best = i;
      ++i;
    }
    const bool touches_edge = start == 0 || i == n;
    if (!touches_edge && v[best] >= gate && best > 0 && best + 1 < n) {
      auto [off, val] = quadratic_peak(v, best);
      peaks.push_back({best, s.grid.k(static_cast<int>(best)) + off * s.grid.dk(), val});
    }
  }
  return peaks;
}

// Least-squares slope of peak positions against their cycle index.
inline double fit_period(const std::vector<Peak>& peaks, double period_guess) {
  std::vector<double> m(peaks.size()), k(peaks.size());
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    k[i] = peaks[i].k;
    m[i] = std::round((peaks[i].k - peaks[0].k) / period_guess);
  }
  const double nm = static_cast<double>(peaks.size());
  const double mm = std::accumulate(m.begin(), m.end(), 0.0) / nm;
  const double km = std::accumulate(k.begin(), k.end(), 0.0) / nm;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    sxy += (m[i] - mm) * (k[i] - km);
    sxx += (m[i] - mm) * (m[i] - mm);
  }
  if (sxx == 0) throw SpanError("fewer than two distinct maxima in the k span");
  return sxy / sxx;
}

struct PeakAnalysis {
  std::vector<Peak> peaks;
  double period = 0;  //!< 0 when fewer than two maxima were found
};

// Peaks refined with the cosine model once the period is known; iterated
// because the refined positions feed back into the period.
inline PeakAnalysis analyze_peaks(const KSeries& s) {
  PeakAnalysis out;
  out.peaks = find_peaks(s);
  if (out.peaks.size() < 2) return out;
  double period = out.peaks[1].k - out.peaks[0].k;
  for (int pass = 0; pass < 4; ++pass) {
    period = fit_period(out.peaks, period);
    const double w = kTwoPi / period;
    for (auto& p : out.peaks) {
      auto [off, val] = cosine_peak(s.values, p.index, w, s.grid.dk());
      p.k = s.grid.k(static_cast<int>(p.index)) + off;
      p.value = val;
    }
  }
  out.period = fit_period(out.peaks, period);
  return out;
}

// Linear least squares of C + D cos(wk) + E sin(wk); returns C + hypot(D, E)
// and the RMS residual.
inline std::pair<double, double> harmonic_fit_peak(const KSeries& s, double w) {
  double m[3][3] = {}, r[3] = {};
  for (int i = 0; i < s.grid.n_k; ++i) {
    const double k = s.grid.k(i);
    const double b[3] = {1.0, std::cos(w * k), std::sin(w * k)};
    for (int a = 0; a < 3; ++a) {
      r[a] += b[a] * s.values[i];
      for (int c = 0; c < 3; ++c) m[a][c] += b[a] * b[c];
    }
  }
  // Gaussian elimination on the 3x3 normal equations.
  for (int p = 0; p < 3; ++p) {
    for (int q = p + 1; q < 3; ++q) {
      const double f = m[q][p] / m[p][p];
      for (int c = p; c < 3; ++c) m[q][c] -= f * m[p][c];
      r[q] -= f * r[p];
    }
  }
  double x[3];
  for (int p = 2; p >= 0; --p) {
    double acc = r[p];
    for (int c = p + 1; c < 3; ++c) acc -= m[p][c] * x[c];
    x[p] = acc / m[p][p];
  }
  double ss = 0;
  for (int i = 0; i < s.grid.n_k; ++i) {
    const double k = s.grid.k(i);
    ss += sq(s.values[i] - (x[0] + x[1] * std::cos(w * k) + x[2] * std::sin(w * k)));
  }
  return {x[0] + std::hypot(x[1], x[2]), std::sqrt(ss / s.grid.n_k)};
}

// Frequency minimising the harmonic-fit residual near w0: coarse scan over
// +-20%, then golden section.
inline double refine_frequency(const KSeries& s, double w0) {
  auto res = [&](double w) { return harmonic_fit_peak(s, w).second; };
  const int n = 81;
  double best = w0, best_r = res(w0);
  const double lo0 = 0.8 * w0, step = 0.4 * w0 / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double w = lo0 + i * step;
    const double r = res(w);
    if (r < best_r) best_r = r, best = w;
  }
  double a = best - step, b = best + step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a), fc = res(c), fd = res(d);
  for (int it = 0; it < 60 && b - a > 1e-12 * w0; ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = res(c);
    } else {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = res(d);
    }
  }
  return 0.5 * (a + b);
}

} // namespace detail

//! True iff the series is flat: (max - min) <= tol * max(max, a0^2). An
//! all-zero record is the free chord (A = a0). Records spanning less than a
//! full period of a slow oscillation are indeterminate.
inline bool detect_line_of_sight(const KSeries& s, double tol = 1e-6) {
  detail::check_series(s, SeriesKind::F1);
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  const double scale = std::max(*hi, sq(free_amplitude(s.dist())));
  if (*hi - *lo <= tol * scale) return true;
  if (detail::find_peaks(s).empty())
    throw SpanError("line of sight indeterminate: record spans less than one period");
  return false;
}

//! A = sqrt(f1*) - a0 from the refined maximum f1* of the record. A flat
//! record has f1 = (A - a0)^2 and returns a0 + sqrt(f1).
inline double extract_A_from_f1(const KSeries& s, const ExtractOptions& opt = {}) {
  const double a0 = free_amplitude(s.dist());
  if (detect_line_of_sight(s, opt.los_tol)) {
    const double mean =
        std::accumulate(s.values.begin(), s.values.end(), 0.0) / s.values.size();
    return a0 + std::sqrt(std::max(0.0, mean));
  }
  const auto pa = detail::analyze_peaks(s);
  double fstar = 0;
  if (pa.period > 0 && opt.robust) {
    fstar = detail::harmonic_fit_peak(s, detail::refine_frequency(s, kTwoPi / pa.period)).first;
  } else if (pa.period > 0) {
    for (const auto& p : pa.peaks) fstar += p.value;
    fstar /= pa.peaks.size();
  } else if (!pa.peaks.empty()) {
    fstar = pa.peaks.front().value;
  } else {
    throw SpanError("extract_A_from_f1: no complete maximum inside the k span");
  }
  const double A = std::sqrt(std::max(0.0, fstar)) - a0;
  if (!(A > 0))
    throw NumericalError("extract_A_from_f1: inconsistent data, sqrt(f1*) <= 1/(4 pi |x-y|)");
  return A;
}

//! tau = |x - y| + 2 pi / (k3 - k2) with k3 - k2 the least-squares spacing of
//! all refined maxima in the record.
inline double extract_tau(const KSeries& s, const ExtractOptions& opt = {}) {
  if (detect_line_of_sight(s, opt.los_tol)) return s.dist();
  const auto pa = detail::analyze_peaks(s);
  if (pa.period <= 0) throw SpanError("extract_tau: fewer than two maxima inside the k span");
  if (opt.robust) return s.dist() + detail::refine_frequency(s, kTwoPi / pa.period);
  return s.dist() + kTwoPi / pa.period;
}

//! sqrt of the mean over the last quarter of the record.
inline double extract_A_from_f2(const KSeries& s) {
  detail::check_series(s, SeriesKind::F2);
  const std::size_t n = s.values.size(), start = n - std::max<std::size_t>(1, n / 4);
  const double mean =
      std::accumulate(s.values.begin() + start, s.values.end(), 0.0) / (n - start);
  if (!(mean > 0)) throw NumericalError("extract_A_from_f2: non-positive tail intensity");
  return std::sqrt(mean);
}

namespace detail {

// Equispaced samples of c - b cos(k delta) obey
// f[i+1] - 2 f[i] + f[i-1] = -4 sin^2(dk delta / 2) f[i] + D; a linear fit gives
// delta, then (c, b) and A = b / (2 a0).
inline bool prony_estimate(const KSeries& s, double& A, double& delta) {
  const int n = s.grid.n_k;
  const double a0 = free_amplitude(s.dist()), h = s.grid.dk();
  double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
  for (int i = 1; i + 1 < n; ++i) {
    const double x = s.values[i], y = (s.values[i + 1] - x) + (s.values[i - 1] - x);
    s11 += x * x;
    s12 += x;
    s22 += 1;
    r1 += x * y;
    r2 += y;
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 0)) return false;
  const double sin2 = -0.25 * (s22 * r1 - s12 * r2) / det;
  if (!(sin2 > 0) || sin2 > 1) return false;
  const double d = 2.0 * std::asin(std::sqrt(sin2)) / h;
  if (!(d > 0) || !std::isfinite(d)) return false;
  // f = c + b' cos(k d); b' = -2 A a0.
  double t11 = 0, t12 = 0, t22 = 0, q1 = 0, q2 = 0;
  for (int i = 0; i < n; ++i) {
    const double c = std::cos(s.grid.k(i) * d), f = s.values[i];
    t11 += 1;
    t12 += c;
    t22 += c * c;
    q1 += f;
    q2 += c * f;
  }
  const double det2 = t11 * t22 - t12 * t12;
  if (!(std::abs(det2) > 0)) return false;
  const double bp = (t11 * q2 - t12 * q1) / det2;
  const double a = -bp / (2.0 * a0);
  if (!(a > 0)) return false;
  A = a;
  delta = d;
  return true;
}

// Gauss-Newton on (A, delta) for f = A^2 + a0^2 - 2 A a0 cos(k delta), used
// when the record holds fewer than two maxima.
inline ExtractionResult fit_f1_model(const KSeries& s) {
  const double L = s.dist(), a0 = free_amplitude(L);
  const int n = s.grid.n_k;
  const double fmax = *std::max_element(s.values.begin(), s.values.end());
  const double scale = std::max(fmax, a0 * a0);

  auto sse = [&](double A, double d) {
    double acc = 0;
    for (int i = 0; i < n; ++i) {
      const double r = A * A + a0 * a0 - 2.0 * A * a0 * std::cos(s.grid.k(i) * d) - s.values[i];
      acc += r * r;
    }
    return acc;
  };
  double bestA = a0, bestD = 0;
  const bool closed = prony_estimate(s, bestA, bestD);
  if (closed && std::sqrt(sse(bestA, bestD) / n) <= 1e-9 * scale) {
    ExtractionResult r;
    r.A_hat = bestA;
    r.tau_hat = L + bestD;
    r.dist = L;
    r.quality = std::sqrt(sse(bestA, bestD) / n) / scale;
    r.method = ExtractMethod::model_fit;
    return r;
  }
  if (!closed) {
    // Coarse scan of delta up to two periods over the span, A from the
    // linear surrogate f - a0^2 = u + v (-2 a0 cos k delta) with v ~ A.
    const double dmax = 2.0 * kTwoPi / s.grid.span();
    double best = sse(a0, 0);
    const int stride = std::max(1, n / 200);
    for (int c = 1; c <= 64; ++c) {
      const double d = dmax * c / 64.0;
      double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
      for (int i = 0; i < n; i += stride) {
        const double b = -2.0 * a0 * std::cos(s.grid.k(i) * d), y = s.values[i] - a0 * a0;
        s11 += 1;
        s12 += b;
        s22 += b * b;
        r1 += y;
        r2 += b * y;
      }
      const double det = s11 * s22 - s12 * s12;
      if (std::abs(det) < 1e-300) continue;
      const double A = (s11 * r2 - s12 * r1) / det;
      if (!(A > 0)) continue;
      const double e = sse(A, d);
      if (e < best) {
        best = e;
        bestA = A;
        bestD = d;
      }
    }
    if (bestD == 0) bestD = dmax / 128.0;
  }
  double A = bestA, d = bestD, lambda = 1e-3;
  for (int it = 0; it < 100; ++it) {
    double jtj[2][2] = {}, jtr[2] = {};
    for (int i = 0; i < n; ++i) {
      const double k = s.grid.k(i), c = std::cos(k * d), sn = std::sin(k * d);
      const double r = A * A + a0 * a0 - 2.0 * A * a0 * c - s.values[i];
      const double ja = 2.0 * A - 2.0 * a0 * c, jd = 2.0 * A * a0 * k * sn;
      jtj[0][0] += ja * ja;
      jtj[0][1] += ja * jd;
      jtj[1][1] += jd * jd;
      jtr[0] += ja * r;
      jtr[1] += jd * r;
    }
    const double cur = sse(A, d);
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      const double m00 = jtj[0][0] * (1 + lambda), m11 = jtj[1][1] * (1 + lambda);
      const double det = m00 * m11 - jtj[0][1] * jtj[0][1];
      if (!(std::abs(det) > 0)) break;
      const double dA = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
      const double dd = -(-jtj[0][1] * jtr[0] + m00 * jtr[1]) / det;
      const double nA = A + dA, nd = std::abs(d + dd);
      const double e = sse(nA, nd);
      if (e < cur) {
        const bool tiny = std::abs(dA) <= 1e-15 * std::abs(A) && std::abs(dd) <= 1e-15 * (d + 1e-300);
        A = nA;
        d = nd;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = !tiny;
        break;
      }
      lambda *= 10;
    }
    if (!improved) break;
  }
  ExtractionResult r;
  r.A_hat = A;
  r.tau_hat = L + d;
  r.dist = L;
  r.quality = std::sqrt(sse(A, d) / n) / scale;
  r.method = ExtractMethod::model_fit;
  return r;
}

} // namespace detail

//! Full per-chord extraction: line-of-sight test, then the peak procedure,
//! falling back to a two-parameter model fit when the k span holds fewer than
//! two maxima.
inline ExtractionResult extract_chord(const KSeries& s, const ExtractOptions& opt = {}) {
  detail::check_series(s, SeriesKind::F1);
  ExtractionResult r;
  r.dist = s.dist();
  const double a0 = free_amplitude(r.dist);
  bool los = false;
  try {
    los = detect_line_of_sight(s, opt.los_tol);
  } catch (const SpanError&) {
    return detail::fit_f1_model(s);
  }
  if (los) {
    r.line_of_sight = true;
    r.method = ExtractMethod::line_of_sight;
    r.A_hat = extract_A_from_f1(s, opt);
    r.tau_hat = r.dist;
    return r;
  }
  const auto pa = detail::analyze_peaks(s);
  if (pa.period <= 0) return detail::fit_f1_model(s);
  r.tau_hat = extract_tau(s, opt);
  r.A_hat = extract_A_from_f1(s, opt);
  r.method = ExtractMethod::peaks;
  // Model residual as a quality figure.
  const double delta = r.tau_hat - r.dist;
  double ss = 0;
  for (int i = 0; i < s.grid.n_k; ++i)
    ss += sq(r.A_hat * r.A_hat + a0 * a0 - 2 * r.A_hat * a0 * std::cos(s.grid.k(i) * delta) -
             s.values[i]);
  r.quality = std::sqrt(ss / s.grid.n_k) / sq(r.A_hat + a0);
  return r;
}

} // namespace pisp
