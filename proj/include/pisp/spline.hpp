// SPDX-License-Identifier: Apache-2.0
//! \file spline.hpp
//! Natural cubic spline on strictly increasing knots.
#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "core.hpp"

namespace pisp {

//! Values may be real or complex; the second-derivative system is real.
template <typename T> class BasicCubicSpline {
public:
  BasicCubicSpline() = default;
  BasicCubicSpline(std::vector<double> x, std::vector<T> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("CubicSpline: need >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw DomainError("CubicSpline: knots must increase strictly");
    m_.assign(n, T{});
    if (n == 2) return;
    // Tridiagonal system for the second derivatives, m_0 = m_{n-1} = 0.
    std::vector<double> c(n, 0.0);
    std::vector<T> d(n, T{});
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6, b = (h0 + h1) / 3, cc = h1 / 6;
      const T r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double den = b - a * c[i - 1];
      c[i] = cc / den;
      d[i] = (r - a * d[i - 1]) / den;
    }
    for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  const std::vector<double>& knots() const { return x_; }

  std::size_t size() const { return x_.size(); }

  //! Index i of the piece [x_i, x_{i+1}] used for t (end pieces extend outward).
  std::size_t piece(double t) const {
    std::size_t i = std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
    return std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
  }

  T operator()(double t) const { return eval(piece(t), t); }

  T eval(std::size_t i, double t) const {
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h / 6.0);
  }

private:
  std::vector<double> x_;
  std::vector<T> y_, m_;
};

using CubicSpline = BasicCubicSpline<double>;
using ComplexSpline = BasicCubicSpline<std::complex<double>>;

} // namespace pisp
