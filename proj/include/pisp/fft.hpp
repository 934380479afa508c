// SPDX-License-Identifier: Apache-2.0
//! \file fft.hpp
//! Thin FFTW wrapper for 1-D complex transforms of a fixed length.
#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "core.hpp"

namespace pisp {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

//! Forward uses exp(-2 pi i jk/n); inverse() is scaled by 1/n.
class FftPlan {
public:
  explicit FftPlan(std::size_t n) : n_(n), buf_(n) {
    if (n == 0) throw DomainError("FftPlan: empty transform");
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }

  std::size_t size() const { return n_; }
  std::vector<std::complex<double>>& buffer() { return buf_; }

  void forward() { fftw_execute(fwd_); }
  void inverse() {
    fftw_execute(inv_);
    for (auto& x : buf_) x /= static_cast<double>(n_);
  }

private:
  std::size_t n_;
  std::vector<std::complex<double>> buf_;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

} // namespace pisp
