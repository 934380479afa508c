// SPDX-License-Identifier: Apache-2.0
//! \file radon.hpp
//! Travel-time path: per-slice parallel-beam sinograms of h = tau - |x - y|
//! inverted by filtered backprojection and stacked into a volume.
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "core.hpp"
#include "fft.hpp"
#include "geometry.hpp"
#include "observables.hpp"
#include "volume.hpp"

namespace pisp {

//! data[ia * n_s + is] holds the line integral over {<r, nu(alpha_ia)> = s_is}.
struct Sinogram {
  double z = 0;
  std::vector<double> alphas;
  std::vector<double> s_values;
  std::vector<double> data;
  std::string quantity = "h";
  std::vector<std::string> warnings;

  std::size_t n_alpha() const { return alphas.size(); }
  std::size_t n_s() const { return s_values.size(); }
  double& at(std::size_t ia, std::size_t is) { return data[ia * n_s() + is]; }
  double at(std::size_t ia, std::size_t is) const { return data[ia * n_s() + is]; }
};

enum class Apodization { none, cosine };
enum class Interpolation { bilinear, nearest };

struct FbpOptions {
  Apodization window = Apodization::cosine;
  Interpolation interp = Interpolation::bilinear;
};

//! Sinogram of h = tau_hat - dist on the slice's (alpha, s) grid. Missing
//! chords are left at zero and reported in warnings.
inline Sinogram assemble_h_sinogram(const ObservablesTable& table, double z) {
  const auto sl = select_slice(table, z);
  Sinogram sg;
  sg.z = z;
  sg.alphas = sl.alphas;
  sg.s_values = sl.offsets;
  sg.data.assign(sg.n_alpha() * sg.n_s(), 0.0);
  std::vector<char> seen(sg.data.size(), 0);
  for (const ObsRow* r : sl.rows) {
    const int ia = detail::find_index(sg.alphas, r->alpha, 1e-9);
    const int is = detail::find_index(sg.s_values, r->s, 1e-12);
    sg.at(ia, is) = r->tau_hat - r->dist;
    seen[std::size_t(ia) * sg.n_s() + is] = 1;
  }
  const auto missing = std::count(seen.begin(), seen.end(), 0);
  if (missing > 0)
    sg.warnings.push_back("slice z=" + std::to_string(z) + ": " + std::to_string(missing) +
                          " chords missing from the observables table, set to 0");
  return sg;
}

namespace detail {

inline double uniform_step(const std::vector<double>& v, const char* what) {
  if (v.size() < 2) throw ConfigError(std::string("fbp: ") + what + " grid too short");
  const double h = (v.back() - v.front()) / (v.size() - 1);
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i] - v[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw ConfigError(std::string("fbp: unsupported non-uniform ") + what + " grid");
  return h;
}

} // namespace detail

//! Filtered backprojection onto an n x n image covering [-hw, hw]^2.
//! Ramp filter: spatial band-limited kernel h(0) = 1/(4 ds^2),
//! h(odd m) = -1/(m pi ds)^2, applied in the frequency domain with optional
//! cosine apodization; angles may cover either pi or 2 pi.
inline SliceImage inverse_radon_fbp(const Sinogram& sg, int n, double half_width,
                                    const FbpOptions& opt = {}) {
  if (sg.n_alpha() < 32 || sg.n_s() < 32)
    throw ConfigError("fbp: need at least 32 angles and 32 offsets");
  const double dalpha = detail::uniform_step(sg.alphas, "angle");
  const double ds = detail::uniform_step(sg.s_values, "offset");
  const double coverage = dalpha * sg.n_alpha();
  double angle_weight;
  if (std::abs(coverage - kTwoPi) < 1e-6) angle_weight = 0.5 * dalpha;
  else if (std::abs(coverage - kPi) < 1e-6) angle_weight = dalpha;
  else throw ConfigError("fbp: unsupported angular coverage (need pi or 2 pi)");

  SliceImage img(sg.z, n, half_width);
  // Extend the offset axis with zeros so filtered projections cover every pixel.
  const double reach = half_width * std::sqrt(2.0) + ds;
  const int pad_lo = std::max(0, static_cast<int>(std::ceil((sg.s_values.front() + reach) / ds)));
  const int pad_hi = std::max(0, static_cast<int>(std::ceil((reach - sg.s_values.back()) / ds)));
  const int ns = static_cast<int>(sg.n_s());
  const int next = ns + pad_lo + pad_hi;
  const double s_start = sg.s_values.front() - pad_lo * ds;
  const std::size_t P = next_pow2(2 * static_cast<std::size_t>(next));

  FftPlan plan(P);
  auto& buf = plan.buffer();
  for (std::size_t m = 0; m < P; ++m) {
    const long d = m <= P / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(P);
    double v = 0;
    if (d == 0) v = 1.0 / (4.0 * ds * ds);
    else if (d % 2 != 0) v = -1.0 / sq(kPi * d * ds);
    buf[m] = v;
  }
  plan.forward();
  std::vector<std::complex<double>> kernel = buf;
  if (opt.window == Apodization::cosine)
    for (std::size_t m = 0; m < P; ++m) {
      const double f = (m <= P / 2 ? double(m) : double(m) - double(P)) / double(P);
      kernel[m] *= std::cos(kPi * f);
    }

  std::vector<std::vector<double>> filtered(sg.n_alpha(), std::vector<double>(next));
  for (std::size_t ia = 0; ia < sg.n_alpha(); ++ia) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int j = 0; j < ns; ++j) buf[pad_lo + j] = sg.at(ia, j);
    plan.forward();
    for (std::size_t m = 0; m < P; ++m) buf[m] *= kernel[m];
    plan.inverse();
    for (int j = 0; j < next; ++j) filtered[ia][j] = ds * buf[j].real();
  }

  std::vector<double> ca(sg.n_alpha()), sa(sg.n_alpha());
  for (std::size_t ia = 0; ia < sg.n_alpha(); ++ia) {
    ca[ia] = std::cos(sg.alphas[ia]);
    sa[ia] = std::sin(sg.alphas[ia]);
  }
  for (int j = 0; j < n; ++j) {
    const double y = img.coord(j);
    for (int i = 0; i < n; ++i) {
      const double x = img.coord(i);
      double acc = 0;
      for (std::size_t ia = 0; ia < sg.n_alpha(); ++ia) {
        const double u = (x * ca[ia] + y * sa[ia] - s_start) / ds;
        const auto& q = filtered[ia];
        if (opt.interp == Interpolation::nearest) {
          const long k = std::lround(u);
          if (k >= 0 && k < next) acc += q[k];
        } else {
          const long k = static_cast<long>(std::floor(u));
          const double t = u - k;
          if (k >= 0 && k + 1 < next) acc += (1 - t) * q[k] + t * q[k + 1];
        }
      }
      img.at(i, j) = angle_weight * acc;
    }
  }
  return img;
}

struct RadonOptions {
  FbpOptions fbp;
  unsigned threads = 1;
};

//! Slice-wise FBP of every slice in the table, stacked into a cfg.grid_n^3
//! volume over [-B, B]^3; zero beyond |z| >= R and outside the ball Y.
inline VolumeGrid reconstruct_beta_radon(const ObservablesTable& table, const BallConfig& cfg,
                                         const RadonOptions& opt = {},
                                         std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  const auto heights = slice_heights(table);
  std::vector<SliceImage> slices(heights.size());
  std::vector<std::vector<std::string>> warn(heights.size());
  parallel_for(heights.size(), opt.threads, [&](std::size_t k) {
    const auto sg = assemble_h_sinogram(table, heights[k]);
    warn[k] = sg.warnings;
    slices[k] = inverse_radon_fbp(sg, cfg.grid_n, cfg.B, opt.fbp);
  });
  if (warnings)
    for (auto& w : warn) warnings->insert(warnings->end(), w.begin(), w.end());
  auto vol = stack_slices(slices, VolumeGrid::cube(cfg.B, cfg.grid_n), cfg.R);
  for (int k = 0; k < vol.nz; ++k)
    for (int j = 0; j < vol.ny; ++j)
      for (int i = 0; i < vol.nx; ++i)
        if (norm(vol.position(i, j, k)) >= cfg.B) vol.at(i, j, k) = 0;
  return vol;
}

} // namespace pisp
