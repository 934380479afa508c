// SPDX-License-Identifier: Apache-2.0
//! \file volume.hpp
//! Uniform Cartesian scalar fields: 2-D slice images and 3-D volumes.
#pragma once

#include <vector>

#include "core.hpp"

namespace pisp {

//! n x n pixels covering [-half_width, half_width]^2 in the plane x3 = z.
//! Pixel (i, j) has centre (-hw + (i + 1/2) h, -hw + (j + 1/2) h), stored at j * n + i.
struct SliceImage {
  double z = 0;
  int n = 0;
  double half_width = 1;
  std::vector<double> values;

  SliceImage() = default;
  SliceImage(double z_, int n_, double hw) : z(z_), n(n_), half_width(hw), values(std::size_t(n_) * n_, 0.0) {}

  double spacing() const { return 2.0 * half_width / n; }
  double coord(int i) const { return -half_width + (i + 0.5) * spacing(); }
  double& at(int i, int j) { return values[std::size_t(j) * n + i]; }
  double at(int i, int j) const { return values[std::size_t(j) * n + i]; }
};

//! Voxel (i, j, k) has centre origin + spacing * (i, j, k) and is stored at
//! (k * ny + j) * nx + i (x fastest, z slowest).
struct VolumeGrid {
  int nx = 0, ny = 0, nz = 0;
  double spacing = 1;
  Vec3 origin;
  std::vector<double> values;

  VolumeGrid() = default;
  VolumeGrid(int nx_, int ny_, int nz_, double h, Vec3 o)
      : nx(nx_), ny(ny_), nz(nz_), spacing(h), origin(o), values(std::size_t(nx_) * ny_ * nz_, 0.0) {}

  //! n^3 voxels tiling the cube [-B, B]^3.
  static VolumeGrid cube(double B, int n) {
    const double h = 2.0 * B / n;
    const double o = -B + 0.5 * h;
    return VolumeGrid(n, n, n, h, {o, o, o});
  }

  std::size_t size() const { return values.size(); }
  std::size_t index(int i, int j, int k) const { return (std::size_t(k) * ny + j) * nx + i; }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 position(int i, int j, int k) const {
    return origin + spacing * Vec3{double(i), double(j), double(k)};
  }
  bool same_shape(const VolumeGrid& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz && spacing == o.spacing && origin == o.origin;
  }

  //! Samples f(position) at every voxel.
  template <typename F> static VolumeGrid sample(const VolumeGrid& shape, F&& f) {
    VolumeGrid g = shape;
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) g.at(i, j, k) = f(g.position(i, j, k));
    return g;
  }
};

//! Bilinear interpolation of a slice image at (x, y); zero outside the grid.
inline double bilinear(const SliceImage& img, double x, double y) {
  const double h = img.spacing();
  const double fx = (x + img.half_width) / h - 0.5, fy = (y + img.half_width) / h - 0.5;
  const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
  const double tx = fx - i0, ty = fy - j0;
  auto px = [&](int i, int j) {
    return (i < 0 || j < 0 || i >= img.n || j >= img.n) ? 0.0 : img.at(i, j);
  };
  return (1 - tx) * (1 - ty) * px(i0, j0) + tx * (1 - ty) * px(i0 + 1, j0) +
         (1 - tx) * ty * px(i0, j0 + 1) + tx * ty * px(i0 + 1, j0 + 1);
}

//! Stacks slices at increasing heights into `shape` by linear interpolation
//! in z; slices are resampled in-plane when their grid differs from the
//! volume's. Outside (-zero_at, zero_at) the field is zero, and between the
//! outermost slice and +-zero_at it tapers linearly to zero.
inline VolumeGrid stack_slices(const std::vector<SliceImage>& slices, const VolumeGrid& shape,
                               double zero_at) {
  VolumeGrid vol = shape;
  std::fill(vol.values.begin(), vol.values.end(), 0.0);
  if (slices.empty()) return vol;
  for (int k = 0; k < vol.nz; ++k) {
    const double z = vol.position(0, 0, k).z;
    if (std::abs(z) >= zero_at) continue;
    // Bracketing slices; -1 / size() stand for the zero planes at -+zero_at.
    int hi = 0;
    while (hi < int(slices.size()) && slices[hi].z < z) ++hi;
    const int lo = hi - 1;
    const double zlo = lo >= 0 ? slices[lo].z : -zero_at;
    const double zhi = hi < int(slices.size()) ? slices[hi].z : zero_at;
    const double t = zhi > zlo ? (z - zlo) / (zhi - zlo) : 0.0;
    for (int j = 0; j < vol.ny; ++j)
      for (int i = 0; i < vol.nx; ++i) {
        const Vec3 p = vol.position(i, j, k);
        auto sample = [&](int idx) -> double {
          if (idx < 0 || idx >= int(slices.size())) return 0.0;
          const auto& s = slices[idx];
          if (s.n == vol.nx && s.n == vol.ny && std::abs(s.coord(i) - p.x) < 1e-12 &&
              std::abs(s.coord(j) - p.y) < 1e-12)
            return s.at(i, j);
          return bilinear(s, p.x, p.y);
        };
        vol.at(i, j, k) = (1 - t) * sample(lo) + t * sample(hi);
      }
  }
  return vol;
}

} // namespace pisp
