// SPDX-License-Identifier: Apache-2.0
//! \file observables.hpp
//! Per-chord extraction results gathered into a table keyed by (z, alpha, s).
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "core.hpp"
#include "extract.hpp"

namespace pisp {

struct ObsRow {
  double z = 0, alpha = 0, s = 0;
  double dist = 0;
  double A_hat = 0;
  double tau_hat = 0;
  bool line_of_sight = false;
  double quality = 0;
};

struct ObservablesTable {
  std::vector<ObsRow> rows;
};

//! Rows of the slice at height z, with the sorted distinct alphas and offsets
//! that index them.
struct SliceRows {
  std::vector<const ObsRow*> rows;
  std::vector<double> alphas;
  std::vector<double> offsets;
};

namespace detail {
inline void unique_sorted(std::vector<double>& v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || std::abs(x - out.back()) > tol) out.push_back(x);
  v.swap(out);
}

inline int find_index(const std::vector<double>& sorted, double x, double tol) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), x - tol);
  if (it == sorted.end() || std::abs(*it - x) > tol) return -1;
  return static_cast<int>(it - sorted.begin());
}
} // namespace detail

inline SliceRows select_slice(const ObservablesTable& table, double z, double tol = 1e-9) {
  SliceRows out;
  for (const auto& r : table.rows)
    if (std::abs(r.z - z) <= tol) {
      out.rows.push_back(&r);
      out.alphas.push_back(r.alpha);
      out.offsets.push_back(r.s);
    }
  if (out.rows.empty())
    throw DomainError("no observables for slice z = " + std::to_string(z) + " (missing slice)");
  detail::unique_sorted(out.alphas, 1e-9);
  detail::unique_sorted(out.offsets, 1e-12);
  return out;
}

//! Distinct slice heights present in the table, ascending.
inline std::vector<double> slice_heights(const ObservablesTable& table) {
  std::vector<double> z;
  for (const auto& r : table.rows) z.push_back(r.z);
  detail::unique_sorted(z, 1e-9);
  return z;
}

} // namespace pisp
