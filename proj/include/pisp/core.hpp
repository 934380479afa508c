// SPDX-License-Identifier: Apache-2.0
//! \file core.hpp
//! Small value types, error hierarchy and threading helper shared by every
//! stage of the phaseless-scattering toolkit.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pisp {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <typename T> constexpr T sq(T x) { return x * x; }

//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

enum class ErrorKind { config, domain, numerical, io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

//! Bad configuration or violated precondition on user input.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
//! Argument outside an operation's mathematical domain.
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};
//! Iteration failed, data inconsistent with the model, etc.
struct NumericalError : Error {
  explicit NumericalError(const std::string& w)
      : Error(ErrorKind::numerical, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

//! Process exit code used by the command line tool.
inline int exit_code(ErrorKind k) {
  switch (k) {
  case ErrorKind::config: return 2;
  case ErrorKind::domain:
  case ErrorKind::numerical: return 3;
  case ErrorKind::io: return 4;
  }
  return 1;
}

//---------------------------------------------------------------------------//
// Vec3
//---------------------------------------------------------------------------//

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double a) { x *= a; y *= a; z *= a; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return a *= 1.0 / s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

//---------------------------------------------------------------------------//
// Threading
//---------------------------------------------------------------------------//

//! Static-chunked parallel loop. Each index must write only its own output
//! slot; results are then independent of the thread count.
template <typename F> void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr failure;
  std::mutex m;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += t) f(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace pisp
