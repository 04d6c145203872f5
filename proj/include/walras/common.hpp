#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace walras {

using Vector = std::vector<double>;

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the requested map
/// (nonpositive price, zero coordinate under a log, invalid family parameter).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Linear-aggregate demand is set-valued at the given prices; the caller must
/// recover the allocation from the primal program instead.
class TieError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its budget without meeting its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// An allocation violates the feasibility set of the economy.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A configuration document could not be turned into a valid economy.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// No multistart of the weight fixed-point solver converged.
class NoSolutionFound : public Error {
 public:
  NoSolutionFound(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

inline double linf_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

inline Vector scaled(std::span<const double> a, double factor) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  return out;
}

// Gaussian elimination with partial pivoting on a row-major n x n matrix.
// Returns false when the system is numerically singular.
inline bool solve_linear(std::vector<double> a, Vector b, Vector& out) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < 1e-300) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      std::swap(b[pivot], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * out[c];
    out[ri] = s / a[ri * n + ri];
    if (!std::isfinite(out[ri])) return false;
  }
  return true;
}

// Deterministic uniform variates; avoids std::uniform_real_distribution whose
// output is not pinned by the standard.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo_exp, double hi_exp) { return std::exp(uniform(lo_exp, hi_exp)); }
  std::uint64_t integer(std::uint64_t bound) { return next() % bound; }

 private:
  std::uint64_t next() {  // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

}  // namespace detail
}  // namespace walras
