#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "walras/common.hpp"
#include "walras/economy.hpp"

// Brute-force oracles for the test suite and the `verify` command. These paths
// only ever touch utility evaluation, never the solver code they certify.

namespace walras {

struct GridSpec {
  int resolution = 64;        // lattice points per dimension, >= 16
  int refinement_levels = 8;  // nested refinement passes, >= 1
  double box_scale = 4.0;     // initial search box inflation for unconstrained maximization
};

namespace detail {

inline void validate(const GridSpec& grid) {
  require_spec(grid.resolution >= 16, "grid resolution must be at least 16");
  require_spec(grid.refinement_levels >= 1, "grid refinement levels must be at least 1");
  require_spec(grid.box_scale > 0.0, "grid box scale must be positive");
}

inline double guarded_eval(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> x) {
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  } catch (const DomainError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

// Golden-section maximization of a unimodal f on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 220 && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Nested grid maximization of f over the box [lo, hi]; refines a window
// around the best lattice point each level.
inline std::pair<Vector, double> nested_grid_max(
    const std::function<double(std::span<const double>)>& f, Vector lo, Vector hi,
    const GridSpec& grid, bool clamp_to_initial_box) {
  const std::size_t dim = lo.size();
  const Vector lo0 = lo, hi0 = hi;
  Vector best_x = lo;
  double best_v = -std::numeric_limits<double>::infinity();
  const int res = grid.resolution;
  for (int level = 0; level < grid.refinement_levels; ++level) {
    Vector cell(dim);
    for (std::size_t d = 0; d < dim; ++d) cell[d] = (hi[d] - lo[d]) / (res - 1);
    std::vector<int> idx(dim, 0);
    Vector x(dim);
    bool done = false;
    Vector level_best_x = lo;
    double level_best_v = -std::numeric_limits<double>::infinity();
    while (!done) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = lo[d] + idx[d] * cell[d];
      const double v = guarded_eval(f, x);
      if (v > level_best_v) {
        level_best_v = v;
        level_best_x = x;
      }
      // odometer
      std::size_t d = 0;
      for (; d < dim; ++d) {
        if (++idx[d] < res) break;
        idx[d] = 0;
      }
      done = d == dim;
    }
    if (level_best_v > best_v) {
      best_v = level_best_v;
      best_x = level_best_x;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      const double half = 2.0 * cell[d];
      lo[d] = level_best_x[d] - half;
      hi[d] = level_best_x[d] + half;
      if (clamp_to_initial_box || lo0[d] == 0.0) lo[d] = std::max(lo[d], lo0[d]);
      if (clamp_to_initial_box) hi[d] = std::min(hi[d], hi0[d]);
    }
  }
  return {best_x, best_v};
}

}  // namespace detail

struct FenchelEstimate {
  double value = 0.0;
  Vector maximizer;
};

/// Numeric realization of max_{x>=0} u(x) - <q|x>: per-coordinate golden
/// section for the separable families, nested grid search otherwise
/// (non-separable search is capped at three goods).
inline FenchelEstimate numeric_fenchel(const UtilitySpec& spec, std::span<const double> prices,
                                       const GridSpec& grid = {}) {
  detail::validate(grid);
  detail::check_positive_prices(prices);
  const std::size_t k = spec.goods();
  detail::require_spec(prices.size() == k, "price vector has the wrong number of goods");

  auto objective = [&](std::span<const double> x) {
    return utility(spec, x) - detail::dot(prices, x);
  };

  const bool separable = std::holds_alternative<CobbDouglas>(spec.family()) ||
                         std::holds_alternative<SeparableIsoelastic>(spec.family());
  if (separable) {
    Vector x(k);
    for (std::size_t d = 0; d < k; ++d) x[d] = 1.0 / prices[d];
    for (std::size_t d = 0; d < k; ++d) {
      auto slice = [&](double t) {
        Vector y(x);
        y[d] = t;
        return detail::guarded_eval(objective, y);
      };
      // geometric scan for a unimodal bracket, then golden section
      int best_j = 0;
      double best_v = -std::numeric_limits<double>::infinity();
      for (int j = -52; j <= 52; ++j) {
        const double v = slice(std::ldexp(1.0, j) / prices[d]);
        if (v > best_v) {
          best_v = v;
          best_j = j;
        }
      }
      x[d] = detail::golden_max(slice, std::ldexp(1.0, best_j - 1) / prices[d],
                                std::ldexp(1.0, best_j + 1) / prices[d]);
    }
    return {objective(x), x};
  }

  detail::require_spec(k <= 3, "non-separable numeric fenchel oracle is capped at three goods");
  double scale = grid.box_scale;
  for (int expansion = 0; expansion < 6; ++expansion) {
    Vector lo(k, 0.0), hi(k);
    for (std::size_t d = 0; d < k; ++d) hi[d] = scale / prices[d];
    auto [x, v] = detail::nested_grid_max(objective, lo, hi, grid, false);
    bool on_outer_edge = false;
    for (std::size_t d = 0; d < k; ++d)
      on_outer_edge = on_outer_edge || x[d] > 0.98 * scale / prices[d];
    if (!on_outer_edge) return {v, x};
    scale *= 4.0;
  }
  throw ConvergenceError("numeric fenchel search box kept expanding");
}

/// Brute-force welfare maximum over the Edgeworth box of a two-consumer,
/// two-good economy: returns the best exhausting allocation and its value.
inline std::pair<Allocation, double> grid_welfare_max(const Economy& economy,
                                                      std::span<const double> alpha,
                                                      const GridSpec& grid = {}) {
  detail::validate(grid);
  detail::require_spec(economy.num_consumers() == 2 && economy.num_goods() == 2,
                       "grid welfare oracle handles two consumers and two goods");
  detail::require_spec(alpha.size() == 2, "alpha has the wrong number of consumers");
  for (double a : alpha) detail::require_spec(a > 0.0, "alpha must be strictly positive");
  const Vector& w = economy.total_endowment();

  auto objective = [&](std::span<const double> x1) {
    Vector x2(2);
    for (std::size_t d = 0; d < 2; ++d) x2[d] = std::max(0.0, w[d] - x1[d]);
    return alpha[0] * utility(economy.consumer(0).utility, x1) +
           alpha[1] * utility(economy.consumer(1).utility, x2);
  };

  Vector lo(2, 0.0);
  auto [x1, value] = detail::nested_grid_max(objective, lo, w, grid, true);
  Vector entries(4);
  entries[0] = x1[0];
  entries[1] = x1[1];
  entries[2] = std::max(0.0, w[0] - x1[0]);
  entries[3] = std::max(0.0, w[1] - x1[1]);
  return {Allocation(2, 2, std::move(entries)), value};
}

/// Central finite differences with one step of Richardson extrapolation.
inline Vector fd_gradient(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> point, double step) {
  detail::require_spec(step > 0.0 && std::isfinite(step), "finite-difference step must be positive");
  Vector x(point.begin(), point.end());
  Vector grad(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double base = x[d];
    auto central = [&](double h) {
      x[d] = base + h;
      const double fp = f(x);
      x[d] = base - h;
      const double fm = f(x);
      x[d] = base;
      return (fp - fm) / (2.0 * h);
    };
    const double d1 = central(step);
    const double d2 = central(0.5 * step);
    grad[d] = (4.0 * d2 - d1) / 3.0;
  }
  return grad;
}

}  // namespace walras
