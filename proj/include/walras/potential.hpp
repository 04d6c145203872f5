#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "walras/common.hpp"
#include "walras/economy.hpp"

namespace walras {

/// Strictly positive welfare weights, stored normalized to sum one. The
/// potential scales linearly under joint (alpha, p) rescaling, so the raw
/// scale carries no information; evaluators below also accept raw spans.
class WelfareWeights {
 public:
  explicit WelfareWeights(Vector raw) : values_(std::move(raw)) {
    detail::require_spec(!values_.empty(), "weights must be nonempty");
    double total = 0.0;
    for (double a : values_) {
      detail::require_spec(a > 0.0 && std::isfinite(a), "weights must be strictly positive");
      total += a;
    }
    for (double& a : values_) {
      a /= total;
      detail::require_spec(a >= 1e-12, "weights below 1e-12 after normalization are rejected");
    }
  }

  const Vector& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Vector values_;
};

struct SolverDiagnostics {
  int iterations = 0;
  double gradient_norm = 0.0;  // final simplex diameter on the nonsmooth path
  bool nonsmooth_fallback = false;
  bool allocation_ambiguous = false;
  double market_clearing_error = 0.0;
  double walras_error = 0.0;
  double optimality_error = 0.0;
};

/// A solved root of the potential: allocation, prices, incomes, weights and
/// the residual value of Y at the point.
struct EquilibriumPoint {
  Allocation allocation;
  PriceVector prices;
  Vector incomes;
  WelfareWeights weights;
  double potential_residual = 0.0;
  SolverDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

namespace detail {

inline void check_alpha(std::span<const double> alpha, const Economy& economy) {
  require_spec(alpha.size() == economy.num_consumers(),
               "weight vector has the wrong number of consumers");
  for (double a : alpha)
    require_spec(a > 0.0 && std::isfinite(a), "weights must be strictly positive");
}

}  // namespace detail

/// U_alpha(x) = sum_i alpha_i u_i(x_i).
inline double weighted_utility(const Economy& economy, std::span<const double> alpha,
                               const Allocation& x) {
  detail::check_alpha(alpha, economy);
  detail::require_spec(x.num_consumers() == economy.num_consumers() &&
                           x.num_goods() == economy.num_goods(),
                       "allocation shape does not match the economy");
  double total = 0.0;
  for (std::size_t i = 0; i < economy.num_consumers(); ++i)
    total += alpha[i] * utility(economy.consumer(i).utility, x.bundle(i));
  return total;
}

inline double weighted_utility(const Economy& economy, const WelfareWeights& alpha,
                               const Allocation& x) {
  return weighted_utility(economy, std::span<const double>(alpha.values()), x);
}

/// V_alpha(p,w) = <p|w> + sum_i alpha_i v̄_i(p/alpha_i); strictly convex in p.
inline double dual_value(const Economy& economy, std::span<const double> alpha,
                         std::span<const double> prices) {
  detail::check_alpha(alpha, economy);
  detail::check_positive_prices(prices);
  double total = detail::dot(prices, economy.total_endowment());
  for (std::size_t i = 0; i < economy.num_consumers(); ++i) {
    const Vector q = detail::scaled(prices, 1.0 / alpha[i]);
    total += alpha[i] * fenchel_dual(economy.consumer(i).utility, q);
  }
  return total;
}

inline double dual_value(const Economy& economy, const WelfareWeights& alpha,
                         std::span<const double> prices) {
  return dual_value(economy, std::span<const double>(alpha.values()), prices);
}

/// ∇_p V_alpha = w - sum_i x̄_i(p/alpha_i). Throws TieError at linear-aggregate
/// kinks, where the dual is not differentiable.
inline Vector dual_gradient(const Economy& economy, std::span<const double> alpha,
                            std::span<const double> prices) {
  detail::check_alpha(alpha, economy);
  detail::check_positive_prices(prices);
  Vector grad(economy.total_endowment());
  for (std::size_t i = 0; i < economy.num_consumers(); ++i) {
    const Vector q = detail::scaled(prices, 1.0 / alpha[i]);
    const Vector demand = fenchel_demand(economy.consumer(i).utility, q);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= demand[k];
  }
  return grad;
}

inline Vector dual_gradient(const Economy& economy, const WelfareWeights& alpha,
                            std::span<const double> prices) {
  return dual_gradient(economy, std::span<const double>(alpha.values()), prices);
}

/// The economy's potential Y_alpha(x,p,w) = U_alpha(x) - V_alpha(p,w).
/// Nonpositive on feasible allocations and positive prices; zero exactly at
/// the Walrasian equilibrium for alpha.
inline double potential(const Economy& economy, std::span<const double> alpha,
                        const Allocation& x, std::span<const double> prices) {
  const double slack = 1e-8 * (1.0 + detail::linf_norm(economy.total_endowment()));
  if (!x.feasible_for(economy, slack))
    throw InfeasibleError("allocation violates the feasibility set of the economy");
  return weighted_utility(economy, alpha, x) - dual_value(economy, alpha, prices);
}

inline double potential(const Economy& economy, const WelfareWeights& alpha, const Allocation& x,
                        std::span<const double> prices) {
  return potential(economy, std::span<const double>(alpha.values()), x, prices);
}

// ---------------------------------------------------------------------------
// Dual minimization
// ---------------------------------------------------------------------------

struct DualSolveOptions {
  double gradient_tol = 1e-12;  // on ||∇V||_inf, scaled by max(1, ||w||_inf)
  int max_iterations = 500;
  double hessian_fd_step = 1e-6;
  Vector initial_prices;  // optional warm start; must be strictly positive
  // nonsmooth (Nelder-Mead in log prices) fallback controls
  double simplex_size_tol = 1e-11;
  double simplex_value_tol = 1e-14;
  int simplex_max_iterations = 60000;
};

struct DualSolveResult {
  PriceVector prices;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool nonsmooth_fallback = false;
};

namespace detail {

inline Vector initial_prices(const Economy& economy, const WelfareWeights& weights,
                             const DualSolveOptions& options) {
  const std::size_t k = economy.num_goods();
  if (options.initial_prices.size() == k) {
    bool ok = true;
    for (double p : options.initial_prices) ok = ok && p > 0.0 && std::isfinite(p);
    if (ok) return options.initial_prices;
  }
  // uniform prices scaled so initial demands sit near the aggregate endowment
  const double weight_sum = sum(weights.values());
  Vector p(k);
  for (std::size_t g = 0; g < k; ++g) p[g] = weight_sum / economy.total_endowment()[g];
  return p;
}

// Damped Newton with analytic gradient, finite-difference Hessian,
// backtracking line search and the positivity safeguard p <- max(p/2, p + t d).
inline DualSolveResult minimize_dual_newton(const Economy& economy, const WelfareWeights& weights,
                                            const DualSolveOptions& options) {
  const std::size_t k = economy.num_goods();
  const double scale = std::max(1.0, linf_norm(economy.total_endowment()));
  Vector p = initial_prices(economy, weights, options);
  Vector grad = dual_gradient(economy, weights, p);
  double value = dual_value(economy, weights, p);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (linf_norm(grad) <= options.gradient_tol * scale) break;

    std::vector<double> hessian(k * k, 0.0);
    Vector probe(p);
    for (std::size_t j = 0; j < k; ++j) {
      const double h = options.hessian_fd_step * std::max(p[j], 1e-8);
      probe[j] = p[j] + h;
      const Vector gp = dual_gradient(economy, weights, probe);
      probe[j] = p[j] - h;
      const Vector gm = dual_gradient(economy, weights, probe);
      probe[j] = p[j];
      for (std::size_t r = 0; r < k; ++r) hessian[r * k + j] = (gp[r] - gm[r]) / (2.0 * h);
    }
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = r + 1; c < k; ++c) {
        const double s = 0.5 * (hessian[r * k + c] + hessian[c * k + r]);
        hessian[r * k + c] = hessian[c * k + r] = s;
      }

    Vector direction;
    Vector rhs(grad);
    for (double& v : rhs) v = -v;
    bool have_newton = solve_linear(hessian, rhs, direction);
    if (have_newton && dot(direction, grad) >= 0.0) have_newton = false;
    if (!have_newton) {
      direction = grad;
      for (double& v : direction) v = -v;
    }

    auto try_direction = [&](const Vector& dir) {
      double t = 1.0;
      for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
        Vector cand(k);
        for (std::size_t g = 0; g < k; ++g) cand[g] = std::max(0.5 * p[g], p[g] + t * dir[g]);
        const double cand_value = dual_value(economy, weights, cand);
        if (std::isfinite(cand_value) && cand_value < value) {
          p = std::move(cand);
          value = cand_value;
          grad = dual_gradient(economy, weights, p);
          return true;
        }
        if (halving == 0) {
          // near the minimum the value change sinks below roundoff; accept the
          // full step when it shrinks the gradient norm instead
          const Vector cand_grad = dual_gradient(economy, weights, cand);
          if (linf_norm(cand_grad) <= 0.9 * linf_norm(grad)) {
            p = std::move(cand);
            value = cand_value;
            grad = cand_grad;
            return true;
          }
        }
      }
      return false;
    };
    bool accepted = try_direction(direction);
    if (!accepted) {
      Vector steepest = grad;
      for (double& v : steepest) v = -v;
      accepted = try_direction(steepest);
    }
    if (!accepted) break;
  }
  const double gnorm = linf_norm(grad);
  if (gnorm > options.gradient_tol * scale)
    throw ConvergenceError("dual minimization did not reach the gradient tolerance");
  return {PriceVector(std::move(p)), value, gnorm, iter, false};
}

// Nelder-Mead on y = log p; handles the kinks of linear-aggregate duals.
inline DualSolveResult minimize_dual_simplex(const Economy& economy, const WelfareWeights& weights,
                                             const DualSolveOptions& options) {
  const std::size_t k = economy.num_goods();
  auto objective = [&](const Vector& y) {
    Vector p(k);
    for (std::size_t g = 0; g < k; ++g) p[g] = std::exp(y[g]);
    return dual_value(economy, weights, p);
  };

  Vector y0(k);
  {
    const Vector p0 = initial_prices(economy, weights, options);
    for (std::size_t g = 0; g < k; ++g) y0[g] = std::log(p0[g]);
  }

  std::vector<Vector> vertex(k + 1, y0);
  Vector fval(k + 1);
  auto rebuild = [&](const Vector& center, double spread) {
    for (std::size_t v = 0; v <= k; ++v) {
      vertex[v] = center;
      if (v > 0) vertex[v][v - 1] += spread;
      fval[v] = objective(vertex[v]);
    }
  };
  rebuild(y0, 0.5);

  int iterations = 0;
  double diameter = 1.0;
  for (int round = 0; round < 2; ++round) {
    for (; iterations < options.simplex_max_iterations; ++iterations) {
      // order vertices: best first, worst last (stable for determinism)
      std::vector<std::size_t> order(k + 1);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return fval[a] < fval[b]; });
      std::vector<Vector> sorted_v(k + 1);
      Vector sorted_f(k + 1);
      for (std::size_t v = 0; v <= k; ++v) {
        sorted_v[v] = vertex[order[v]];
        sorted_f[v] = fval[order[v]];
      }
      vertex = std::move(sorted_v);
      fval = std::move(sorted_f);

      diameter = 0.0;
      for (std::size_t v = 1; v <= k; ++v)
        for (std::size_t g = 0; g < k; ++g)
          diameter = std::max(diameter, std::abs(vertex[v][g] - vertex[0][g]));
      const double spread = fval[k] - fval[0];
      if (diameter <= options.simplex_size_tol * (1.0 + linf_norm(vertex[0])) &&
          spread <= options.simplex_value_tol * (1.0 + std::abs(fval[0])))
        break;

      Vector centroid(k, 0.0);
      for (std::size_t v = 0; v < k; ++v)
        for (std::size_t g = 0; g < k; ++g) centroid[g] += vertex[v][g] / k;

      auto blend = [&](double t) {
        Vector y(k);
        for (std::size_t g = 0; g < k; ++g) y[g] = centroid[g] + t * (vertex[k][g] - centroid[g]);
        return y;
      };
      const Vector reflected = blend(-1.0);
      const double fr = objective(reflected);
      if (fr < fval[0]) {
        const Vector expanded = blend(-2.0);
        const double fe = objective(expanded);
        if (fe < fr) {
          vertex[k] = expanded;
          fval[k] = fe;
        } else {
          vertex[k] = reflected;
          fval[k] = fr;
        }
        continue;
      }
      if (fr < fval[k - 1]) {
        vertex[k] = reflected;
        fval[k] = fr;
        continue;
      }
      const Vector contracted = blend(fr < fval[k] ? -0.5 : 0.5);
      const double fc = objective(contracted);
      if (fc < std::min(fr, fval[k])) {
        vertex[k] = contracted;
        fval[k] = fc;
        continue;
      }
      for (std::size_t v = 1; v <= k; ++v) {  // shrink toward the best vertex
        for (std::size_t g = 0; g < k; ++g)
          vertex[v][g] = vertex[0][g] + 0.5 * (vertex[v][g] - vertex[0][g]);
        fval[v] = objective(vertex[v]);
      }
    }
    if (round == 0) rebuild(vertex[0], 1e-5);  // one restart to escape stalls
  }

  Vector p(k);
  for (std::size_t g = 0; g < k; ++g) p[g] = std::exp(vertex[0][g]);
  return {PriceVector(std::move(p)), fval[0], diameter, iterations, true};
}

// When the simplex search lands in a region where the dual is differentiable
// (no demand ties), a Newton polish drives the gradient to machine precision.
// At a kink the polish throws and the simplex result stands.
inline DualSolveResult minimize_dual_nonsmooth(const Economy& economy,
                                               const WelfareWeights& weights,
                                               const DualSolveOptions& options) {
  DualSolveResult coarse = minimize_dual_simplex(economy, weights, options);
  try {
    DualSolveOptions polish = options;
    polish.initial_prices = coarse.prices.values();
    DualSolveResult refined = minimize_dual_newton(economy, weights, polish);
    if (refined.value <= coarse.value + 1e-12 * (1.0 + std::abs(coarse.value))) {
      refined.nonsmooth_fallback = true;
      refined.iterations += coarse.iterations;
      return refined;
    }
  } catch (const TieError&) {
  } catch (const ConvergenceError&) {
  }
  return coarse;
}

}  // namespace detail

/// Finds p(alpha) = argmin_p V_alpha(p,w). Smooth economies use damped Newton;
/// economies with linear-aggregate consumers fall back to a derivative-free
/// search that tolerates the dual's kinks.
inline DualSolveResult minimize_dual(const Economy& economy, const WelfareWeights& weights,
                                     const DualSolveOptions& options = {}) {
  detail::require_spec(weights.size() == economy.num_consumers(),
                       "weight vector has the wrong number of consumers");
  if (economy.dual_is_smooth())
    return detail::minimize_dual_newton(economy, weights, options);
  return detail::minimize_dual_nonsmooth(economy, weights, options);
}

// ---------------------------------------------------------------------------
// Welfare maximization
// ---------------------------------------------------------------------------

struct WelfareSolveOptions {
  int grid_resolution = 400;      // dense-grid stage of the nonsmooth 2x2 program
  int polish_max_iterations = 4000;
  double polish_tol = 1e-12;      // on the projected gradient
  DualSolveOptions dual;
};

struct WelfareSolution {
  Allocation allocation;
  double value = 0.0;
  bool ambiguous = false;  // maximizer detected as non-unique (non-strict concavity)
};

namespace detail {

// Direct concave program over the Edgeworth box for two consumers and two
// goods: dense grid, then projected gradient ascent from the best cells.
inline WelfareSolution maximize_welfare_box(const Economy& economy, std::span<const double> alpha,
                                            const WelfareSolveOptions& options) {
  require_spec(economy.num_consumers() == 2 && economy.num_goods() == 2,
               "the nonsmooth welfare program is implemented for two consumers and two goods");
  const Vector& w = economy.total_endowment();
  const UtilitySpec& u0 = economy.consumer(0).utility;
  const UtilitySpec& u1 = economy.consumer(1).utility;

  auto value_at = [&](const Vector& x1) -> double {
    Vector x2{w[0] - x1[0], w[1] - x1[1]};
    for (double& v : x2) v = std::max(v, 0.0);
    try {
      const double v = alpha[0] * utility(u0, x1) + alpha[1] * utility(u1, x2);
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const int res = options.grid_resolution;
  Vector best{0.0, 0.0};
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, Vector>> candidates;
  for (int i = 0; i <= res; ++i)
    for (int j = 0; j <= res; ++j) {
      const Vector x1{w[0] * i / res, w[1] * j / res};
      const double v = value_at(x1);
      if (v > best_value) {
        best_value = v;
        best = x1;
      }
      if (std::isfinite(v)) candidates.emplace_back(-v, x1);
    }
  require_spec(std::isfinite(best_value), "welfare objective is nowhere finite on the box");

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  auto polish = [&](Vector x1) -> std::pair<Vector, double> {
    double fx = value_at(x1);
    double step = 0.05 * std::min(w[0], w[1]);
    for (int it = 0; it < options.polish_max_iterations; ++it) {
      Vector g(2, 0.0);
      try {
        const Vector g0 = grad_utility(u0, x1);
        const Vector x2{std::max(w[0] - x1[0], 0.0), std::max(w[1] - x1[1], 0.0)};
        const Vector g1 = grad_utility(u1, x2);
        for (std::size_t d = 0; d < 2; ++d) g[d] = alpha[0] * g0[d] - alpha[1] * g1[d];
      } catch (const DomainError&) {
        break;  // gradient unavailable on this edge; keep the current point
      }
      double projected = 0.0;
      for (std::size_t d = 0; d < 2; ++d) {
        double gd = g[d];
        if (x1[d] <= 0.0 && gd < 0.0) gd = 0.0;
        if (x1[d] >= w[d] && gd > 0.0) gd = 0.0;
        projected = std::max(projected, std::abs(gd));
      }
      if (projected <= options.polish_tol) break;
      Vector cand(2);
      for (std::size_t d = 0; d < 2; ++d)
        cand[d] = std::clamp(x1[d] + step * g[d], 0.0, w[d]);
      const double fc = value_at(cand);
      if (fc > fx) {
        x1 = std::move(cand);
        fx = fc;
        step *= 1.3;
      } else {
        step *= 0.5;
        if (step < 1e-18) break;
      }
    }
    return {x1, fx};
  };

  // polish from a few separated top cells; disagreement at equal value flags
  // a non-unique maximizer
  std::vector<std::pair<Vector, double>> polished;
  const double cell = std::max(w[0], w[1]) / res;
  for (const auto& [negv, x1] : candidates) {
    bool close = false;
    for (const auto& seen : polished)
      close = close || (std::abs(seen.first[0] - x1[0]) < 4 * cell &&
                        std::abs(seen.first[1] - x1[1]) < 4 * cell);
    if (close) continue;
    polished.push_back(polish(x1));
    if (polished.size() >= 4) break;
  }
  std::size_t best_idx = 0;
  for (std::size_t c = 1; c < polished.size(); ++c)
    if (polished[c].second > polished[best_idx].second) best_idx = c;

  bool ambiguous = false;
  for (std::size_t c = 0; c < polished.size(); ++c) {
    if (c == best_idx) continue;
    const double value_gap = polished[best_idx].second - polished[c].second;
    const double distance =
        std::max(std::abs(polished[c].first[0] - polished[best_idx].first[0]),
                 std::abs(polished[c].first[1] - polished[best_idx].first[1]));
    if (value_gap <= 1e-9 * (1.0 + std::abs(polished[best_idx].second)) && distance > 1e-5)
      ambiguous = true;
  }

  const Vector& x1 = polished[best_idx].first;
  Vector entries{x1[0], x1[1], std::max(w[0] - x1[0], 0.0), std::max(w[1] - x1[1], 0.0)};
  return {Allocation(2, 2, std::move(entries)), polished[best_idx].second, ambiguous};
}

}  // namespace detail

/// Solves W_alpha(w) = max_{x in F(w)} U_alpha(x). Strictly concave economies
/// recover the maximizer from the dual solution; otherwise a direct program
/// over the Edgeworth box is used (two consumers, two goods).
inline WelfareSolution maximize_welfare(const Economy& economy, const WelfareWeights& weights,
                                        const WelfareSolveOptions& options = {}) {
  const std::size_t n = economy.num_consumers();
  const std::size_t k = economy.num_goods();
  bool all_strict = true;
  for (const Consumer& c : economy.consumers()) all_strict = all_strict && c.utility.strictly_concave();
  if (all_strict) {
    const DualSolveResult dual = minimize_dual(economy, weights, options.dual);
    Allocation x(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector q = detail::scaled(dual.prices.values(), 1.0 / weights[i]);
      const Vector demand = fenchel_demand(economy.consumer(i).utility, q);
      std::copy(demand.begin(), demand.end(), x.bundle(i).begin());
    }
    const double value = weighted_utility(economy, weights, x);
    return {std::move(x), value, false};
  }
  return detail::maximize_welfare_box(economy, weights.values(), options);
}

// ---------------------------------------------------------------------------
// Equilibrium recovery
// ---------------------------------------------------------------------------

namespace detail {

inline EquilibriumPoint assemble_equilibrium(const Economy& economy, const WelfareWeights& weights,
                                             const DualSolveResult& dual,
                                             const WelfareSolveOptions& welfare_options) {
  const std::size_t n = economy.num_consumers();
  const std::size_t k = economy.num_goods();
  const Vector& p = dual.prices.values();

  Allocation x(n, k);
  bool ambiguous = false;
  try {
    for (std::size_t i = 0; i < n; ++i) {
      const Vector q = scaled(p, 1.0 / weights[i]);
      const Vector demand = fenchel_demand(economy.consumer(i).utility, q);
      std::copy(demand.begin(), demand.end(), x.bundle(i).begin());
    }
  } catch (const TieError&) {
    if (n != 2 || k != 2) throw;
    // demand is set-valued at the solved prices; the allocation is pinned by
    // the primal program instead
    WelfareSolution primal = maximize_welfare_box(economy, weights.values(), welfare_options);
    x = std::move(primal.allocation);
    ambiguous = primal.ambiguous;
  }

  Vector incomes(n);
  for (std::size_t i = 0; i < n; ++i) incomes[i] = dot(p, x.bundle(i));

  const double scale = std::max(1.0, linf_norm(economy.total_endowment()));
  SolverDiagnostics diag;
  diag.iterations = dual.iterations;
  diag.gradient_norm = dual.gradient_norm;
  diag.nonsmooth_fallback = dual.nonsmooth_fallback;
  diag.allocation_ambiguous = ambiguous;

  const Vector totals = x.good_totals();
  for (std::size_t g = 0; g < k; ++g)
    diag.market_clearing_error =
        std::max(diag.market_clearing_error, std::abs(totals[g] - economy.total_endowment()[g]));
  diag.walras_error = std::abs(sum(incomes) - dot(p, economy.total_endowment()));
  for (std::size_t i = 0; i < n; ++i) {
    const double direct = utility(economy.consumer(i).utility, x.bundle(i));
    const double via_prices = indirect_utility(economy.consumer(i).utility, p, incomes[i]);
    diag.optimality_error = std::max(diag.optimality_error, std::abs(direct - via_prices));
  }
  if (diag.market_clearing_error > 1e-6 * scale)
    throw ConvergenceError("recovered allocation does not clear markets");

  const double residual = potential(economy, weights, x, p);
  return {std::move(x), dual.prices, std::move(incomes), weights, residual, diag};
}

}  // namespace detail

/// The unique root of Y_alpha for the given weights: minimizes the dual,
/// recovers demands (or the primal allocation at nonsmooth kinks), and
/// assembles incomes plus consistency diagnostics.
inline EquilibriumPoint equilibrium_from_weights(const Economy& economy,
                                                 const WelfareWeights& weights,
                                                 const DualSolveOptions& options = {}) {
  const DualSolveResult dual = minimize_dual(economy, weights, options);
  WelfareSolveOptions welfare_options;
  welfare_options.dual = options;
  return detail::assemble_equilibrium(economy, weights, dual, welfare_options);
}

/// ∇_w W_alpha(w) by central finite differences with Richardson extrapolation,
/// re-solving the dual at perturbed aggregate endowments. At a Walrasian
/// equilibrium this gradient is the price vector.
inline Vector welfare_gradient(const Economy& economy, const WelfareWeights& weights,
                               double relative_step = 1e-4,
                               const DualSolveOptions& options = {}) {
  const std::size_t n = economy.num_consumers();
  const std::size_t k = economy.num_goods();

  DualSolveOptions warm = options;
  warm.initial_prices = minimize_dual(economy, weights, options).prices.values();

  auto welfare_at = [&](std::size_t good, double delta) {
    std::vector<Consumer> consumers;
    consumers.reserve(n);
    // bump the largest holder so endowments stay strictly positive
    std::size_t donor = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (economy.consumer(i).endowment.values()[good] >
          economy.consumer(donor).endowment.values()[good])
        donor = i;
    for (std::size_t i = 0; i < n; ++i) {
      Vector units = economy.consumer(i).endowment.values();
      if (i == donor) units[good] += delta;
      consumers.push_back({economy.consumer(i).utility, Endowment(std::move(units))});
    }
    return minimize_dual(Economy(std::move(consumers)), weights, warm).value;
  };

  Vector grad(k);
  for (std::size_t g = 0; g < k; ++g) {
    double h = relative_step * std::max(1.0, economy.total_endowment()[g]);
    std::size_t donor = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (economy.consumer(i).endowment.values()[g] >
          economy.consumer(donor).endowment.values()[g])
        donor = i;
    h = std::min(h, 0.45 * economy.consumer(donor).endowment.values()[g]);
    auto central = [&](double step) {
      return (welfare_at(g, step) - welfare_at(g, -step)) / (2.0 * step);
    };
    const double d1 = central(h);
    const double d2 = central(0.5 * h);
    grad[g] = (4.0 * d2 - d1) / 3.0;
  }
  return grad;
}

}  // namespace walras
