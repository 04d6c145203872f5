#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "walras/common.hpp"
#include "walras/economy.hpp"
#include "walras/potential.hpp"

// Endowment-parameterized equilibria: roots of the excess-budget field
// e_i(alpha) = <p(alpha)|omega_i> - m_i(alpha) on the weight simplex.

namespace walras {

struct WeightSolveOptions {
  int starts = 0;              // 0 = auto: 20 for two consumers, 10*N otherwise
  double initial_step = 1.0;   // residual-following step, halved on residual increase
  double tol = 1e-8;           // accept a solution when ||e||_inf <= tol
  int max_iterations = 2000;   // fixed-point iterations per start
  double dedup_radius = 1e-4;  // minimum ||alpha - alpha'||_inf between reported solutions
  double polish_tol = 1e-12;
  int polish_max_iterations = 50;
  double min_weight = 1e-9;    // interior clamp on the simplex
  DualSolveOptions dual;
};

struct WeightSolution {
  WelfareWeights weights;
  EquilibriumPoint equilibrium;
  double residual_norm = 0.0;
};

struct StartTrace {
  int start_index = 0;
  Vector start;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

struct SolveReport {
  std::vector<WeightSolution> solutions;  // in discovery (start-index) order
  std::vector<StartTrace> trace;
  double dedup_radius = 0.0;
};

struct BoundaryProbe {
  Vector alpha;
  std::size_t face = 0;   // index of the coordinate pinned at epsilon
  double excess = 0.0;    // e_face(alpha); inward means > 0
  bool inward = false;
};

struct BoundaryReport {
  std::vector<BoundaryProbe> probes;
  bool all_inward = true;
  double worst_excess = 0.0;         // minimum e_face over probes
  double max_zero_sum_error = 0.0;   // worst |sum_i e_i| seen
};

namespace detail {

inline Vector clamp_to_simplex_interior(Vector alpha, double min_weight) {
  double total = 0.0;
  for (double& a : alpha) {
    if (!(a > min_weight)) a = min_weight;
    total += a;
  }
  for (double& a : alpha) a /= total;
  return alpha;
}

// Warm-started evaluation of the excess-budget field. Each call solves the
// weight-parameterized equilibrium and reads off endowment values vs incomes.
class ExcessBudgetField {
 public:
  ExcessBudgetField(const Economy& economy, const DualSolveOptions& options)
      : economy_(economy), options_(options) {}

  Vector operator()(std::span<const double> alpha) {
    DualSolveOptions options = options_;
    options.initial_prices = warm_prices_;
    WelfareWeights weights{Vector(alpha.begin(), alpha.end())};
    last_ = equilibrium_from_weights(economy_, weights, options);
    warm_prices_ = last_->prices.values();
    const Vector& p = last_->prices.values();
    Vector e(economy_.num_consumers());
    double zero_sum = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      e[i] = dot(p, economy_.consumer(i).endowment.values()) - last_->incomes[i];
      zero_sum += e[i];
    }
    max_zero_sum_error_ = std::max(max_zero_sum_error_, std::abs(zero_sum));
    ++evaluations_;
    return e;
  }

  const EquilibriumPoint& last_equilibrium() const { return *last_; }
  int evaluations() const { return evaluations_; }
  double max_zero_sum_error() const { return max_zero_sum_error_; }

 private:
  const Economy& economy_;
  DualSolveOptions options_;
  Vector warm_prices_;
  std::optional<EquilibriumPoint> last_;
  int evaluations_ = 0;
  double max_zero_sum_error_ = 0.0;
};

inline double van_der_corput(std::uint32_t index, std::uint32_t base) {
  double result = 0.0, denom = 1.0;
  while (index > 0) {
    denom *= base;
    result += static_cast<double>(index % base) / denom;
    index /= base;
  }
  return result;
}

// Deterministic low-discrepancy interior points of the simplex. For two
// consumers this is the base-2 radical-inverse sequence (first point 1/2);
// larger N maps Halton points through sorted-gap coordinates.
inline std::vector<Vector> simplex_start_grid(std::size_t n, int count, double min_weight) {
  static constexpr std::uint32_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31};
  std::vector<Vector> starts;
  starts.reserve(count);
  for (int j = 1; j <= count; ++j) {
    if (n == 2) {
      const double a = van_der_corput(static_cast<std::uint32_t>(j), 2);
      starts.push_back(clamp_to_simplex_interior({a, 1.0 - a}, min_weight));
      continue;
    }
    Vector cuts;
    cuts.reserve(n + 1);
    cuts.push_back(0.0);
    for (std::size_t d = 0; d + 1 < n; ++d)
      cuts.push_back(van_der_corput(static_cast<std::uint32_t>(j), kPrimes[d % 11]));
    cuts.push_back(1.0);
    std::sort(cuts.begin(), cuts.end());
    Vector alpha(n);
    for (std::size_t d = 0; d < n; ++d) alpha[d] = cuts[d + 1] - cuts[d];
    starts.push_back(clamp_to_simplex_interior(std::move(alpha), min_weight));
  }
  return starts;
}

struct PolishOutcome {
  Vector alpha;
  double residual = 0.0;
  int iterations = 0;
};

// Projected quasi-Newton root finding on the simplex tangent space: the last
// coordinate is eliminated and the reduced Jacobian is formed by central
// differences.
inline PolishOutcome polish_root(ExcessBudgetField& field, Vector alpha,
                                 const WeightSolveOptions& options) {
  const std::size_t n = alpha.size();
  const std::size_t m = n - 1;
  Vector e = field(alpha);
  double residual = linf_norm(e);
  PolishOutcome best{alpha, residual, 0};
  for (int it = 0; it < options.polish_max_iterations; ++it) {
    if (residual <= options.polish_tol) break;
    std::vector<double> jac(m * m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = 1e-6 * std::max(0.05, alpha[j]);
      Vector up(alpha), down(alpha);
      up[j] += h;
      up[n - 1] -= h;
      down[j] -= h;
      down[n - 1] += h;
      if (up[n - 1] < options.min_weight || down[j] < options.min_weight) {
        jac.clear();
        break;
      }
      const Vector ep = field(up);
      const Vector em = field(down);
      for (std::size_t r = 0; r < m; ++r) jac[r * m + j] = (ep[r] - em[r]) / (2.0 * h);
    }
    if (jac.empty()) break;
    Vector rhs(e.begin(), e.begin() + m);
    for (double& v : rhs) v = -v;
    Vector direction;
    if (!solve_linear(jac, rhs, direction)) break;

    bool moved = false;
    double t = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      Vector cand(alpha);
      double shift = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        cand[j] += t * direction[j];
        shift += t * direction[j];
      }
      cand[n - 1] -= shift;
      cand = clamp_to_simplex_interior(std::move(cand), options.min_weight);
      const Vector ec = field(cand);
      const double rc = linf_norm(ec);
      if (rc < residual) {
        alpha = std::move(cand);
        e = ec;
        residual = rc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    best.iterations = it + 1;
    if (residual < best.residual) {
      best.alpha = alpha;
      best.residual = residual;
    }
    if (!moved) break;
  }
  if (best.residual < residual) return best;
  return {alpha, residual, best.iterations};
}

}  // namespace detail

/// e_i(alpha) = <p(alpha)|omega_i> - m_i(alpha); sums to zero by Walras' law.
inline Vector excess_budget(const Economy& economy, const WelfareWeights& weights,
                            const DualSolveOptions& options = {}) {
  detail::ExcessBudgetField field(economy, options);
  return field(weights.values());
}

/// Multistart solve of the weight fixed point: damped residual following with
/// adaptive step, then a projected root polish; distinct converged solutions
/// are deduplicated and reported with their equilibria.
inline SolveReport solve_equilibrium_weights(const Economy& economy,
                                             const WeightSolveOptions& options = {}) {
  const std::size_t n = economy.num_consumers();
  detail::require_spec(n >= 2, "the weight fixed point needs at least two consumers");
  const int starts = options.starts > 0
                         ? options.starts
                         : (n == 2 ? 20 : static_cast<int>(10 * n));
  const std::vector<Vector> grid =
      detail::simplex_start_grid(n, starts, options.min_weight);

  SolveReport report;
  report.dedup_radius = options.dedup_radius;
  double best_overall = std::numeric_limits<double>::infinity();

  for (int s = 0; s < starts; ++s) {
    detail::ExcessBudgetField field(economy, options.dual);
    Vector alpha = grid[s];
    StartTrace trace{s, alpha, 0, 0.0, false};
    try {
      Vector e = field(alpha);
      double residual = detail::linf_norm(e);
      Vector best_alpha = alpha;
      double best_residual = residual;
      double step = options.initial_step;
      int it = 0;
      for (; it < options.max_iterations && residual > options.tol; ++it) {
        Vector cand(alpha);
        for (std::size_t i = 0; i < n; ++i) cand[i] += step * e[i];
        cand = detail::clamp_to_simplex_interior(std::move(cand), options.min_weight);
        const Vector ec = field(cand);
        const double rc = detail::linf_norm(ec);
        if (rc <= residual * (1.0 + 1e-12)) {
          alpha = std::move(cand);
          e = ec;
          residual = rc;
          step = std::min(step * 1.25, 4.0);
          if (residual < best_residual) {
            best_alpha = alpha;
            best_residual = residual;
          }
        } else {
          step *= 0.5;
          if (step < 1e-9) break;
        }
      }
      detail::PolishOutcome polished = detail::polish_root(field, best_alpha, options);
      trace.iterations = it + polished.iterations;
      trace.final_residual = polished.residual;
      trace.converged = polished.residual <= options.tol;
      best_overall = std::min(best_overall, polished.residual);

      if (trace.converged) {
        // re-evaluate at the polished point so the stored equilibrium matches
        const Vector e_final = field(polished.alpha);
        (void)e_final;
        WeightSolution solution{WelfareWeights(polished.alpha), field.last_equilibrium(),
                                polished.residual};
        bool merged = false;
        for (WeightSolution& existing : report.solutions) {
          double distance = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            distance = std::max(distance,
                                std::abs(existing.weights[i] - solution.weights[i]));
          if (distance <= options.dedup_radius) {
            if (solution.residual_norm < existing.residual_norm) existing = solution;
            merged = true;
            break;
          }
        }
        if (!merged) report.solutions.push_back(std::move(solution));
      }
    } catch (const ConvergenceError&) {
      trace.converged = false;
      trace.final_residual = std::numeric_limits<double>::infinity();
    }
    report.trace.push_back(std::move(trace));
  }

  if (report.solutions.empty())
    throw NoSolutionFound("no multistart converged to an equilibrium weight vector (best residual " +
                              std::to_string(best_overall) + ")",
                          best_overall);
  return report;
}

/// Samples simplex faces at min_i alpha_i = epsilon and reports whether the
/// excess-budget field points inward (e_i > 0 on the pinned coordinate).
/// Violations are findings in the report, not exceptions.
inline BoundaryReport boundary_inwardness_check(const Economy& economy, double epsilon,
                                                const DualSolveOptions& options = {}) {
  detail::require_spec(epsilon > 0.0 && epsilon < 0.1, "epsilon must lie in (0, 0.1)");
  const std::size_t n = economy.num_consumers();
  detail::ExcessBudgetField field(economy, options);
  BoundaryReport report;
  report.worst_excess = std::numeric_limits<double>::infinity();

  for (std::size_t face = 0; face < n; ++face) {
    std::vector<Vector> points;
    {
      Vector uniform(n, (1.0 - epsilon) / (n - 1));
      uniform[face] = epsilon;
      points.push_back(std::move(uniform));
    }
    if (n > 2) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == face) continue;
        Vector tilted(n, 0.3 * (1.0 - epsilon) / (n - 1));
        double allocated = epsilon;
        for (std::size_t i = 0; i < n; ++i)
          if (i != face && i != j) allocated += tilted[i];
        tilted[face] = epsilon;
        tilted[j] = 1.0 - allocated;
        points.push_back(std::move(tilted));
      }
    }
    for (Vector& alpha : points) {
      const Vector e = field(alpha);
      BoundaryProbe probe{alpha, face, e[face], e[face] > 0.0};
      report.all_inward = report.all_inward && probe.inward;
      report.worst_excess = std::min(report.worst_excess, probe.excess);
      report.probes.push_back(std::move(probe));
    }
  }
  report.max_zero_sum_error = field.max_zero_sum_error();
  return report;
}

}  // namespace walras
