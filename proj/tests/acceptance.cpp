// Acceptance suite: runs every contract criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "test_economies.hpp"
#include "walras/walras.hpp"

using namespace walras;

namespace {

struct Harness {
  int failures = 0;

  void report(int id, const std::string& label, bool passed, const std::string& detail) {
    std::printf("%s criterion %d: %s%s%s\n", passed ? "PASS" : "FAIL", id, label.c_str(),
                detail.empty() ? "" : " - ", detail.c_str());
    if (!passed) ++failures;
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct SolvedPoint {
  const Economy* economy;
  EquilibriumPoint point;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  Harness harness;
  std::vector<SolvedPoint> solved;
  // clearing residuals of equilibria whose economies are loop-local (criterion 2)
  double clearing_worst_elsewhere = 0.0;
  std::size_t points_elsewhere = 0;

  const Economy pair = fixtures::cobb_douglas_pair();
  const Economy linear = fixtures::linear_pair();
  const Economy mirror = fixtures::isoelastic_mirror();
  const Economy ces_three = fixtures::homogeneous_ces(-0.7, {{0.4, 1.5, 0.2}, {0.6, 0.5, 0.3}});
  const Economy ces_pair = fixtures::homogeneous_ces(0.4, {{0.7, 1.1}, {0.5, 0.9}});

  // ---------------------------------------------------------------- 1
  {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (int j = 1; j <= 81 && ok; ++j) {
      const double a = static_cast<double>(j) / 82.0;
      const EquilibriumPoint point = equilibrium_from_weights(pair, WelfareWeights{{a, 1.0 - a}});
      const Vector p = PriceVector(point.prices.values()).normalized();
      const double ratio = p[0] / p[1];
      const double expected_ratio = (1.0 + a) / (2.0 - a);
      const Vector expected_x1{6.0 * a / (1.0 + a), 3.0 * a / (2.0 - a)};
      worst = std::max(worst, std::abs(ratio - expected_ratio));
      for (std::size_t g = 0; g < 2; ++g)
        worst = std::max(worst, std::abs(point.allocation.bundle(0)[g] - expected_x1[g]));
      ok = worst <= 1e-6;
      solved.push_back({&pair, point});
    }
    const double elapsed = seconds_since(start);
    harness.report(1, "log-linear pair closed forms on an 81-point weight grid",
                   ok && elapsed < 1.0,
                   "worst deviation " + fmt(worst) + ", " + fmt(elapsed) + " s");
  }

  // ---------------------------------------------------------------- 2
  {
    const auto start = std::chrono::steady_clock::now();
    detail::Sampler rng(2024);
    double worst = 0.0;
    bool ok = true;
    for (int instance = 0; instance < 50 && ok; ++instance) {
      const std::size_t goods = 2 + rng.integer(4);     // K in 2..5
      const std::size_t consumers = 2 + rng.integer(3);  // N in 2..4
      double rho = rng.uniform(-1.99, 0.89);
      while (std::abs(rho) < 0.01) rho = rng.uniform(-1.99, 0.89);
      std::vector<Vector> endowments(consumers, Vector(goods));
      for (auto& units : endowments)
        for (double& v : units) v = rng.uniform(0.2, 3.0);
      const Economy economy = fixtures::homogeneous_ces(rho, endowments);
      const Vector& w = economy.total_endowment();

      WeightSolveOptions options;
      options.starts = 6;
      const SolveReport report = solve_equilibrium_weights(economy, options);
      if (report.solutions.size() != 1) {
        ok = false;
        break;
      }
      const EquilibriumPoint& point = report.solutions.front().equilibrium;
      const Vector& p = point.prices.values();
      double denom = 0.0;
      for (double wk : w) denom += std::pow(wk, rho);
      for (std::size_t k = 0; k < goods && ok; ++k)
        for (std::size_t l = k + 1; l < goods; ++l) {
          const double expected = std::pow(w[k] / w[l], rho - 1.0);
          worst = std::max(worst, std::abs(p[k] / p[l] / expected - 1.0));
        }
      for (std::size_t i = 0; i < consumers; ++i) {
        double numer = 0.0;
        for (std::size_t k = 0; k < goods; ++k)
          numer += endowments[i][k] * std::pow(w[k], rho - 1.0);
        const double share = numer / denom;
        for (std::size_t k = 0; k < goods; ++k) {
          const double expected = share * w[k];
          worst = std::max(worst,
                           std::abs(point.allocation.bundle(i)[k] - expected) / (1.0 + expected));
        }
      }
      ok = worst <= 1e-6;
      // fold this equilibrium's clearing identities into criterion 5 while the
      // loop-local economy is alive
      const double welfare = weighted_utility(economy, point.weights, point.allocation);
      const double dual = dual_value(economy, point.weights, p);
      clearing_worst_elsewhere = std::max(
          {clearing_worst_elsewhere, std::abs(point.potential_residual), std::abs(welfare - dual)});
      ++points_elsewhere;
    }
    const double elapsed = seconds_since(start);
    harness.report(2, "homogeneous CES closed forms on 50 random instances",
                   ok && elapsed < 5.0,
                   "worst relative deviation " + fmt(worst) + ", " + fmt(elapsed) + " s");
  }

  // ---------------------------------------------------------------- 3
  {
    const auto start = std::chrono::steady_clock::now();
    WeightSolveOptions options;
    options.starts = 20;
    bool ok = true;
    std::string detail;
    try {
      const SolveReport report = solve_equilibrium_weights(mirror, options);
      ok = report.solutions.size() == 3;
      if (!ok) detail = std::to_string(report.solutions.size()) + " solutions";
      std::vector<const WeightSolution*> sorted;
      for (const WeightSolution& s : report.solutions) sorted.push_back(&s);
      std::sort(sorted.begin(), sorted.end(), [](const WeightSolution* a, const WeightSolution* b) {
        return a->weights[0] < b->weights[0];
      });
      const double target_alpha[] = {0.09, 0.5, 0.91};
      const double target_prices[][2] = {{0.16, 0.79}, {0.5, 0.5}, {0.79, 0.16}};
      for (std::size_t s = 0; ok && s < sorted.size(); ++s) {
        ok = ok && std::abs(sorted[s]->weights[0] - target_alpha[s]) <= 0.01;
        const Vector& p = sorted[s]->equilibrium.prices.values();
        ok = ok && std::abs(p[0] - target_prices[s][0]) <= 0.01;
        ok = ok && std::abs(p[1] - target_prices[s][1]) <= 0.01;
        if (s == 1) ok = ok && std::abs(sorted[s]->weights[0] - 0.5) <= 1e-8;
        solved.push_back({&mirror, sorted[s]->equilibrium});
      }
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    const double elapsed = seconds_since(start);
    harness.report(3, "mirrored isoelastic pair has exactly three equilibria",
                   ok && elapsed < 10.0, detail.empty() ? fmt(elapsed) + " s" : detail);
  }

  // ---------------------------------------------------------------- 4
  {
    double worst_ratio = 0.0, worst_alloc = 0.0;
    bool ok = true;
    for (int j = 1; j <= 81 && ok; ++j) {
      const double a = static_cast<double>(j) / 82.0;
      if (std::abs(a - 1.0 / 3.0) < 0.02 || std::abs(a - 2.0 / 3.0) < 0.02) continue;
      const ScanRow row = compute_scan_row(linear, a, PriceNormalization::SumToOne);
      const EquilibriumPoint point =
          equilibrium_from_weights(linear, WelfareWeights{{a, 1.0 - a}});
      const double ratio = row.prices[0] / row.prices[1];
      const double expected_ratio =
          a <= 1.0 / 3.0 ? 0.5 : (a <= 2.0 / 3.0 ? a / (1.0 - a) : 2.0);
      worst_ratio = std::max(worst_ratio, std::abs(ratio - expected_ratio));
      Vector expected_x1;
      if (a <= 1.0 / 3.0)
        expected_x1 = {3.0 * a, 0.0};
      else if (a <= 2.0 / 3.0)
        expected_x1 = {1.0, 0.0};
      else
        expected_x1 = {1.0, 3.0 * a - 2.0};
      for (std::size_t g = 0; g < 2; ++g) {
        worst_alloc =
            std::max(worst_alloc, std::abs(point.allocation.bundle(0)[g] - expected_x1[g]));
        worst_alloc = std::max(worst_alloc, std::abs(point.allocation.bundle(1)[g] -
                                                     (1.0 - expected_x1[g])));
      }
      ok = worst_ratio <= 1e-5 && worst_alloc <= 1e-4;
      solved.push_back({&linear, point});
    }
    harness.report(4, "linear pair piecewise prices and boundary allocations", ok,
                   "ratio deviation " + fmt(worst_ratio) + ", allocation deviation " +
                       fmt(worst_alloc));
  }

  // ---------------------------------------------------------------- 5
  {
    double worst = clearing_worst_elsewhere;
    for (const SolvedPoint& entry : solved) {
      worst = std::max(worst, std::abs(entry.point.potential_residual));
      const double welfare =
          weighted_utility(*entry.economy, entry.point.weights, entry.point.allocation);
      const double dual =
          dual_value(*entry.economy, entry.point.weights, entry.point.prices.values());
      worst = std::max(worst, std::abs(welfare - dual));
    }
    harness.report(5, "utility clearing at every solved equilibrium", worst <= 1e-8,
                   "worst |Y| and |W-V| " + fmt(worst) + " over " +
                       std::to_string(solved.size() + points_elsewhere) + " points");
  }

  // ---------------------------------------------------------------- 6
  {
    detail::Sampler rng(6);
    double worst = -1e300;
    bool ok = true;
    const Economy* economies[] = {&pair, &linear, &mirror, &ces_three};
    for (const Economy* economy : economies) {
      const std::size_t n = economy->num_consumers();
      const std::size_t k = economy->num_goods();
      const Vector& w = economy->total_endowment();
      for (int s = 0; s < 1000; ++s) {
        Allocation x(n, k);
        for (std::size_t g = 0; g < k; ++g) {
          Vector shares(n);
          double total = 0.0;
          for (std::size_t i = 0; i < n; ++i) total += shares[i] = rng.uniform(0.02, 1.0);
          const double used = rng.uniform(0.7, 1.0);
          for (std::size_t i = 0; i < n; ++i) x.bundle(i)[g] = w[g] * used * shares[i] / total;
        }
        Vector p(k);
        for (double& v : p) v = rng.log_uniform(-2.0, 2.0);
        Vector alpha(n);
        for (double& v : alpha) v = rng.uniform(0.1, 1.0);
        const double y = potential(*economy, alpha, x, p);
        worst = std::max(worst, y);
        ok = ok && y <= 1e-12;
      }
    }
    harness.report(6, "potential nonpositivity on 1000 random samples per economy", ok,
                   "largest potential " + fmt(worst));
  }

  // ---------------------------------------------------------------- 7
  {
    double worst_price = 0.0, worst_mrs = 0.0;
    bool ok = true;
    const Economy* economies[] = {&pair, &mirror, &ces_pair, &ces_three};
    for (const Economy* economy : economies) {
      const std::size_t n = economy->num_consumers();
      std::vector<Vector> weight_sets{Vector(n, 1.0 / n)};
      Vector skew(n, 0.4 / (n - 1));
      skew[0] = 0.6;
      weight_sets.push_back(skew);
      for (const Vector& alpha : weight_sets) {
        const WelfareWeights weights{alpha};
        const Vector grad = welfare_gradient(*economy, weights);
        const EquilibriumPoint point = equilibrium_from_weights(*economy, weights);
        const Vector& p = point.prices.values();
        for (std::size_t g = 0; g < p.size(); ++g)
          worst_price = std::max(worst_price, std::abs(grad[g] - p[g]) / std::abs(p[g]));
        for (std::size_t i = 0; i < n; ++i) {
          const Vector gu = grad_utility(economy->consumer(i).utility, point.allocation.bundle(i));
          for (std::size_t g = 1; g < p.size(); ++g) {
            const double social = grad[0] / grad[g];
            const double individual = gu[0] / gu[g];
            worst_mrs = std::max(worst_mrs, std::abs(social - individual) / std::abs(social));
          }
        }
      }
    }
    ok = worst_price <= 1e-4 && worst_mrs <= 1e-5;
    harness.report(7, "welfare gradient equals prices and balances MRS", ok,
                   "price gap " + fmt(worst_price) + ", MRS gap " + fmt(worst_mrs));
  }

  // ---------------------------------------------------------------- 8
  {
    detail::Sampler rng(8);
    double worst = 0.0;
    const Economy* economies[] = {&pair, &mirror, &ces_three};
    for (const Economy* economy : economies) {
      const std::size_t n = economy->num_consumers();
      const std::size_t k = economy->num_goods();
      const Vector& w = economy->total_endowment();
      for (int s = 0; s < 200; ++s) {
        const double kappa = rng.uniform(0.1, 10.0);
        Allocation x(n, k);
        for (std::size_t g = 0; g < k; ++g) {
          Vector shares(n);
          double total = 0.0;
          for (std::size_t i = 0; i < n; ++i) total += shares[i] = rng.uniform(0.05, 1.0);
          for (std::size_t i = 0; i < n; ++i) x.bundle(i)[g] = 0.9 * w[g] * shares[i] / total;
        }
        Vector p(k), alpha(n);
        for (double& v : p) v = rng.log_uniform(-1.0, 1.0);
        for (double& v : alpha) v = rng.uniform(0.2, 1.5);
        const double base = potential(*economy, alpha, x, p);
        Vector scaled_alpha = detail::scaled(alpha, kappa);
        Vector scaled_p = detail::scaled(p, kappa);
        const double scaled_value = potential(*economy, scaled_alpha, x, scaled_p);
        worst = std::max(worst, std::abs(scaled_value - kappa * base));
      }
    }
    harness.report(8, "joint weight/price rescaling scales the potential", worst <= 1e-10,
                   "worst absolute gap " + fmt(worst));
  }

  // ---------------------------------------------------------------- 9
  {
    detail::Sampler rng(9);
    double worst_dual = 0.0, worst_demand = 0.0, worst_welfare = 0.0;
    bool ok = true;
    for (int family = 0; family < 4 && ok; ++family) {
      for (int trial = 0; trial < 100; ++trial) {
        Vector q{rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)};
        UtilitySpec spec = [&]() -> UtilitySpec {
          switch (family) {
            case 0:
              return CobbDouglas{{rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0)}};
            case 1: {
              double rho = rng.uniform(-1.9, 0.85);
              if (std::abs(rho) < 0.05) rho = 0.3;
              return Ces{rho, {rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)}};
            }
            case 2:
              return LinearAggregate{{rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)}};
            default:
              return SeparableIsoelastic{{rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)},
                                         {rng.uniform(0.1, 0.8), rng.uniform(-2.4, -0.2)}};
          }
        }();
        const FenchelEstimate estimate = numeric_fenchel(spec, q);
        worst_dual = std::max(worst_dual, std::abs(estimate.value - fenchel_dual(spec, q)));
        try {
          const Vector demand = fenchel_demand(spec, q);
          for (std::size_t g = 0; g < 2; ++g)
            worst_demand = std::max(worst_demand, std::abs(estimate.maximizer[g] - demand[g]) /
                                                      (1.0 + std::abs(demand[g])));
        } catch (const TieError&) {
          // set-valued demand at a sampled kink; value comparison already done
        }
      }
    }
    ok = worst_dual <= 1e-6 && worst_demand <= 1e-6;

    // welfare oracle vs solver on strictly concave two-by-two economies
    const Economy* economies[] = {&pair, &ces_pair};
    for (const Economy* economy : economies) {
      for (double a : {0.3, 0.5, 0.75}) {
        const WelfareWeights weights{{a, 1.0 - a}};
        const double solver = maximize_welfare(*economy, weights).value;
        const double oracle = grid_welfare_max(*economy, weights.values()).second;
        worst_welfare = std::max(worst_welfare, std::abs(solver - oracle));
      }
    }
    ok = ok && worst_welfare <= 1e-4;
    harness.report(9, "closed forms match the independent maximization oracles", ok,
                   "dual gap " + fmt(worst_dual) + ", demand gap " + fmt(worst_demand) +
                       ", welfare gap " + fmt(worst_welfare));
  }

  // ---------------------------------------------------------------- 10
  {
    bool ok = true;
    double worst_zero_sum = 0.0, worst_excess = 1e300;
    const Economy* economies[] = {&pair, &linear, &mirror, &ces_three};
    for (const Economy* economy : economies) {
      const BoundaryReport report = boundary_inwardness_check(*economy, 1e-3);
      ok = ok && report.all_inward;
      worst_zero_sum = std::max(worst_zero_sum, report.max_zero_sum_error);
      worst_excess = std::min(worst_excess, report.worst_excess);
      // interior zero-sum samples
      detail::Sampler rng(10);
      for (int s = 0; s < 20; ++s) {
        Vector alpha(economy->num_consumers());
        double total = 0.0;
        for (double& v : alpha) total += v = rng.uniform(0.05, 1.0);
        for (double& v : alpha) v /= total;
        const Vector e = excess_budget(*economy, WelfareWeights(alpha));
        worst_zero_sum = std::max(worst_zero_sum, std::abs(detail::sum(e)));
      }
    }
    ok = ok && worst_zero_sum <= 1e-10;
    harness.report(10, "excess budgets point inward on the boundary and sum to zero", ok,
                   "smallest boundary excess " + fmt(worst_excess) + ", worst zero-sum " +
                       fmt(worst_zero_sum));
  }

  if (harness.failures == 0) std::printf("all criteria passed\n");
  return harness.failures;
}
