#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "walras/common.hpp"
#include "walras/economy.hpp"
#include "walras/negishi.hpp"
#include "walras/oracle.hpp"
#include "walras/potential.hpp"

namespace walras {

// ---------------------------------------------------------------------------
// Economy configuration (JSON)
// ---------------------------------------------------------------------------

struct EconomyConfig {
  Economy economy;
  PriceNormalization normalization = PriceNormalization::SumToOne;
};

namespace detail {

using nlohmann::json;

inline const json& member(const json& node, const std::string& key, const std::string& path) {
  if (!node.is_object()) throw ConfigError(path + ": expected an object");
  auto it = node.find(key);
  if (it == node.end()) throw ConfigError(path + "." + key + ": missing required field");
  return *it;
}

inline double number_at(const json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path + ": expected a number");
  return node.get<double>();
}

inline Vector number_array(const json& node, std::size_t expected, const std::string& path) {
  if (!node.is_array()) throw ConfigError(path + ": expected an array of numbers");
  if (node.size() != expected)
    throw ConfigError(path + ": expected " + std::to_string(expected) + " entries, got " +
                      std::to_string(node.size()));
  Vector out;
  out.reserve(expected);
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(number_at(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline UtilitySpec parse_utility(const json& node, std::size_t goods, const std::string& path) {
  const json& family_node = member(node, "family", path);
  if (!family_node.is_string()) throw ConfigError(path + ".family: expected a string");
  const std::string family = family_node.get<std::string>();
  try {
    if (family == "cobb_douglas")
      return CobbDouglas{number_array(member(node, "coeffs", path), goods, path + ".coeffs")};
    if (family == "ces")
      return Ces{number_at(member(node, "rho", path), path + ".rho"),
                 number_array(member(node, "weights", path), goods, path + ".weights")};
    if (family == "linear_aggregate")
      return LinearAggregate{number_array(member(node, "coeffs", path), goods, path + ".coeffs")};
    if (family == "separable_isoelastic")
      return SeparableIsoelastic{
          number_array(member(node, "theta", path), goods, path + ".theta"),
          number_array(member(node, "gamma", path), goods, path + ".gamma")};
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".family: unknown family \"" + family +
                    "\" (expected cobb_douglas, ces, linear_aggregate or separable_isoelastic)");
}

}  // namespace detail

inline EconomyConfig parse_economy_config(const std::string& text, const std::string& origin) {
  detail::json root;
  try {
    root = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  const detail::json& goods_node = detail::member(root, "goods", origin);
  if (!goods_node.is_number_integer() || goods_node.get<long long>() < 1)
    throw ConfigError(origin + ".goods: expected a positive integer");
  const std::size_t goods = goods_node.get<std::size_t>();

  PriceNormalization mode = PriceNormalization::SumToOne;
  if (auto it = root.find("normalization"); it != root.end()) {
    if (!it->is_string()) throw ConfigError(origin + ".normalization: expected a string");
    const std::string value = it->get<std::string>();
    if (value == "sum_to_one")
      mode = PriceNormalization::SumToOne;
    else if (value == "numeraire")
      mode = PriceNormalization::Numeraire;
    else
      throw ConfigError(origin + ".normalization: expected \"sum_to_one\" or \"numeraire\"");
  }

  const detail::json& consumers_node = detail::member(root, "consumers", origin);
  if (!consumers_node.is_array() || consumers_node.empty())
    throw ConfigError(origin + ".consumers: expected a nonempty array");

  std::vector<Consumer> consumers;
  consumers.reserve(consumers_node.size());
  for (std::size_t i = 0; i < consumers_node.size(); ++i) {
    const std::string path = origin + ".consumers[" + std::to_string(i) + "]";
    const detail::json& entry = consumers_node[i];
    UtilitySpec utility = detail::parse_utility(detail::member(entry, "utility", path), goods,
                                                path + ".utility");
    Vector units =
        detail::number_array(detail::member(entry, "endowment", path), goods, path + ".endowment");
    try {
      consumers.push_back({std::move(utility), Endowment(std::move(units))});
    } catch (const DomainError& e) {
      throw ConfigError(path + ".endowment: " + e.what());
    }
  }
  try {
    return {Economy(std::move(consumers)), mode};
  } catch (const DomainError& e) {
    throw ConfigError(origin + ".consumers: " + e.what());
  }
}

inline EconomyConfig load_economy_config(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) throw ConfigError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return parse_economy_config(buffer.str(), path);
}

// ---------------------------------------------------------------------------
// Deterministic report writers
// ---------------------------------------------------------------------------

/// 17 significant digits: lossless round-trip for IEEE doubles and
/// byte-deterministic output.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

// JSON has no literal for non-finite numbers; emit null so reports from
// failed starts stay parseable.
inline std::string json_number(double v) {
  return std::isfinite(v) ? format_number(v) : std::string("null");
}

inline void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += json_number(values[i]);
  }
  out += ']';
}

inline const char* normalization_name(PriceNormalization mode) {
  return mode == PriceNormalization::SumToOne ? "sum_to_one" : "numeraire";
}

inline void append_equilibrium(std::string& out, const EquilibriumPoint& point,
                               PriceNormalization mode) {
  const PriceVector reported(point.prices.values(), mode);
  const double scale = reported.normalization_scale();
  out += "{\"weights\":";
  append_array(out, point.weights.values());
  out += ",\"normalization\":\"";
  out += normalization_name(mode);
  out += "\",\"price_scale\":";
  out += json_number(scale);
  out += ",\"prices\":";
  append_array(out, reported.normalized());
  out += ",\"incomes\":";
  append_array(out, scaled(point.incomes, scale));
  out += ",\"allocation\":[";
  for (std::size_t i = 0; i < point.allocation.num_consumers(); ++i) {
    if (i) out += ',';
    append_array(out, point.allocation.bundle(i));
  }
  out += "],\"potential_residual\":";
  out += json_number(point.potential_residual);
  out += ",\"diagnostics\":{\"iterations\":";
  out += std::to_string(point.diagnostics.iterations);
  out += ",\"gradient_norm\":";
  out += json_number(point.diagnostics.gradient_norm);
  out += ",\"nonsmooth_fallback\":";
  out += point.diagnostics.nonsmooth_fallback ? "true" : "false";
  out += ",\"allocation_ambiguous\":";
  out += point.diagnostics.allocation_ambiguous ? "true" : "false";
  out += ",\"market_clearing_error\":";
  out += json_number(point.diagnostics.market_clearing_error);
  out += ",\"walras_error\":";
  out += json_number(point.diagnostics.walras_error);
  out += ",\"optimality_error\":";
  out += json_number(point.diagnostics.optimality_error);
  out += "}}";
}

}  // namespace detail

inline std::string equilibrium_report_json(const EquilibriumPoint& point,
                                           PriceNormalization mode) {
  std::string out;
  detail::append_equilibrium(out, point, mode);
  out += '\n';
  return out;
}

inline std::string weight_solve_report_json(const SolveReport& report, PriceNormalization mode) {
  std::string out = "{\"dedup_radius\":";
  out += detail::json_number(report.dedup_radius);
  out += ",\"solutions\":[";
  for (std::size_t s = 0; s < report.solutions.size(); ++s) {
    if (s) out += ',';
    const WeightSolution& solution = report.solutions[s];
    out += "{\"weights\":";
    detail::append_array(out, solution.weights.values());
    out += ",\"residual_norm\":";
    out += detail::json_number(solution.residual_norm);
    out += ",\"equilibrium\":";
    detail::append_equilibrium(out, solution.equilibrium, mode);
    out += '}';
  }
  out += "],\"starts\":[";
  for (std::size_t t = 0; t < report.trace.size(); ++t) {
    if (t) out += ',';
    const StartTrace& trace = report.trace[t];
    out += "{\"index\":";
    out += std::to_string(trace.start_index);
    out += ",\"start\":";
    detail::append_array(out, trace.start);
    out += ",\"iterations\":";
    out += std::to_string(trace.iterations);
    out += ",\"final_residual\":";
    out += detail::json_number(trace.final_residual);
    out += ",\"converged\":";
    out += trace.converged ? "true" : "false";
    out += '}';
  }
  out += "]}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Weight scan (CSV)
// ---------------------------------------------------------------------------

struct ScanRow {
  double alpha1 = 0.0;
  Vector prices;  // normalized per config
  std::optional<double> u1, u2, v1, v2, welfare, dual;
};

/// One scan row at weights (alpha1, 1-alpha1). Price columns are normalized
/// per the requested mode; welfare/dual columns keep the solver's raw price
/// scale so the root identity W = V holds rowwise. Rows whose allocation is
/// genuinely unrecoverable (set-valued demand beyond the 2x2 program) keep
/// the price columns and leave the rest empty.
inline ScanRow compute_scan_row(const Economy& economy, double alpha1, PriceNormalization mode,
                                const DualSolveOptions& options = {}) {
  detail::require_spec(economy.num_consumers() == 2, "scans need exactly two consumers");
  detail::require_spec(alpha1 > 0.0 && alpha1 < 1.0, "alpha1 must lie in (0,1)");
  const WelfareWeights weights{{alpha1, 1.0 - alpha1}};
  ScanRow row;
  row.alpha1 = alpha1;
  try {
    const EquilibriumPoint point = equilibrium_from_weights(economy, weights, options);
    row.prices = PriceVector(point.prices.values(), mode).normalized();
    row.u1 = utility(economy.consumer(0).utility, point.allocation.bundle(0));
    row.u2 = utility(economy.consumer(1).utility, point.allocation.bundle(1));
    row.v1 = indirect_utility(economy.consumer(0).utility, point.prices.values(),
                              point.incomes[0]);
    row.v2 = indirect_utility(economy.consumer(1).utility, point.prices.values(),
                              point.incomes[1]);
    row.welfare = weighted_utility(economy, weights, point.allocation);
    row.dual = *row.welfare - point.potential_residual;
  } catch (const TieError&) {
    const DualSolveResult dual = minimize_dual(economy, weights, options);
    row.prices = PriceVector(dual.prices.values(), mode).normalized();
  }
  return row;
}

inline std::string scan_csv(const Economy& economy, PriceNormalization mode, int grid_points,
                            const DualSolveOptions& options = {}) {
  detail::require_spec(grid_points >= 1, "scan grid needs at least one point");
  std::string out = "alpha";
  for (std::size_t g = 0; g < economy.num_goods(); ++g)
    out += ",p" + std::to_string(g + 1);
  out += ",u1,u2,v1,v2,W,V\n";

  auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (int j = 1; j <= grid_points; ++j) {
    const double alpha1 = static_cast<double>(j) / (grid_points + 1);
    const ScanRow row = compute_scan_row(economy, alpha1, mode, options);
    out += format_number(row.alpha1);
    for (double p : row.prices) out += ',' + format_number(p);
    out += ',' + cell(row.u1) + ',' + cell(row.u2) + ',' + cell(row.v1) + ',' + cell(row.v2) +
           ',' + cell(row.welfare) + ',' + cell(row.dual) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification battery
// ---------------------------------------------------------------------------

struct VerificationCheck {
  std::string name;
  bool passed = true;
  bool skipped = false;
  std::string detail;
};

struct VerificationOutcome {
  std::vector<VerificationCheck> checks;
  bool all_passed = true;
};

/// Runs the invariant battery against one economy: potential nonpositivity on
/// random feasible samples, Roy's identity against finite differences of the
/// closed-form duals, welfare-gradient/price duality, utility clearing at
/// solved equilibria, and weight fixed-point residuals.
inline VerificationOutcome run_verification(const Economy& economy, int samples, double tol,
                                            std::uint64_t seed) {
  detail::require_spec(samples >= 1, "verification needs at least one sample");
  detail::require_spec(tol > 0.0, "verification tolerance must be positive");
  VerificationOutcome outcome;
  const std::size_t n = economy.num_consumers();
  const std::size_t k = economy.num_goods();
  const Vector& w = economy.total_endowment();
  detail::Sampler rng(seed);

  auto push = [&](VerificationCheck check) {
    outcome.all_passed = outcome.all_passed && (check.passed || check.skipped);
    outcome.checks.push_back(std::move(check));
  };

  // nonpositivity of the potential on random feasible samples
  {
    VerificationCheck check;
    check.name = "potential_nonpositivity";
    const Vector alpha_center(n, 1.0 / n);
    double worst = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples && check.passed; ++s) {
      Allocation x(n, k);
      for (std::size_t g = 0; g < k; ++g) {
        Vector shares(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += shares[i] = rng.uniform(0.02, 1.0);
        const double used = rng.uniform(0.7, 1.0);
        for (std::size_t i = 0; i < n; ++i) x.bundle(i)[g] = w[g] * used * shares[i] / total;
      }
      Vector p(k);
      for (std::size_t g = 0; g < k; ++g) p[g] = rng.log_uniform(-2.0, 2.0);
      Vector alpha(n);
      for (std::size_t i = 0; i < n; ++i) alpha[i] = rng.uniform(0.1, 1.0);
      const double y = potential(economy, alpha, x, p);
      worst = std::max(worst, y);
      if (y > 1e-12) {
        check.passed = false;
        check.detail = "potential " + format_number(y) + " > 1e-12 at sample " + std::to_string(s);
      }
    }
    if (check.passed) check.detail = "worst potential " + format_number(worst);
    push(std::move(check));
  }

  // Roy's identity: demand equals minus the finite-difference dual gradient
  {
    VerificationCheck check;
    check.name = "roy_identity";
    const int per_consumer = std::min(samples, 50);
    double worst = 0.0;
    int skipped_ties = 0;
    for (std::size_t i = 0; i < n && check.passed; ++i) {
      const UtilitySpec& spec = economy.consumer(i).utility;
      for (int s = 0; s < per_consumer && check.passed; ++s) {
        Vector q(k);
        for (std::size_t g = 0; g < k; ++g) q[g] = rng.uniform(0.3, 3.0);
        try {
          const Vector demand = fenchel_demand(spec, q);
          const Vector grad = fd_gradient(
              [&](std::span<const double> prices) { return fenchel_dual(spec, prices); }, q, 1e-5);
          for (std::size_t g = 0; g < k; ++g) {
            const double err = std::abs(demand[g] + grad[g]) / (1.0 + std::abs(demand[g]));
            worst = std::max(worst, err);
            if (err > 1e-5) {
              check.passed = false;
              check.detail = "consumer " + std::to_string(i) + ": relative error " +
                             format_number(err) + " > 1e-5";
            }
          }
        } catch (const TieError&) {
          ++skipped_ties;
        }
      }
    }
    if (check.passed)
      check.detail = "worst relative error " + format_number(worst) +
                     (skipped_ties ? " (" + std::to_string(skipped_ties) + " tied samples skipped)"
                                   : std::string());
    push(std::move(check));
  }

  // welfare gradient equals equilibrium prices
  {
    VerificationCheck check;
    check.name = "gradient_duality";
    if (!economy.dual_is_smooth()) {
      check.skipped = true;
      check.detail = "skipped: welfare gradient needs a smooth dual";
    } else {
      const WelfareWeights weights{Vector(n, 1.0 / n)};
      const Vector prices = minimize_dual(economy, weights).prices.values();
      const Vector grad = welfare_gradient(economy, weights);
      double worst = 0.0;
      for (std::size_t g = 0; g < k; ++g)
        worst = std::max(worst, std::abs(grad[g] - prices[g]) / std::abs(prices[g]));
      check.passed = worst <= 1e-4;
      check.detail = "worst relative gap " + format_number(worst);
    }
    push(std::move(check));
  }

  // utility clearing: the potential vanishes and u_i = v_i at equilibria
  {
    VerificationCheck check;
    check.name = "utility_clearing";
    std::vector<Vector> test_weights;
    test_weights.emplace_back(n, 1.0 / n);
    for (std::size_t i = 0; i < std::min<std::size_t>(n, 3); ++i) {
      Vector skewed(n, 0.3 / (n - 1));
      skewed[i] = 0.7;
      test_weights.push_back(std::move(skewed));
    }
    double worst = 0.0;
    for (const Vector& alpha : test_weights) {
      if (!check.passed) break;
      try {
        const EquilibriumPoint point = equilibrium_from_weights(economy, WelfareWeights(alpha));
        const double err =
            std::max(std::abs(point.potential_residual), point.diagnostics.optimality_error);
        worst = std::max(worst, err);
        if (err > tol) {
          check.passed = false;
          check.detail = "residual " + format_number(err) + " > " + format_number(tol);
        }
      } catch (const Error& e) {
        check.passed = false;
        check.detail = e.what();
      }
    }
    if (check.passed) check.detail = "worst residual " + format_number(worst);
    push(std::move(check));
  }

  // every reported weight solution satisfies its residual bound
  {
    VerificationCheck check;
    check.name = "weight_fixed_point";
    WeightSolveOptions options;
    options.starts = 8;
    try {
      const SolveReport report = solve_equilibrium_weights(economy, options);
      double worst = 0.0;
      for (const WeightSolution& solution : report.solutions)
        worst = std::max(worst, solution.residual_norm);
      check.passed = worst <= options.tol;
      check.detail = std::to_string(report.solutions.size()) + " solution(s), worst residual " +
                     format_number(worst);
    } catch (const NoSolutionFound& e) {
      check.passed = false;
      check.detail = e.what();
    } catch (const ConvergenceError& e) {
      check.skipped = true;  // nonsmooth endowment solves are supported only when the
                             // dual fallback converges
      check.detail = std::string("skipped: ") + e.what();
    }
    push(std::move(check));
  }

  return outcome;
}

}  // namespace walras
