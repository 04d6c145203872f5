#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "walras/common.hpp"

namespace walras {

// ---------------------------------------------------------------------------
// Utility families
// ---------------------------------------------------------------------------

/// u(x) = sum_k c_k log x_k with c_k > 0.
struct CobbDouglas {
  Vector coeffs;
};

/// u(x) = (1/rho) log sum_k a_k x_k^rho with rho < 1, rho != 0, a_k > 0.
struct Ces {
  double rho = 0.5;
  Vector weights;
};

/// u(x) = log <b|x> with b_k >= 0, not all zero. Concave but not strictly:
/// demand is set-valued wherever argmax_k b_k/p_k ties.
struct LinearAggregate {
  Vector coeffs;
};

/// u(x) = sum_k theta_k x_k^{gamma_k} / gamma_k with theta_k > 0,
/// gamma_k < 1, gamma_k != 0.
struct SeparableIsoelastic {
  Vector theta;
  Vector gamma;
};

namespace detail {

template <class... Ts>
struct overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overload(Ts...) -> overload<Ts...>;

inline void require_spec(bool ok, const std::string& msg) {
  if (!ok) throw DomainError(msg);
}

}  // namespace detail

/// One consumer's preferences: a validated member of the four families.
class UtilitySpec {
 public:
  using Family = std::variant<CobbDouglas, Ces, LinearAggregate, SeparableIsoelastic>;

  UtilitySpec(CobbDouglas f) : family_(std::move(f)) { validate(); }
  UtilitySpec(Ces f) : family_(std::move(f)) { validate(); }
  UtilitySpec(LinearAggregate f) : family_(std::move(f)) { validate(); }
  UtilitySpec(SeparableIsoelastic f) : family_(std::move(f)) { validate(); }

  const Family& family() const { return family_; }

  std::size_t goods() const {
    return std::visit(detail::overload{
                          [](const CobbDouglas& f) { return f.coeffs.size(); },
                          [](const Ces& f) { return f.weights.size(); },
                          [](const LinearAggregate& f) { return f.coeffs.size(); },
                          [](const SeparableIsoelastic& f) { return f.theta.size(); }},
                      family_);
  }

  /// False only for LinearAggregate; the other families are strictly concave
  /// on the positive orthant.
  bool strictly_concave() const {
    return !std::holds_alternative<LinearAggregate>(family_);
  }

  const char* family_name() const {
    return std::visit(detail::overload{
                          [](const CobbDouglas&) { return "cobb_douglas"; },
                          [](const Ces&) { return "ces"; },
                          [](const LinearAggregate&) { return "linear_aggregate"; },
                          [](const SeparableIsoelastic&) { return "separable_isoelastic"; }},
                      family_);
  }

 private:
  void validate() const {
    using detail::require_spec;
    std::visit(detail::overload{
                   [](const CobbDouglas& f) {
                     require_spec(!f.coeffs.empty(), "cobb_douglas: coeffs must be nonempty");
                     for (double c : f.coeffs)
                       require_spec(c > 0.0 && std::isfinite(c), "cobb_douglas: coeffs must be positive");
                   },
                   [](const Ces& f) {
                     require_spec(!f.weights.empty(), "ces: weights must be nonempty");
                     require_spec(std::isfinite(f.rho) && f.rho < 1.0 && f.rho != 0.0,
                                  "ces: rho must satisfy rho < 1 and rho != 0");
                     for (double a : f.weights)
                       require_spec(a > 0.0 && std::isfinite(a), "ces: weights must be positive");
                   },
                   [](const LinearAggregate& f) {
                     require_spec(!f.coeffs.empty(), "linear_aggregate: coeffs must be nonempty");
                     bool any = false;
                     for (double b : f.coeffs) {
                       require_spec(b >= 0.0 && std::isfinite(b),
                                    "linear_aggregate: coeffs must be nonnegative");
                       any = any || b > 0.0;
                     }
                     require_spec(any, "linear_aggregate: coeffs must not all be zero");
                   },
                   [](const SeparableIsoelastic& f) {
                     require_spec(!f.theta.empty(), "separable_isoelastic: theta must be nonempty");
                     require_spec(f.theta.size() == f.gamma.size(),
                                  "separable_isoelastic: theta and gamma must have equal length");
                     for (double t : f.theta)
                       require_spec(t > 0.0 && std::isfinite(t),
                                    "separable_isoelastic: theta must be positive");
                     for (double g : f.gamma)
                       require_spec(std::isfinite(g) && g < 1.0 && g != 0.0,
                                    "separable_isoelastic: gamma must satisfy gamma < 1 and gamma != 0");
                   }},
               family_);
  }

  Family family_;
};

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

enum class PriceNormalization { SumToOne, Numeraire };

/// Strictly positive prices in currency per unit. The normalization mode is
/// carried alongside and applied only when reporting; the stored values keep
/// the solver's raw scale.
class PriceVector {
 public:
  explicit PriceVector(Vector values, PriceNormalization mode = PriceNormalization::SumToOne)
      : values_(std::move(values)), mode_(mode) {
    detail::require_spec(!values_.empty(), "prices must be nonempty");
    for (double p : values_)
      detail::require_spec(p > 0.0 && std::isfinite(p), "prices must be strictly positive");
  }

  const Vector& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  PriceNormalization normalization() const { return mode_; }

  /// Factor s such that normalized() == s * values().
  double normalization_scale() const {
    if (mode_ == PriceNormalization::SumToOne) return 1.0 / detail::sum(values_);
    return 1.0 / values_.front();
  }

  Vector normalized() const { return detail::scaled(values_, normalization_scale()); }

 private:
  Vector values_;
  PriceNormalization mode_;
};

/// Strictly positive initial holdings, in units of each good.
class Endowment {
 public:
  explicit Endowment(Vector units) : units_(std::move(units)) {
    detail::require_spec(!units_.empty(), "endowment must be nonempty");
    for (double w : units_)
      detail::require_spec(w > 0.0 && std::isfinite(w), "endowment must be strictly positive");
  }

  const Vector& values() const { return units_; }
  std::size_t size() const { return units_.size(); }

 private:
  Vector units_;
};

struct Consumer {
  UtilitySpec utility;
  Endowment endowment;
};

/// An exchange economy: N consumers over K goods plus the derived aggregate
/// endowment w_k = sum_i omega_ik.
class Economy {
 public:
  explicit Economy(std::vector<Consumer> consumers) : consumers_(std::move(consumers)) {
    detail::require_spec(!consumers_.empty(), "economy needs at least one consumer");
    const std::size_t k = consumers_.front().utility.goods();
    detail::require_spec(k >= 1, "economy needs at least one good");
    total_.assign(k, 0.0);
    for (const Consumer& c : consumers_) {
      detail::require_spec(c.utility.goods() == k && c.endowment.size() == k,
                           "all consumers must share the same number of goods");
      for (std::size_t g = 0; g < k; ++g) total_[g] += c.endowment.values()[g];
    }
  }

  std::size_t num_consumers() const { return consumers_.size(); }
  std::size_t num_goods() const { return total_.size(); }
  const Consumer& consumer(std::size_t i) const { return consumers_[i]; }
  const std::vector<Consumer>& consumers() const { return consumers_; }
  const Vector& total_endowment() const { return total_; }

  /// True when no consumer has a nonsmooth (linear-aggregate) dual.
  bool dual_is_smooth() const {
    for (const Consumer& c : consumers_)
      if (!c.utility.strictly_concave()) return false;
    return true;
  }

 private:
  std::vector<Consumer> consumers_;
  Vector total_;
};

/// N x K bundle matrix, row i = consumer i's bundle.
class Allocation {
 public:
  Allocation(std::size_t consumers, std::size_t goods)
      : consumers_(consumers), goods_(goods), entries_(consumers * goods, 0.0) {}

  Allocation(std::size_t consumers, std::size_t goods, Vector entries)
      : consumers_(consumers), goods_(goods), entries_(std::move(entries)) {
    detail::require_spec(entries_.size() == consumers_ * goods_,
                         "allocation entries must have consumers*goods elements");
  }

  std::size_t num_consumers() const { return consumers_; }
  std::size_t num_goods() const { return goods_; }
  const Vector& entries() const { return entries_; }

  std::span<const double> bundle(std::size_t i) const {
    return {entries_.data() + i * goods_, goods_};
  }
  std::span<double> bundle(std::size_t i) { return {entries_.data() + i * goods_, goods_}; }

  Vector good_totals() const {
    Vector t(goods_, 0.0);
    for (std::size_t i = 0; i < consumers_; ++i)
      for (std::size_t g = 0; g < goods_; ++g) t[g] += entries_[i * goods_ + g];
    return t;
  }

  /// Checks sum_i x_ik <= w_k + tol and x >= -tol componentwise.
  bool feasible_for(const Economy& economy, double tol) const {
    if (consumers_ != economy.num_consumers() || goods_ != economy.num_goods()) return false;
    for (double v : entries_)
      if (v < -tol) return false;
    const Vector totals = good_totals();
    for (std::size_t g = 0; g < goods_; ++g)
      if (totals[g] > economy.total_endowment()[g] + tol) return false;
    return true;
  }

 private:
  std::size_t consumers_;
  std::size_t goods_;
  Vector entries_;
};

// ---------------------------------------------------------------------------
// Per-consumer maps
// ---------------------------------------------------------------------------

namespace detail {

// Relative gap below which argmax_k b_k/q_k is treated as tied.
inline constexpr double kTieRelTol = 1e-7;

inline void check_size(std::span<const double> v, const UtilitySpec& spec, const char* what) {
  if (v.size() != spec.goods())
    throw DomainError(std::string(what) + ": expected " + std::to_string(spec.goods()) +
                      " coordinates, got " + std::to_string(v.size()));
}

inline void check_positive_prices(std::span<const double> q) {
  for (double p : q)
    if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("prices must be strictly positive");
}

}  // namespace detail

inline double utility(const UtilitySpec& spec, std::span<const double> bundle) {
  detail::check_size(bundle, spec, "utility bundle");
  return std::visit(
      detail::overload{
          [&](const CobbDouglas& f) {
            double u = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (!(bundle[k] > 0.0)) throw DomainError("cobb_douglas utility needs x_k > 0");
              u += f.coeffs[k] * std::log(bundle[k]);
            }
            return u;
          },
          [&](const Ces& f) {
            double s = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (bundle[k] < 0.0 || (f.rho < 0.0 && bundle[k] == 0.0))
                throw DomainError("ces utility needs x_k > 0 for rho < 0 and x_k >= 0 otherwise");
              s += f.weights[k] * std::pow(bundle[k], f.rho);
            }
            if (!(s > 0.0)) throw DomainError("ces utility undefined at the zero bundle");
            return std::log(s) / f.rho;
          },
          [&](const LinearAggregate& f) {
            double s = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (bundle[k] < 0.0) throw DomainError("linear_aggregate utility needs x_k >= 0");
              s += f.coeffs[k] * bundle[k];
            }
            if (!(s > 0.0)) throw DomainError("linear_aggregate utility needs <b|x> > 0");
            return std::log(s);
          },
          [&](const SeparableIsoelastic& f) {
            double u = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              const double g = f.gamma[k];
              if (bundle[k] < 0.0 || (g < 0.0 && bundle[k] == 0.0))
                throw DomainError(
                    "separable_isoelastic utility needs x_k > 0 for gamma_k < 0 and x_k >= 0 "
                    "otherwise");
              u += f.theta[k] * std::pow(bundle[k], g) / g;
            }
            return u;
          }},
      spec.family());
}

inline Vector grad_utility(const UtilitySpec& spec, std::span<const double> bundle) {
  detail::check_size(bundle, spec, "utility bundle");
  Vector grad(bundle.size());
  std::visit(
      detail::overload{
          [&](const CobbDouglas& f) {
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (!(bundle[k] > 0.0)) throw DomainError("cobb_douglas gradient needs x_k > 0");
              grad[k] = f.coeffs[k] / bundle[k];
            }
          },
          [&](const Ces& f) {
            double s = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (!(bundle[k] > 0.0)) throw DomainError("ces gradient needs x_k > 0");
              s += f.weights[k] * std::pow(bundle[k], f.rho);
            }
            for (std::size_t k = 0; k < bundle.size(); ++k)
              grad[k] = f.weights[k] * std::pow(bundle[k], f.rho - 1.0) / s;
          },
          [&](const LinearAggregate& f) {
            double s = 0.0;
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (bundle[k] < 0.0) throw DomainError("linear_aggregate gradient needs x_k >= 0");
              s += f.coeffs[k] * bundle[k];
            }
            if (!(s > 0.0)) throw DomainError("linear_aggregate gradient needs <b|x> > 0");
            for (std::size_t k = 0; k < bundle.size(); ++k) grad[k] = f.coeffs[k] / s;
          },
          [&](const SeparableIsoelastic& f) {
            for (std::size_t k = 0; k < bundle.size(); ++k) {
              if (!(bundle[k] > 0.0))
                throw DomainError("separable_isoelastic gradient needs x_k > 0");
              grad[k] = f.theta[k] * std::pow(bundle[k], f.gamma[k] - 1.0);
            }
          }},
      spec.family());
  return grad;
}

/// Conjugate value v̄(q) = max_{x>=0} u(x) - <q|x>, by closed form.
inline double fenchel_dual(const UtilitySpec& spec, std::span<const double> prices) {
  detail::check_size(prices, spec, "price vector");
  detail::check_positive_prices(prices);
  return std::visit(
      detail::overload{
          [&](const CobbDouglas& f) {
            double v = 0.0;
            for (std::size_t k = 0; k < prices.size(); ++k)
              v += f.coeffs[k] * (std::log(f.coeffs[k] / prices[k]) - 1.0);
            return v;
          },
          [&](const Ces& f) {
            const double r = f.rho / (f.rho - 1.0);
            double s = 0.0;
            for (std::size_t k = 0; k < prices.size(); ++k)
              s += f.weights[k] * std::pow(prices[k] / f.weights[k], r);
            return (1.0 - f.rho) / f.rho * std::log(s) - 1.0;
          },
          [&](const LinearAggregate& f) {
            double best = 0.0;
            for (std::size_t k = 0; k < prices.size(); ++k)
              best = std::max(best, f.coeffs[k] / prices[k]);
            return std::log(best) - 1.0;
          },
          [&](const SeparableIsoelastic& f) {
            double v = 0.0;
            for (std::size_t k = 0; k < prices.size(); ++k) {
              const double g = f.gamma[k];
              v += f.theta[k] * ((1.0 - g) / g) *
                   std::pow(prices[k] / f.theta[k], g / (g - 1.0));
            }
            return v;
          }},
      spec.family());
}

/// Maximizer x̄(q) of u(x) - <q|x>; equals -∇v̄(q) where the dual is smooth.
/// Throws TieError for linear-aggregate specs whose argmax_k b_k/q_k ties.
inline Vector fenchel_demand(const UtilitySpec& spec, std::span<const double> prices) {
  detail::check_size(prices, spec, "price vector");
  detail::check_positive_prices(prices);
  Vector x(prices.size(), 0.0);
  std::visit(
      detail::overload{
          [&](const CobbDouglas& f) {
            for (std::size_t k = 0; k < prices.size(); ++k) x[k] = f.coeffs[k] / prices[k];
          },
          [&](const Ces& f) {
            const double r = f.rho / (f.rho - 1.0);
            double denom = 0.0;
            for (std::size_t k = 0; k < prices.size(); ++k)
              denom += f.weights[k] * std::pow(prices[k] / f.weights[k], r);
            for (std::size_t k = 0; k < prices.size(); ++k)
              x[k] = std::pow(prices[k] / f.weights[k], 1.0 / (f.rho - 1.0)) / denom;
          },
          [&](const LinearAggregate& f) {
            std::size_t best = 0;
            double best_ratio = -1.0, second = -1.0;
            for (std::size_t k = 0; k < prices.size(); ++k) {
              const double ratio = f.coeffs[k] / prices[k];
              if (ratio > best_ratio) {
                second = best_ratio;
                best_ratio = ratio;
                best = k;
              } else if (ratio > second) {
                second = ratio;
              }
            }
            if (second > 0.0 && best_ratio - second <= detail::kTieRelTol * best_ratio)
              throw TieError("linear_aggregate demand is set-valued: argmax b_k/q_k ties");
            x[best] = 1.0 / prices[best];
          },
          [&](const SeparableIsoelastic& f) {
            for (std::size_t k = 0; k < prices.size(); ++k)
              x[k] = std::pow(prices[k] / f.theta[k], 1.0 / (f.gamma[k] - 1.0));
          }},
      spec.family());
  return x;
}

namespace detail {

// <p|x̄(lambda p)> as a function of lambda; strictly decreasing.
inline double budget_at_scale(const UtilitySpec& spec, std::span<const double> prices,
                              double lambda) {
  const Vector q = scaled(prices, lambda);
  return dot(prices, fenchel_demand(spec, q));
}

// Safeguarded bisection on log(lambda) with geometric bracket expansion.
inline double lambda_by_bisection(const UtilitySpec& spec, std::span<const double> prices,
                                  double income) {
  double lo = 1.0;  // will satisfy budget(lo) >= income
  double hi = 1.0;  // will satisfy budget(hi) <= income
  int guard = 0;
  while (budget_at_scale(spec, prices, lo) < income) {
    lo /= 8.0;
    if (!(lo > 1e-300) || ++guard > 400)
      throw ConvergenceError("marginal-utility bracket expansion exceeded bounds");
  }
  guard = 0;
  while (budget_at_scale(spec, prices, hi) > income) {
    hi *= 8.0;
    if (!(hi < 1e300) || ++guard > 400)
      throw ConvergenceError("marginal-utility bracket expansion exceeded bounds");
  }
  for (int it = 0; it < 220 && hi - lo > 1e-16 * lo; ++it) {
    const double mid = std::sqrt(lo * hi);
    (budget_at_scale(spec, prices, mid) >= income ? lo : hi) = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace detail

/// Marginal utility of income: the unique lambda > 0 solving
/// <p|x̄(lambda p)> = m. Closed forms where the family admits one, otherwise
/// safeguarded bisection on the strictly decreasing budget map.
inline double lambda_of_income(const UtilitySpec& spec, std::span<const double> prices,
                               double income) {
  detail::check_size(prices, spec, "price vector");
  detail::check_positive_prices(prices);
  if (!(income > 0.0) || !std::isfinite(income)) throw DomainError("income must be positive");
  return std::visit(
      detail::overload{
          [&](const CobbDouglas& f) { return detail::sum(f.coeffs) / income; },
          [&](const Ces&) { return 1.0 / income; },
          [&](const LinearAggregate&) { return 1.0 / income; },
          [&](const SeparableIsoelastic&) {
            return detail::lambda_by_bisection(spec, prices, income);
          }},
      spec.family());
}

/// Income m(alpha_i) = <p|x̄(p/alpha_i)>; the inverse of lambda_of_income at
/// lambda = 1/alpha_i.
inline double income_from_weight(const UtilitySpec& spec, std::span<const double> prices,
                                 double weight) {
  detail::check_size(prices, spec, "price vector");
  detail::check_positive_prices(prices);
  if (!(weight > 0.0) || !std::isfinite(weight)) throw DomainError("weight must be positive");
  const Vector q = detail::scaled(prices, 1.0 / weight);
  return detail::dot(prices, fenchel_demand(spec, q));
}

/// Classical indirect utility v(p,m) = lambda m + v̄(lambda p).
inline double indirect_utility(const UtilitySpec& spec, std::span<const double> prices,
                               double income) {
  const double lambda = lambda_of_income(spec, prices, income);
  const Vector q = detail::scaled(prices, lambda);
  return lambda * income + fenchel_dual(spec, q);
}

/// Marshallian demand x(p,m) = x̄(lambda(p,m) p); spends exactly m.
inline Vector marshallian_demand(const UtilitySpec& spec, std::span<const double> prices,
                                 double income) {
  const double lambda = lambda_of_income(spec, prices, income);
  const Vector q = detail::scaled(prices, lambda);
  return fenchel_demand(spec, q);
}

}  // namespace walras
