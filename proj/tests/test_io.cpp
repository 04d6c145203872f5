#include <cmath>
#include <cstdlib>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "test_economies.hpp"
#include "walras/io.hpp"

using namespace walras;

namespace {

const char* kPairConfig = R"({
  "goods": 2,
  "normalization": "sum_to_one",
  "consumers": [
    {"utility": {"family": "cobb_douglas", "coeffs": [2, 1]}, "endowment": [1.5, 1.5]},
    {"utility": {"family": "cobb_douglas", "coeffs": [1, 2]}, "endowment": [1.5, 1.5]}
  ]
})";

}  // namespace

TEST_CASE("config parsing accepts every family") {
  const char* text = R"({
    "goods": 2,
    "consumers": [
      {"utility": {"family": "cobb_douglas", "coeffs": [2, 1]}, "endowment": [1, 1]},
      {"utility": {"family": "ces", "rho": -0.5, "weights": [1, 2]}, "endowment": [1, 1]},
      {"utility": {"family": "linear_aggregate", "coeffs": [2, 1]}, "endowment": [1, 1]},
      {"utility": {"family": "separable_isoelastic", "theta": [1, 1], "gamma": [0.5, -2]},
       "endowment": [1, 1]}
    ]
  })";
  const EconomyConfig config = parse_economy_config(text, "test");
  CHECK(config.economy.num_consumers() == 4);
  CHECK(config.economy.num_goods() == 2);
  CHECK(config.normalization == PriceNormalization::SumToOne);
  CHECK_FALSE(config.economy.dual_is_smooth());
}

TEST_CASE("config errors are anchored to the offending field") {
  auto message_of = [](const char* text) {
    try {
      parse_economy_config(text, "cfg");
      return std::string();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
  };

  CHECK(message_of(R"({"consumers": []})").find("cfg.goods") != std::string::npos);
  CHECK(message_of(R"({"goods": 2, "consumers": []})").find("consumers") != std::string::npos);
  CHECK(message_of(R"({"goods": 0, "consumers": []})").find("goods") != std::string::npos);

  const std::string bad_rho = message_of(R"({
    "goods": 2,
    "consumers": [
      {"utility": {"family": "ces", "rho": 1.0, "weights": [1, 1]}, "endowment": [1, 1]}
    ]
  })");
  CHECK(bad_rho.find("consumers[0].utility") != std::string::npos);
  CHECK(bad_rho.find("rho") != std::string::npos);

  const std::string bad_family = message_of(R"({
    "goods": 2,
    "consumers": [{"utility": {"family": "leontief", "coeffs": [1, 1]}, "endowment": [1, 1]}]
  })");
  CHECK(bad_family.find("family") != std::string::npos);

  const std::string short_endowment = message_of(R"({
    "goods": 2,
    "consumers": [{"utility": {"family": "cobb_douglas", "coeffs": [1, 1]}, "endowment": [1]}]
  })");
  CHECK(short_endowment.find("endowment") != std::string::npos);

  CHECK_FALSE(message_of("{not json").empty());
  CHECK(message_of(R"({"goods": 2, "normalization": "other", "consumers": []})")
            .find("normalization") != std::string::npos);
}

TEST_CASE("number formatting round-trips doubles losslessly") {
  detail::Sampler rng(47);
  for (int trial = 0; trial < 1000; ++trial) {
    const double value = (rng.uniform() - 0.5) * rng.log_uniform(-30.0, 30.0);
    const std::string text = format_number(value);
    CHECK(std::strtod(text.c_str(), nullptr) == value);
  }
  CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("equilibrium report serializes deterministically and round-trips") {
  const EconomyConfig config = parse_economy_config(kPairConfig, "pair");
  const EquilibriumPoint point =
      equilibrium_from_weights(config.economy, WelfareWeights{{0.5, 0.5}});
  const std::string first = equilibrium_report_json(point, config.normalization);
  const std::string second = equilibrium_report_json(point, config.normalization);
  CHECK(first == second);

  const nlohmann::json parsed = nlohmann::json::parse(first);
  CHECK(parsed["weights"].size() == 2);
  CHECK(parsed["normalization"] == "sum_to_one");
  CHECK(parsed["prices"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(parsed["incomes"][0].get<double>() == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(parsed["allocation"][0][0].get<double>() == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::abs(parsed["potential_residual"].get<double>()) < 1e-8);
  CHECK(parsed["diagnostics"].contains("iterations"));
  CHECK(parsed["diagnostics"].contains("gradient_norm"));

  // reported incomes stay consistent with reported prices
  const double scale = parsed["price_scale"].get<double>();
  const auto& raw = point.prices.values();
  for (std::size_t g = 0; g < raw.size(); ++g)
    CHECK(parsed["prices"][g].get<double>() == doctest::Approx(raw[g] * scale));
}

TEST_CASE("weight solve report lists solutions and start traces") {
  const Economy mirror = fixtures::isoelastic_mirror();
  WeightSolveOptions options;
  options.starts = 6;
  const SolveReport report = solve_equilibrium_weights(mirror, options);
  const std::string json_text = weight_solve_report_json(report, PriceNormalization::SumToOne);
  const nlohmann::json parsed = nlohmann::json::parse(json_text);
  CHECK(parsed["solutions"].size() == report.solutions.size());
  CHECK(parsed["starts"].size() == 6);
  CHECK(parsed["dedup_radius"].get<double>() == doctest::Approx(1e-4));
  for (const auto& start : parsed["starts"]) CHECK(start.contains("converged"));
}

TEST_CASE("scan rows satisfy the closed forms of the mirrored log-linear pair") {
  const EconomyConfig config = parse_economy_config(kPairConfig, "pair");
  const std::string csv = scan_csv(config.economy, config.normalization, 9);
  std::vector<std::string> lines;
  std::stringstream stream(csv);
  std::string line;
  while (std::getline(stream, line)) lines.push_back(line);
  REQUIRE(lines.size() == 10);
  CHECK(lines.front() == "alpha,p1,p2,u1,u2,v1,v2,W,V");
  for (std::size_t row = 1; row < lines.size(); ++row) {
    std::stringstream cells(lines[row]);
    std::vector<double> values;
    std::string cell;
    while (std::getline(cells, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
    REQUIRE(values.size() == 9);
    const double a = values[0];
    CHECK(a == doctest::Approx(row / 10.0).epsilon(1e-12));
    CHECK(values[1] == doctest::Approx((1.0 + a) / 3.0).epsilon(1e-8));  // price column
    CHECK(values[7] == doctest::Approx(values[8]).epsilon(1e-10));       // W == V
    CHECK(values[3] == doctest::Approx(values[5]).epsilon(1e-8));        // u1 == v1
    CHECK(values[4] == doctest::Approx(values[6]).epsilon(1e-8));        // u2 == v2
  }
}

TEST_CASE("scan rows with unrecoverable allocations keep prices and leave the rest empty") {
  // three goods and identical flat aggregates: demand ties at the symmetric
  // equilibrium and no two-by-two primal recovery applies
  const Economy degenerate({
      Consumer{LinearAggregate{{1.0, 1.0, 1.0}}, Endowment({1.0, 1.0, 1.0})},
      Consumer{LinearAggregate{{1.0, 1.0, 1.0}}, Endowment({1.0, 1.0, 1.0})},
  });
  const ScanRow row = compute_scan_row(degenerate, 0.5, PriceNormalization::SumToOne);
  REQUIRE(row.prices.size() == 3);
  for (double p : row.prices) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK_FALSE(row.u1.has_value());
  CHECK_FALSE(row.welfare.has_value());

  const std::string csv = scan_csv(degenerate, PriceNormalization::SumToOne, 3);
  std::stringstream stream(csv);
  std::string header, first_row;
  std::getline(stream, header);
  std::getline(stream, first_row);
  CHECK(header == "alpha,p1,p2,p3,u1,u2,v1,v2,W,V");
  CHECK(first_row.substr(first_row.size() - 6) == ",,,,,,");
}

TEST_CASE("verification battery passes on the fixture economies") {
  const VerificationOutcome pair = run_verification(fixtures::cobb_douglas_pair(), 100, 1e-8, 1);
  CHECK(pair.all_passed);
  REQUIRE(pair.checks.size() == 5);
  for (const VerificationCheck& check : pair.checks) CHECK((check.passed || check.skipped));

  const VerificationOutcome mirror = run_verification(fixtures::isoelastic_mirror(), 60, 1e-8, 1);
  CHECK(mirror.all_passed);
}
