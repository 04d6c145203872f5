// Command-line front end: solve equilibria for given welfare weights or given
// endowments, scan the weight interval into CSV curve data, and run the
// verification battery against an economy configuration.
//
// Exit codes: 0 success, 1 configuration error, 2 solver did not converge,
// 3 no equilibrium weights found, 4 scan on an economy without exactly two
// consumers, 5 verification failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "walras/walras.hpp"

namespace {

walras::Vector parse_alpha_list(const std::string& csv) {
  walras::Vector values;
  std::stringstream stream(csv);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw walras::ConfigError("--alpha: cannot parse \"" + item + "\" as a number");
    }
  }
  if (values.empty()) throw walras::ConfigError("--alpha: expected a comma-separated list");
  return values;
}

int run_solve_weights(const std::string& economy_path, const std::string& alpha_csv,
                      std::optional<double> tol) {
  const walras::EconomyConfig config = walras::load_economy_config(economy_path);
  walras::Vector alpha = parse_alpha_list(alpha_csv);
  if (alpha.size() != config.economy.num_consumers())
    throw walras::ConfigError("--alpha: expected " +
                              std::to_string(config.economy.num_consumers()) + " weights, got " +
                              std::to_string(alpha.size()));
  walras::DualSolveOptions options;
  if (tol) options.gradient_tol = *tol;
  const walras::EquilibriumPoint point = walras::equilibrium_from_weights(
      config.economy, walras::WelfareWeights(std::move(alpha)), options);
  std::cout << walras::equilibrium_report_json(point, config.normalization);
  return 0;
}

int run_solve_endowments(const std::string& economy_path, int starts,
                         std::optional<double> tol) {
  const walras::EconomyConfig config = walras::load_economy_config(economy_path);
  walras::WeightSolveOptions options;
  options.starts = starts;
  if (tol) options.tol = *tol;
  const walras::SolveReport report = walras::solve_equilibrium_weights(config.economy, options);
  std::cout << walras::weight_solve_report_json(report, config.normalization);
  return 0;
}

int run_scan(const std::string& economy_path, int grid_points, const std::string& out_path) {
  const walras::EconomyConfig config = walras::load_economy_config(economy_path);
  if (config.economy.num_consumers() != 2) {
    std::cerr << "scan: economy must have exactly two consumers\n";
    return 4;
  }
  const std::string csv = walras::scan_csv(config.economy, config.normalization, grid_points);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw walras::ConfigError(out_path + ": cannot open for writing");
  out << csv;
  return 0;
}

int run_verify(const std::string& economy_path, int samples, double tol, std::uint64_t seed) {
  const walras::EconomyConfig config = walras::load_economy_config(economy_path);
  const walras::VerificationOutcome outcome =
      walras::run_verification(config.economy, samples, tol, seed);
  std::string first_failure;
  for (const walras::VerificationCheck& check : outcome.checks) {
    const char* status = check.skipped ? "skip" : (check.passed ? "ok" : "FAIL");
    std::cout << status << ' ' << check.name << " - " << check.detail << '\n';
    if (!check.passed && !check.skipped && first_failure.empty()) first_failure = check.name;
  }
  if (!outcome.all_passed) {
    std::cerr << "verify: first failing invariant: " << first_failure << '\n';
    return 5;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walrasian equilibria of exchange economies via the economy's potential"};
  app.require_subcommand(1);

  std::string economy_path;
  std::string alpha_csv;
  double tol_value = 0.0;
  bool tol_set = false;
  int starts = 0;
  int grid_points = 81;
  std::string out_path;
  int samples = 1000;
  double verify_tol = 1e-8;
  std::uint64_t seed = 1;

  CLI::App* solve_weights =
      app.add_subcommand("solve-weights", "equilibrium for given welfare weights");
  solve_weights->add_option("--economy", economy_path, "economy configuration file")->required();
  solve_weights->add_option("--alpha", alpha_csv, "comma-separated welfare weights")->required();
  solve_weights->add_option("--tol", tol_value, "dual gradient tolerance")
      ->each([&](const std::string&) { tol_set = true; });

  CLI::App* solve_endowments =
      app.add_subcommand("solve-endowments", "all equilibrium weight vectors for the endowments");
  solve_endowments->add_option("--economy", economy_path, "economy configuration file")
      ->required();
  solve_endowments->add_option("--starts", starts, "number of multistart points");
  solve_endowments->add_option("--tol", tol_value, "residual tolerance")
      ->each([&](const std::string&) { tol_set = true; });

  CLI::App* scan = app.add_subcommand("scan", "CSV of equilibria over a welfare-weight grid");
  scan->add_option("--economy", economy_path, "economy configuration file")->required();
  scan->add_option("--alpha-grid", grid_points, "number of interior grid points");
  scan->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* verify = app.add_subcommand("verify", "run the invariant battery");
  verify->add_option("--economy", economy_path, "economy configuration file")->required();
  verify->add_option("--samples", samples, "random samples per sampled invariant");
  verify->add_option("--tol", verify_tol, "utility-clearing tolerance");
  verify->add_option("--seed", seed, "seed for sampled invariants (never affects solves)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << '\n';
    return 1;
  }

  const std::optional<double> tol =
      tol_set ? std::optional<double>(tol_value) : std::nullopt;
  try {
    if (solve_weights->parsed()) return run_solve_weights(economy_path, alpha_csv, tol);
    if (solve_endowments->parsed()) return run_solve_endowments(economy_path, starts, tol);
    if (scan->parsed()) return run_scan(economy_path, grid_points, out_path);
    if (verify->parsed()) return run_verify(economy_path, samples, verify_tol, seed);
  } catch (const walras::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const walras::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const walras::NoSolutionFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const walras::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
