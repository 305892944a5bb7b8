#include "wost/driver.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kInvariant = 3, kMissingFile = 4, kMismatch = 5, kIo = 6 };

int exit_code(wost::ErrorCategory c) {
  switch (c) {
    case wost::ErrorCategory::Usage: return kUsage;
    case wost::ErrorCategory::Parse: return kParse;
    case wost::ErrorCategory::Invariant: return kInvariant;
    case wost::ErrorCategory::MissingFile: return kMissingFile;
    case wost::ErrorCategory::Mismatch: return kMismatch;
    case wost::ErrorCategory::Io: return kIo;
  }
  return kUsage;
}

wost::Method method_or_throw(const std::string& name) {
  const auto m = wost::parse_method(name);
  if (!m) {
    throw wost::Error(wost::ErrorCategory::Usage,
                      "unknown estimator '" + name + "' (wost, wos, wos_reflect, sde, random_intersection)");
  }
  return *m;
}

std::vector<int> parse_walk_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& w : wost::split_on(text, ',')) {
    long long v;
    if (!wost::parse_int(w, v) || v < 1 || v > 1LL << 30) {
      throw wost::Error(wost::ErrorCategory::Usage, "bad walk count '" + w + "'");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walk on stars solver for mixed Dirichlet/Neumann boundary value problems"};
  app.require_subcommand(1);

  int threads = wost::hardware_threads();
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> overrides;
  std::string out_dir = ".";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "random seed");
    sub->add_option("--set", overrides, "override a config key, key=value (repeatable)");
    sub->add_option("--out-dir", out_dir, "directory for output files");
  };

  wost::SolveOptions solve;
  int solve_walks = 0;
  std::string solve_method = "wost";
  auto* cmd_solve = app.add_subcommand("solve", "estimate the solution at the scene's evaluation points");
  cmd_solve->add_option("config", solve.config_path, "scene config file")->required();
  cmd_solve->add_option("--walks", solve_walks, "walks per point (overrides eval.walks)")->check(CLI::PositiveNumber);
  cmd_solve->add_option("--estimator", solve_method, "wost, wos, wos_reflect, sde or random_intersection");
  common(cmd_solve);

  wost::CompareOptions compare;
  std::string compare_methods = "wost,wos_reflect,sde", compare_walks = "16,64,256,1024,4096";
  auto* cmd_compare = app.add_subcommand("compare", "RMSE of several estimators over a range of walk counts");
  cmd_compare->add_option("config", compare.config_path, "scene config file")->required();
  cmd_compare->add_option("--estimators", compare_methods, "comma separated estimator names");
  cmd_compare->add_option("--walks", compare_walks, "comma separated walk counts");
  cmd_compare->add_option("--reference-walks", compare.reference_walks,
                          "walks per point for the reference when the scene has none")
      ->check(CLI::PositiveNumber);
  common(cmd_compare);

  wost::ValidateOptions validate;
  std::string query = "all";
  auto* cmd_validate = app.add_subcommand("validate", "check accelerated geometric queries against brute force");
  cmd_validate->add_option("mesh", validate.mesh_path, "mesh file (.obj for 3D, otherwise 2D segments)")->required();
  cmd_validate->add_option("--query", query, "closest, silhouette, ray or all")
      ->check(CLI::IsMember({"closest", "silhouette", "ray", "all"}));
  cmd_validate->add_option("--queries", validate.queries, "number of random queries")->check(CLI::NonNegativeNumber);
  cmd_validate->add_option("--dimension", validate.dimension, "2 or 3; default from the file extension")
      ->check(CLI::IsMember({2, 3}));
  cmd_validate->add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& s) { seed = s, seed_given = true; }, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (cmd_solve->parsed()) {
      solve.overrides = overrides;
      if (solve_walks > 0) solve.walks = solve_walks;
      if (seed_given) solve.seed = seed;
      solve.threads = threads;
      solve.out_dir = out_dir;
      solve.method = method_or_throw(solve_method);
      const auto report = wost::run_solve(solve, std::cerr);
      std::cout << wost::format_report(report);
    } else if (cmd_compare->parsed()) {
      compare.overrides = overrides;
      compare.methods.clear();
      for (const auto& name : wost::split_on(compare_methods, ',')) compare.methods.push_back(method_or_throw(name));
      compare.walks = parse_walk_list(compare_walks);
      if (seed_given) compare.seed = seed;
      compare.threads = threads;
      compare.out_dir = out_dir;
      const auto report = wost::run_compare(compare, std::cerr);
      std::cout << "reference: " << report.reference_source << "\n" << wost::format_compare_csv(report);
      std::cout << "wrote " << report.csv_path << "\n";
    } else {
      using wost::QueryKind;
      if (query == "closest") validate.kinds = {QueryKind::Closest};
      if (query == "silhouette") validate.kinds = {QueryKind::Silhouette};
      if (query == "ray") validate.kinds = {QueryKind::Ray};
      validate.seed = seed;
      const auto report = wost::run_validate(validate, std::cerr);
      std::cout << wost::format_validate_report(report);
      if (!report.passed()) return kMismatch;
    }
  } catch (const wost::Error& e) {
    std::cerr << "wost: " << wost::to_string(e.category()) << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "wost: error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
