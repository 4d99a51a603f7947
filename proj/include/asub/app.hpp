#pragma once

// Config parsing and the command drivers behind the asub executable.
//
// Config schema (JSON). Paths are relative to the config file.
//   seed          integer, default 0 (measure.seed is accepted as a fallback)
//   grid          {"nx", "ny"}: unit-square grid, both >= 3
//   measure       {"type": "separable_sine", "m_per_axis", "decay", "amplitude"}
//   functional    {"type": "linear", "h1": ref, "h2": ref}
//                 {"type": "quadratic", "terms": [{"field": ref, "a": real}, ...]}
//                 {"type": "quadratic", "lambdas": [...]}   a_j^2 kl_j = lambda_j on KL mode j
//                 {"type": "ridge", "directions": [ref, ...], "profile": "sum" | "half_squared_norm" |
//                  "sinusoidal", "scale"}
//                 {"type": "poisson_control", "alpha", "solver_tol", "solver_max_iter", "target": ref}
//   estimator     {"B", "rank_tol"}
//   project       {"n", "grid_res"}
//   knn           {"N", "K_range": [lo, hi], "n"}
//   bo            {"R", "n_init", "n_seq", "repetitions", "candidates"}
//   convergence   {"B_grid": [...], "seeds", "track"}
//   gradcheck     {"directions", "step"}
//   output        {"dir"}
// A field reference `ref` is either a path to a field-json file or
// {"kl_mode": i, "scale": s}, meaning s times KL function i of the measure.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asub/bayesopt.hpp"
#include "asub/functionals.hpp"
#include "asub/randfield.hpp"

namespace asub::app {

struct RunConfig {
  std::uint64_t seed = 0;
  SpacePtr<double> space;
  std::optional<GaussianMeasure> measure;
  FunctionalPtr functional;
  nlohmann::json functional_spec;

  Index B = 100;
  double rank_tol = 1e-12;

  Index project_n = 2;
  Index grid_res = 50;

  Index knn_N = 300;
  Index K_lo = 1, K_hi = 20;
  Index knn_n = 2;

  ComparisonOptions bo{};

  std::vector<Index> B_grid{50, 100, 200, 400, 800, 1600};
  int convergence_seeds = 20;
  int track = 3;

  Index gradcheck_directions = 10;
  double gradcheck_step = 1e-6;

  std::filesystem::path out_dir = "out";
};

/// Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Each command returns the files it wrote. On failure nothing it started
/// writing is left behind.
std::vector<std::filesystem::path> cmd_estimate(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_project(const RunConfig& cfg, const std::filesystem::path& estimate,
                                               std::optional<Index> n = std::nullopt);
std::vector<std::filesystem::path> cmd_knn(const RunConfig& cfg, const std::filesystem::path& estimate);
std::vector<std::filesystem::path> cmd_bo(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_gradcheck(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_converge(const RunConfig& cfg);

/// 0 success, 2 config or input error, 3 numerical failure, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace asub::app
