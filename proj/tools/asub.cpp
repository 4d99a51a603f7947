#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "asub/app.hpp"
#include "asub/errors.hpp"

namespace app = asub::app;

int main(int argc, char** argv) {
  CLI::App cli{"Active subspace analysis of functionals on discretized function spaces"};
  cli.require_subcommand(1);

  std::string config_path, out_dir, estimate_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> n;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "top-level seed (overrides the config)");
  };
  auto* estimate = cli.add_subcommand("estimate", "estimate the active subspace and write its spectrum");
  auto* project = cli.add_subcommand("project", "project stored samples onto leading eigenfunctions");
  auto* knn = cli.add_subcommand("knn", "leave-one-out KNN errors for the L2 and active-subspace metrics");
  auto* bo = cli.add_subcommand("bo", "compare Bayesian optimization on active and random spans");
  auto* gradcheck = cli.add_subcommand("gradcheck", "finite-difference check of the functional's gradient");
  auto* converge = cli.add_subcommand("converge", "Monte Carlo convergence diagnostic");
  for (auto* sub : {estimate, project, knn, bo, gradcheck, converge}) common(sub);
  for (auto* sub : {project, knn}) sub->add_option("--estimate", estimate_path, "asm-json file from 'estimate'")->required();
  project->add_option("--n", n, "number of leading eigenfunctions (overrides project.n)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto cfg = app::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;

    std::vector<std::filesystem::path> written;
    if (*estimate) written = app::cmd_estimate(cfg);
    else if (*project) written = app::cmd_project(cfg, estimate_path, n);
    else if (*knn) written = app::cmd_knn(cfg, estimate_path);
    else if (*bo) written = app::cmd_bo(cfg);
    else if (*gradcheck) written = app::cmd_gradcheck(cfg);
    else if (*converge) written = app::cmd_converge(cfg);
    for (const auto& p : written) std::cout << p.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code_for(e);
  }
}
