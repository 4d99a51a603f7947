#pragma once

// Bayesian optimization of a functional restricted to a finite span
//   g(c) = f(sum_i c_i * ell * q_i),  c in [-1, 1]^R,
// with a GP surrogate and expected improvement, and the comparison of an
// active-subspace basis against a random-sample basis.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asub/functionals.hpp"
#include "asub/gp.hpp"
#include "asub/randfield.hpp"

namespace asub {

class SpanObjective {
 public:
  SpanObjective(FunctionalPtr f, Subspace basis, double ell);

  Index dim() const { return basis_.dim(); }
  double ell() const { return ell_; }
  const Subspace& basis() const { return basis_; }
  const Functional& functional() const { return *f_; }

  Field to_field(const Eigen::VectorXd& c) const;
  double operator()(const Eigen::VectorXd& c) const { return f_->evaluate(to_field(c)); }

 private:
  FunctionalPtr f_;
  Subspace basis_;
  double ell_;
};

struct SpanSetup {
  SpanObjective objective;
  Eigen::MatrixXd init_coefficients;  // R x N_init, coefficients against the basis
  Eigen::MatrixXd init_cube;          // R x N_init, coefficients / ell
};

/// Coefficients of the initial functions (columns of `init_functions`) by the
/// normal equations (Q*Q)^{-1} Q* M, and ell = 1.5 max |coefficient|.
SpanSetup build_span_objective(FunctionalPtr f, const Subspace& basis, const Eigen::MatrixXd& init_functions);

/// EI for minimization: (best - mean) Phi(z) + sd phi(z), z = (best - mean) / sd.
double expected_improvement(double mean, double sd, double best);

struct BOOptions {
  Index candidates = 1024;
  Index polish_starts = 4;
  int polish_steps = 50;
  GpFitOptions gp{};
};

struct BOTrace {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;
  std::vector<double> best;  // best-so-far, nonincreasing
  std::string method;
  std::uint64_t seed = 0;
  Index n_init = 0;
  Index gradient_calls = 0;
  std::optional<std::string> error;

  Index evaluations() const { return static_cast<Index>(values.size()); }
};

/// Evaluates the cube center, then the columns of init_cube, then n_seq points
/// chosen by maximizing EI.
BOTrace run_bo(const SpanObjective& objective, const Eigen::MatrixXd& init_cube, Index n_seq, std::uint64_t seed,
               const BOOptions& options = {});

struct MethodSummary {
  std::string method;
  Eigen::MatrixXd percentiles;  // iterations x 3 (p10, p50, p90)
  std::vector<BOTrace> traces;
};

struct ComparisonOptions {
  Index R = 4;
  Index n_init = 10;
  Index n_seq = 40;
  int repetitions = 20;
  std::uint64_t seed = 0;
  BOOptions bo{};
};

/// Runs ASM and Rand searches for each repetition; entries are {ASM, Rand}.
std::vector<MethodSummary> compare_methods(FunctionalPtr f, const GaussianMeasure& measure,
                                           const ComparisonOptions& options);

/// Per-iteration 10/50/90 percentiles of best-so-far over traces; shorter traces
/// carry their last value forward.
Eigen::MatrixXd best_so_far_percentiles(const std::vector<BOTrace>& traces);

}  // namespace asub
