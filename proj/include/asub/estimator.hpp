#pragma once

// Sampling-side pieces of the active subspace pipeline: gradient collection
// under a Gaussian measure, closed-form operators for the analytic test
// functionals, the warped functional, and the convergence diagnostic.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "asub/active_subspace.hpp"
#include "asub/functionals.hpp"
#include "asub/randfield.hpp"

namespace asub {

/// Draws U_0..U_{B-1} from the measure with `seed` and evaluates f and its
/// gradient at each. Output depends only on (f, measure, B, seed).
/// On a failing sample the input is written to `dump_dir` (system temp dir
/// when empty) and SampleFailure is thrown.
GradientSampleSet collect_gradients(const Functional& f, const GaussianMeasure& measure, Index B, std::uint64_t seed,
                                    const std::filesystem::path& dump_dir = {});

/// Evaluates f and its gradient at given inputs (columns).
GradientSampleSet collect_gradients_at(const Functional& f, const SpacePtr<double>& space, Eigen::MatrixXd inputs,
                                       std::uint64_t seed = 0, const std::filesystem::path& dump_dir = {});

/// E[grad f (x) grad f] for the quadratic functional under a Gaussian measure.
LowRankOperator exact_operator(const QuadraticFunctional& f, const GaussianMeasure& measure);

/// The rank-one operator of the linear functional, (h1 + h2) (x) (h1 + h2).
LowRankOperator exact_operator(const LinearFunctional& f, const SpacePtr<double>& space);

/// v -> f(W^+ v + P_perp reference), where W = C^{1/2} on the retained range.
class WarpedFunctional final : public Functional {
 public:
  WarpedFunctional(FunctionalPtr f, WarpOperator warp, Field reference);
  double evaluate(const Field& v) const override;
  Field gradient(const Field& v) const override;
  std::pair<double, Field> evaluate_with_gradient(const Field& v) const override;
  std::string name() const override { return "warped_" + f_->name(); }

  /// Input in the original space corresponding to the warped coordinate v.
  Field unwarp(const Field& v) const;
  const WarpOperator& warp() const { return warp_; }

 private:
  FunctionalPtr f_;
  WarpOperator warp_;
  Field inactive_reference_;
};

/// Gradient samples of the warped functional at V_b = W U_b, U_b ~ measure.
GradientSampleSet collect_warped_gradients(const WarpedFunctional& f, const GaussianMeasure& measure, Index B,
                                           std::uint64_t seed);

struct ConvergenceOptions {
  std::vector<Index> B_grid;
  int seeds = 20;
  std::uint64_t seed = 0;
  /// Closed-form operator; when absent a proxy estimate with 16 * max(B_grid)
  /// samples is used.
  std::optional<LowRankOperator> reference;
  /// Leading eigenpairs tracked for the eigenvalue/eigenfunction errors.
  int track = 3;
  Index batch = 256;
};

struct ConvergenceReport {
  std::vector<Index> B_grid;
  Eigen::MatrixXd errors;       // seeds x grid, operator-norm error
  Eigen::VectorXd mean_error;   // per grid point
  std::optional<double> slope;  // least-squares slope of log(mean error) vs log(B)
  std::optional<double> intercept;
  bool proxy_reference = false;
  Index reference_B = 0;
  std::optional<LowRankOperator> reference;
  /// eigenvalue_errors[s](i, g) = |sigma_i - lambda_i| for seed s at B_grid[g].
  std::vector<Eigen::MatrixXd> eigenvalue_errors;
  /// eigenfunction_errors[s](i, g) = min over signs of |s w_hat_i - w_i|.
  std::vector<Eigen::MatrixXd> eigenfunction_errors;
};

ConvergenceReport convergence_diagnostic(const Functional& f, const GaussianMeasure& measure,
                                         const ConvergenceOptions& options);

/// Streams B gradients through an OperatorAccumulator (no B x B Gram matrix).
LowRankOperator streaming_estimate(const Functional& f, const GaussianMeasure& measure, Index B, std::uint64_t seed,
                                   Index batch = 256);

}  // namespace asub
