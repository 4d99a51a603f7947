#include "asub/estimator.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "asub/io.hpp"
#include "asub/parallel.hpp"

namespace asub {

namespace fs = std::filesystem;

GradientSampleSet collect_gradients_at(const Functional& f, const SpacePtr<double>& space, Eigen::MatrixXd inputs,
                                       std::uint64_t seed, const fs::path& dump_dir) {
  const Index b = inputs.cols();
  if (b < 1) throw InvalidArgument("B must be at least 1");
  GradientSampleSet out;
  out.space = space;
  out.seed = seed;
  out.gradients.resize(space->size(), b);
  out.values.resize(b);
  std::vector<std::optional<std::string>> failures(static_cast<std::size_t>(b));
  parallel_for(b, [&](long k) {
    try {
      auto [value, grad] = f.evaluate_with_gradient(Field(space, inputs.col(k)));
      if (!std::isfinite(value) || !grad.values().allFinite()) throw NumericalFailure("non-finite value or gradient");
      out.values[k] = value;
      out.gradients.col(k) = grad.values();
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(k)] = e.what();
    }
  });
  for (Index k = 0; k < b; ++k) {
    const auto& fail = failures[static_cast<std::size_t>(k)];
    if (!fail) continue;
    const fs::path dir = dump_dir.empty() ? fs::temp_directory_path() : dump_dir;
    fs::path dump = dir / ("failed_sample_" + std::to_string(k) + ".json");
    try {
      fs::create_directories(dir);
      io::write_field_json(dump, Field(space, inputs.col(k)));
    } catch (const std::exception&) {
      dump.clear();
    }
    throw SampleFailure(k, dump.string(), *fail);
  }
  out.inputs = std::move(inputs);
  return out;
}

GradientSampleSet collect_gradients(const Functional& f, const GaussianMeasure& measure, Index B, std::uint64_t seed,
                                    const fs::path& dump_dir) {
  if (B < 1) throw InvalidArgument("B must be at least 1");
  return collect_gradients_at(f, measure.space(), measure.sample_matrix(B, seed), seed, dump_dir);
}

LowRankOperator exact_operator(const QuadraticFunctional& f, const GaussianMeasure& measure) {
  const auto& phi = f.basis();
  require_same_space(phi, measure.mean());
  const auto& w = measure.space()->weights();
  // Coordinates c = Phi^T W U have mean Phi^T W mu and covariance P diag(kl) P^T.
  const Eigen::MatrixXd p = weighted_gram(w, phi.basis(), measure.kl_functions().basis());
  const Eigen::VectorXd m = weighted_gram(w, phi.basis(), measure.mean().values());
  const Eigen::MatrixXd second = p * measure.kl_values().asDiagonal() * p.transpose() + m * m.transpose();
  const auto a = f.coefficients().asDiagonal();
  return LowRankOperator::from_coefficients(phi, a * second * a);
}

LowRankOperator exact_operator(const LinearFunctional& f, const SpacePtr<double>& space) {
  const Field g = f.gradient(Field(space));
  const double n = norm(g);
  if (n == 0) return LowRankOperator(Subspace(space, Eigen::MatrixXd(space->size(), 0), true), Eigen::VectorXd(0));
  return LowRankOperator(Subspace(space, g.values() / n, true), Eigen::VectorXd::Constant(1, n * n));
}

// ---------------------------------------------------------------------------

WarpedFunctional::WarpedFunctional(FunctionalPtr f, WarpOperator warp, Field reference)
    : f_(std::move(f)), warp_(std::move(warp)), inactive_reference_(project_orthogonal(reference, warp_.range())) {}

Field WarpedFunctional::unwarp(const Field& v) const { return warp_.apply_pinv(v) + inactive_reference_; }

double WarpedFunctional::evaluate(const Field& v) const { return f_->evaluate(unwarp(v)); }

Field WarpedFunctional::gradient(const Field& v) const { return evaluate_with_gradient(v).second; }

std::pair<double, Field> WarpedFunctional::evaluate_with_gradient(const Field& v) const {
  auto [value, grad] = f_->evaluate_with_gradient(unwarp(v));
  // The pseudo-inverse is self-adjoint, so the chain rule applies it once more.
  return {value, warp_.apply_pinv(grad)};
}

GradientSampleSet collect_warped_gradients(const WarpedFunctional& f, const GaussianMeasure& measure, Index B,
                                           std::uint64_t seed) {
  Eigen::MatrixXd u = measure.sample_matrix(B, seed);
  const auto& space = measure.space();
  for (Index b = 0; b < B; ++b) u.col(b) = f.warp().apply(Field(space, u.col(b))).values();
  return collect_gradients_at(f, space, std::move(u), seed);
}

// ---------------------------------------------------------------------------

namespace {

void accumulate(OperatorAccumulator& acc, const Functional& f, const GaussianMeasure& measure, std::uint64_t seed,
                Index from, Index to) {
  const Index n = to - from;
  if (n <= 0) return;
  const Eigen::MatrixXd inputs = measure.sample_matrix(n, seed, static_cast<std::uint64_t>(from));
  Eigen::MatrixXd grads(inputs.rows(), n);
  parallel_for(n, [&](long k) { grads.col(k) = f.gradient(Field(measure.space(), inputs.col(k))).values(); });
  for (Index k = 0; k < n; ++k) acc.add(grads.col(k));
}

}  // namespace

LowRankOperator streaming_estimate(const Functional& f, const GaussianMeasure& measure, Index B, std::uint64_t seed,
                                   Index batch) {
  if (B < 1) throw InvalidArgument("B must be at least 1");
  OperatorAccumulator acc(measure.space());
  for (Index b = 0; b < B; b += batch) accumulate(acc, f, measure, seed, b, std::min(B, b + batch));
  return acc.snapshot();
}

ConvergenceReport convergence_diagnostic(const Functional& f, const GaussianMeasure& measure,
                                         const ConvergenceOptions& options) {
  const auto& grid = options.B_grid;
  if (grid.size() < 4) throw InvalidArgument("B_grid needs at least 4 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw InvalidArgument("B_grid entries must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) throw InvalidArgument("B_grid must be strictly increasing");
  }
  if (options.seeds < 1) throw InvalidArgument("at least one seed is required");

  ConvergenceReport report;
  report.B_grid = grid;
  if (options.reference) {
    report.reference = options.reference;
  } else {
    report.proxy_reference = true;
    report.reference_B = 16 * grid.back();
    report.reference = streaming_estimate(f, measure, report.reference_B, derive_seed(options.seed, 0), options.batch);
  }
  const LowRankOperator& ref = *report.reference;
  const int track = static_cast<int>(std::min<Index>(options.track, ref.rank()));

  const auto ng = static_cast<Index>(grid.size());
  report.errors.resize(options.seeds, ng);
  for (int s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = derive_seed(options.seed, static_cast<std::uint64_t>(s) + 1);
    OperatorAccumulator acc(measure.space());
    Eigen::MatrixXd eig_err = Eigen::MatrixXd::Zero(track, ng);
    Eigen::MatrixXd fun_err = Eigen::MatrixXd::Zero(track, ng);
    Index done = 0;
    for (Index g = 0; g < ng; ++g) {
      const Index target = grid[static_cast<std::size_t>(g)];
      while (done < target) {
        const Index next = std::min(target, done + options.batch);
        accumulate(acc, f, measure, seed, done, next);
        done = next;
      }
      const LowRankOperator est = acc.snapshot();
      report.errors(s, g) = operator_norm_distance(est, ref);
      const auto& w = measure.space()->weights();
      for (int i = 0; i < track; ++i) {
        const double sigma = i < est.rank() ? est.values()[i] : 0.0;
        eig_err(i, g) = std::abs(sigma - ref.values()[i]);
        if (i < est.rank()) {
          const double c = weighted_dot(w, est.functions().basis().col(i), ref.functions().basis().col(i));
          fun_err(i, g) = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::abs(c)));
        } else {
          fun_err(i, g) = 1.0;
        }
      }
    }
    report.eigenvalue_errors.push_back(std::move(eig_err));
    report.eigenfunction_errors.push_back(std::move(fun_err));
  }
  report.mean_error = report.errors.colwise().mean().transpose();

  if ((report.mean_error.array() > 0).all()) {
    Eigen::MatrixXd a(ng, 2);
    Eigen::VectorXd y(ng);
    for (Index g = 0; g < ng; ++g) {
      a(g, 0) = std::log(double(grid[static_cast<std::size_t>(g)]));
      a(g, 1) = 1.0;
      y[g] = std::log(report.mean_error[g]);
    }
    const Eigen::Vector2d fit = a.colPivHouseholderQr().solve(y);
    report.slope = fit[0];
    report.intercept = fit[1];
  }
  return report;
}

}  // namespace asub
