#include "asub/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/random/sobol.hpp>

#include "asub/estimator.hpp"
#include "asub/parallel.hpp"

namespace asub {

SpanObjective::SpanObjective(FunctionalPtr f, Subspace basis, double ell)
    : f_(std::move(f)), basis_(std::move(basis)), ell_(ell) {
  if (!f_) throw InvalidArgument("span objective needs a functional");
  if (basis_.dim() < 1) throw EmptySubspaceError();
  if (!(ell_ > 0) || !std::isfinite(ell_)) throw InvalidArgument("ell must be positive");
}

Field SpanObjective::to_field(const Eigen::VectorXd& c) const {
  if (c.size() != dim()) throw InvalidArgument("cube point has the wrong dimension");
  return Field(basis_.space(), basis_.basis() * (ell_ * c));
}

SpanSetup build_span_objective(FunctionalPtr f, const Subspace& basis, const Eigen::MatrixXd& init_functions) {
  if (basis.dim() < 1) throw EmptySubspaceError();
  if (init_functions.rows() != basis.space()->size()) throw InvalidArgument("initial functions must have nx*ny rows");
  if (init_functions.cols() < 1) throw InvalidArgument("at least one initial function is required");
  const auto& w = basis.space()->weights();
  const Eigen::MatrixXd qq = weighted_gram(w, basis.basis(), basis.basis());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qq, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0) || eig.eigenvalues().minCoeff() <= 1e-12 * top)
    throw NotOrthonormalError("span basis is linearly dependent; orthonormalize it first");
  const Eigen::MatrixXd coeffs = qq.ldlt().solve(weighted_gram(w, basis.basis(), init_functions));
  const double m = coeffs.cwiseAbs().maxCoeff();
  if (!(m > 0)) throw InvalidArgument("initial functions have no component in the span");
  const double ell = 1.5 * m;
  return {SpanObjective(std::move(f), basis, ell), coeffs, coeffs / ell};
}

double expected_improvement(double mean, double sd, double best) {
  const double gap = best - mean;
  if (!(sd > 0)) return std::max(gap, 0.0);
  const double z = gap / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
  return std::max(0.0, gap * cdf + sd * pdf);
}

namespace {

Eigen::VectorXd clamp_cube(Eigen::VectorXd c) { return c.cwiseMax(-1.0).cwiseMin(1.0); }

Eigen::VectorXd maximize_ei(const GaussianProcess& gp, double best, Index dim, std::uint64_t seed,
                            const BOOptions& opt) {
  boost::random::sobol qrng(static_cast<unsigned>(dim));
  Engine engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd shift(dim);
  for (Index d = 0; d < dim; ++d) shift[d] = unif(engine);

  auto ei = [&](const Eigen::VectorXd& c) {
    const auto [mu, sd] = gp.predict(c);
    return expected_improvement(mu, sd, best);
  };

  std::vector<Eigen::VectorXd> cand(static_cast<std::size_t>(opt.candidates), Eigen::VectorXd(dim));
  std::vector<double> score(cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k) {
    for (Index d = 0; d < dim; ++d) {
      const double s = std::ldexp(static_cast<double>(qrng()), -64) + shift[d];
      cand[k][d] = 2.0 * (s - std::floor(s)) - 1.0;
    }
    score[k] = ei(cand[k]);
  }
  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  Eigen::VectorXd best_c = cand[order[0]];
  double best_ei = score[order[0]];
  const auto starts = std::min<std::size_t>(static_cast<std::size_t>(opt.polish_starts), order.size());
  for (std::size_t s = 0; s < starts; ++s) {
    Eigen::VectorXd c = cand[order[s]];
    double v = score[order[s]];
    double h = 0.25;
    for (int step = 0; step < opt.polish_steps; ++step) {
      Eigen::VectorXd trial_best = c;
      double trial_v = v;
      for (Index d = 0; d < dim; ++d)
        for (double sign : {1.0, -1.0}) {
          Eigen::VectorXd t = c;
          t[d] += sign * h;
          t = clamp_cube(t);
          const double tv = ei(t);
          if (tv > trial_v) {
            trial_v = tv;
            trial_best = t;
          }
        }
      if (trial_v > v) {
        c = trial_best;
        v = trial_v;
      } else {
        h *= 0.5;
      }
    }
    if (v > best_ei) {
      best_ei = v;
      best_c = c;
    }
  }
  return best_c;
}

}  // namespace

BOTrace run_bo(const SpanObjective& objective, const Eigen::MatrixXd& init_cube, Index n_seq, std::uint64_t seed,
               const BOOptions& options) {
  const Index dim = objective.dim();
  if (init_cube.cols() < 2) throw InvalidArgument("n_init must be at least 2");
  if (init_cube.rows() != dim) throw InvalidArgument("initial design has the wrong dimension");
  if (n_seq < 0) throw InvalidArgument("n_seq must be nonnegative");

  BOTrace trace;
  trace.seed = seed;
  trace.n_init = init_cube.cols();
  auto record = [&](const Eigen::VectorXd& c) {
    try {
      const double v = objective(c);
      if (!std::isfinite(v)) throw NumericalFailure("objective returned a non-finite value");
      trace.points.push_back(c);
      trace.values.push_back(v);
      trace.best.push_back(trace.best.empty() ? v : std::min(trace.best.back(), v));
      return true;
    } catch (const std::exception& e) {
      trace.error = "evaluation " + std::to_string(trace.values.size()) + " failed: " + e.what();
      return false;
    }
  };

  if (!record(Eigen::VectorXd::Zero(dim))) return trace;
  for (Index k = 0; k < init_cube.cols(); ++k)
    if (!record(clamp_cube(init_cube.col(k)))) return trace;

  GpFitOptions gp_opt = options.gp;
  gp_opt.standardize_inputs = false;
  for (Index step = 0; step < n_seq; ++step) {
    const auto n = static_cast<Index>(trace.values.size());
    Eigen::MatrixXd x(n, dim);
    for (Index i = 0; i < n; ++i) x.row(i) = trace.points[std::size_t(i)].transpose();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(trace.values.data(), n);
    Eigen::VectorXd next;
    try {
      const auto gp = GaussianProcess::fit(x, y, gp_opt);
      next = maximize_ei(gp, trace.best.back(), dim, derive_seed(seed, static_cast<std::uint64_t>(step)), options);
    } catch (const std::exception& e) {
      trace.error = std::string("surrogate step failed: ") + e.what();
      return trace;
    }
    if (!record(next)) return trace;
  }
  return trace;
}

Eigen::MatrixXd best_so_far_percentiles(const std::vector<BOTrace>& traces) {
  std::size_t len = 0;
  for (const auto& t : traces) len = std::max(len, t.best.size());
  Eigen::MatrixXd out(static_cast<Index>(len), 3);
  std::vector<double> col;
  for (std::size_t i = 0; i < len; ++i) {
    col.clear();
    for (const auto& t : traces)
      if (!t.best.empty()) col.push_back(t.best[std::min(i, t.best.size() - 1)]);
    std::sort(col.begin(), col.end());
    out.row(Index(i)) << percentile_sorted(col, 10), percentile_sorted(col, 50), percentile_sorted(col, 90);
  }
  return out;
}

std::vector<MethodSummary> compare_methods(FunctionalPtr f, const GaussianMeasure& measure,
                                           const ComparisonOptions& options) {
  if (options.R < 1) throw InvalidArgument("R must be at least 1");
  if (options.repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
  if (options.n_init < 2) throw InvalidArgument("n_init must be at least 2");
  const auto reps = static_cast<std::size_t>(options.repetitions);
  std::vector<BOTrace> asm_traces(reps), rand_traces(reps);
  const auto& space = measure.space();

  parallel_for(options.repetitions, [&](long k) {
    const std::uint64_t s = derive_seed(options.seed, static_cast<std::uint64_t>(k));
    const Eigen::MatrixXd m = measure.sample_matrix(options.R, derive_seed(s, Stream::kSpanBasis));
    const Subspace rand_basis = orthonormalize(space, m);
    const auto est = eigendecompose(collect_gradients_at(*f, space, m, s));
    if (est.rank() < 1) throw NumericalFailure("all gradients at the basis samples vanish");
    const Subspace asm_basis = est.eigenfunctions().leading(options.R);
    const Eigen::MatrixXd init = measure.sample_matrix(options.n_init, derive_seed(s, Stream::kInitialDesign));
    const std::uint64_t acq = derive_seed(s, Stream::kAcquisition);

    const auto a = build_span_objective(f, asm_basis, init);
    BOTrace ta = run_bo(a.objective, a.init_cube, options.n_seq, acq, options.bo);
    ta.method = "ASM";
    ta.seed = s;
    ta.gradient_calls = options.R;
    asm_traces[std::size_t(k)] = std::move(ta);

    const auto r = build_span_objective(f, rand_basis, init);
    BOTrace tr = run_bo(r.objective, r.init_cube, options.n_seq, acq, options.bo);
    tr.method = "Rand";
    tr.seed = s;
    rand_traces[std::size_t(k)] = std::move(tr);
  });

  std::vector<MethodSummary> out;
  out.push_back({"ASM", best_so_far_percentiles(asm_traces), std::move(asm_traces)});
  out.push_back({"Rand", best_so_far_percentiles(rand_traces), std::move(rand_traces)});
  return out;
}

}  // namespace asub
