#include "asub/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "asub/parallel.hpp"

namespace asub {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
  const Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> f(static_cast<std::size_t>(n + 1));
  for (Index i = 0; i < n; ++i) simplex[std::size_t(i + 1)][i] += options.initial_step;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = fn(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  for (std::size_t i = 0; i < simplex.size(); ++i) f[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (evals < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    if (std::abs(f[worst] - f[best]) <= options.tolerance * (std::abs(f[best]) + options.tolerance)) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
    centroid /= double(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = eval(reflected);
    if (fr < f[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        f[worst] = fe;
      } else {
        simplex[worst] = reflected;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f[second]) {
      simplex[worst] = reflected;
      f[worst] = fr;
      continue;
    }
    const bool outside = fr < f[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = eval(contracted);
    if (fc < (outside ? fr : f[worst])) {
      simplex[worst] = contracted;
      f[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      f[i] = eval(simplex[i]);
    }
  }
  const auto arg = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
  return {simplex[arg], f[arg], evals};
}

namespace {

Eigen::MatrixXd correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& ell) {
  const Eigen::MatrixXd sa = a * ell.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd sb = b * ell.cwiseInverse().asDiagonal();
  Eigen::MatrixXd d = (-2.0 * sa * sb.transpose()).colwise() + sa.rowwise().squaredNorm();
  d.rowwise() += sb.rowwise().squaredNorm().transpose();
  return (-0.5 * d.cwiseMax(0.0)).array().exp().matrix();
}

}  // namespace

double gp_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lengthscales,
                         double noise, double jitter, double* signal) {
  const auto n = double(x.rows());
  Eigen::MatrixXd k = correlation(x, x, lengthscales);
  k.diagonal().array() += noise + jitter;
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  const double s2 = y.dot(alpha) / n;
  if (!(s2 > 0)) return -std::numeric_limits<double>::infinity();
  if (signal) *signal = s2;
  const double logdet = 2.0 * Eigen::VectorXd(llt.matrixLLT().diagonal()).array().log().sum();
  return -0.5 * n * std::log(s2) - 0.5 * logdet - 0.5 * n * (1.0 + std::log(2.0 * std::numbers::pi));
}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpFitOptions& options) {
  const Index n = x.rows(), d = x.cols();
  if (n < 1 || d < 1) throw InvalidArgument("GP needs at least one point and one input dimension");
  if (y.size() != n) throw InvalidArgument("GP inputs and outputs must have equal length");
  if (!x.allFinite() || !y.allFinite()) throw NumericalFailure("GP data contain non-finite values");

  GaussianProcess gp;
  gp.jitter_ = options.jitter;
  gp.x_shift_ = Eigen::VectorXd::Zero(d);
  gp.x_scale_ = Eigen::VectorXd::Ones(d);
  if (options.standardize_inputs) {
    gp.x_shift_ = x.colwise().mean().transpose();
    for (Index c = 0; c < d; ++c) {
      const double sd = std::sqrt((x.col(c).array() - gp.x_shift_[c]).square().mean());
      if (!(sd > 1e-12 * std::max(1.0, std::abs(gp.x_shift_[c]))))
        throw InvalidArgument("degenerate coordinates: input dimension " + std::to_string(c + 1) + " has zero variance");
      gp.x_scale_[c] = sd;
    }
  }
  gp.x_ = (x.rowwise() - gp.x_shift_.transpose()) * gp.x_scale_.cwiseInverse().asDiagonal();

  gp.y_shift_ = y.mean();
  const double ysd = std::sqrt((y.array() - gp.y_shift_).square().mean());
  gp.hyper_.lengthscales = Eigen::VectorXd::Ones(d);
  if (!(ysd > 1e-12 * std::max(1.0, std::abs(gp.y_shift_)))) {
    gp.constant_ = true;
    gp.hyper_.signal = 0;
    return gp;
  }
  gp.y_scale_ = ysd;
  const Eigen::VectorXd ys = (y.array() - gp.y_shift_) / ysd;

  // Hyperparameter search on an evenly strided subset.
  const Index m = std::min(n, std::max<Index>(2, options.max_fit_points));
  Eigen::MatrixXd xf(m, d);
  Eigen::VectorXd yf(m);
  for (Index i = 0; i < m; ++i) {
    const Index src = i * n / m;
    xf.row(i) = gp.x_.row(src);
    yf[i] = ys[src];
  }

  const double lo_l = std::log(options.min_lengthscale), hi_l = std::log(options.max_lengthscale);
  const double lo_n = std::log(options.min_noise), hi_n = std::log(options.max_noise);
  auto clamp = [&](Eigen::VectorXd t) {
    for (Index i = 0; i < d; ++i) t[i] = std::clamp(t[i], lo_l, hi_l);
    t[d] = std::clamp(t[d], lo_n, hi_n);
    return t;
  };
  auto objective = [&](const Eigen::VectorXd& t) {
    const Eigen::VectorXd c = clamp(t);
    const double lml = gp_log_likelihood(xf, yf, c.head(d).array().exp().matrix(), std::exp(c[d]), options.jitter);
    return -lml + 1e3 * (t - c).squaredNorm();
  };

  std::vector<Eigen::VectorXd> starts;
  for (double l : options.start_lengthscales)
    for (double eta : options.start_noises) {
      Eigen::VectorXd t(d + 1);
      t.head(d).setConstant(std::log(l));
      t[d] = std::log(eta);
      starts.push_back(clamp(t));
    }
  if (starts.empty()) throw InvalidArgument("GP fit needs at least one start");
  std::vector<NelderMeadResult> results(starts.size());
  parallel_for(
      static_cast<long>(starts.size()),
      [&](long i) { results[std::size_t(i)] = nelder_mead(objective, starts[std::size_t(i)], options.search); },
      options.threads);
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].value < results[best].value) best = i;
  const Eigen::VectorXd theta = clamp(results[best].x);

  gp.hyper_.lengthscales =
      theta.head(d).array().exp().cwiseMax(options.min_lengthscale).cwiseMin(options.max_lengthscale);
  gp.hyper_.noise = std::clamp(std::exp(theta[d]), options.min_noise, options.max_noise);

  // Posterior on all points.
  Eigen::MatrixXd k = correlation(gp.x_, gp.x_, gp.hyper_.lengthscales);
  k.diagonal().array() += gp.hyper_.noise + options.jitter;
  gp.chol_.compute(k);
  if (gp.chol_.info() != Eigen::Success) throw NumericalFailure("GP covariance is not positive definite");
  gp.alpha_ = gp.chol_.solve(ys);
  gp.lml_ = gp_log_likelihood(gp.x_, ys, gp.hyper_.lengthscales, gp.hyper_.noise, options.jitter, &gp.hyper_.signal);
  return gp;
}

Eigen::VectorXd GaussianProcess::scale(const Eigen::VectorXd& point) const {
  return (point - x_shift_).cwiseQuotient(x_scale_);
}

std::pair<double, double> GaussianProcess::predict(const Eigen::VectorXd& point) const {
  if (point.size() != x_shift_.size()) throw InvalidArgument("prediction point has the wrong dimension");
  if (constant_) return {y_shift_, 0.0};
  const Eigen::MatrixXd p = scale(point).transpose();
  const Eigen::VectorXd kstar = correlation(x_, p, hyper_.lengthscales).col(0);
  const double mu = kstar.dot(alpha_);
  const double var = hyper_.signal * std::max(0.0, 1.0 - kstar.dot(chol_.solve(kstar)));
  return {y_shift_ + y_scale_ * mu, y_scale_ * std::sqrt(var)};
}

Eigen::VectorXd GaussianProcess::mean(const Eigen::MatrixXd& points) const {
  if (points.cols() != x_shift_.size()) throw InvalidArgument("prediction points have the wrong dimension");
  if (constant_) return Eigen::VectorXd::Constant(points.rows(), y_shift_);
  const Eigen::MatrixXd p = (points.rowwise() - x_shift_.transpose()) * x_scale_.cwiseInverse().asDiagonal();
  return (correlation(p, x_, hyper_.lengthscales) * alpha_).array() * y_scale_ + y_shift_;
}

}  // namespace asub
