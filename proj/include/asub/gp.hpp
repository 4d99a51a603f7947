#pragma once

// Zero-mean Gaussian process regression with a squared-exponential ARD
// kernel. The signal variance is profiled out of the marginal likelihood;
// lengthscales and the noise ratio are fit by multi-start Nelder-Mead.

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "asub/hilbert.hpp"

namespace asub {

struct NelderMeadOptions {
  int max_evaluations = 200;
  double initial_step = 0.5;
  double tolerance = 1e-6;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0;
  int evaluations = 0;
};

/// Minimizes fn from x0 (no constraints; callers clamp or penalize).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

struct GpHyperparameters {
  Eigen::VectorXd lengthscales;  // in standardized input units
  double noise = 0;              // noise variance relative to the signal variance
  double signal = 1;             // profiled signal variance, standardized output units
};

struct GpFitOptions {
  bool standardize_inputs = true;
  double jitter = 1e-8;
  double min_lengthscale = 1e-2, max_lengthscale = 1e2;
  double min_noise = 1e-10, max_noise = 1.0;
  std::vector<double> start_lengthscales{0.1, 0.3, 1.0, 3.0};
  std::vector<double> start_noises{1e-6, 1e-4, 1e-2, 1e-1};
  NelderMeadOptions search{};
  /// Hyperparameters are fit on at most this many evenly strided points.
  Index max_fit_points = 150;
  unsigned threads = 0;
};

class GaussianProcess {
 public:
  /// x: N x d inputs (one point per row); y: N outputs.
  static GaussianProcess fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpFitOptions& options = {});

  /// Posterior mean and latent standard deviation at one point, original units.
  std::pair<double, double> predict(const Eigen::VectorXd& point) const;
  Eigen::VectorXd mean(const Eigen::MatrixXd& points) const;

  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  bool constant() const { return constant_; }

 private:
  Eigen::VectorXd scale(const Eigen::VectorXd& point) const;

  Eigen::MatrixXd x_;  // scaled inputs
  Eigen::VectorXd x_shift_, x_scale_;
  double y_shift_ = 0, y_scale_ = 1;
  GpHyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0;
  double jitter_ = 1e-8;
  bool constant_ = false;
};

/// Profiled log marginal likelihood of standardized data under (lengthscales, noise).
double gp_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& lengthscales,
                         double noise, double jitter, double* signal = nullptr);

}  // namespace asub
