#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "asub/hilbert.hpp"

namespace asub {

/// Real-valued functional on the discretized space. gradient() returns the
/// Riesz representer, i.e. Df(u)[h] = <h, gradient(u)>.
///
/// Implementations are immutable and reentrant.
class Functional {
 public:
  virtual ~Functional() = default;
  virtual double evaluate(const Field& u) const = 0;
  virtual Field gradient(const Field& u) const = 0;
  virtual std::pair<double, Field> evaluate_with_gradient(const Field& u) const { return {evaluate(u), gradient(u)}; }
  virtual std::string name() const = 0;
};

using FunctionalPtr = std::shared_ptr<const Functional>;

/// f(u) = <u, h1> + <u, h2>.
class LinearFunctional final : public Functional {
 public:
  LinearFunctional(Field h1, Field h2);
  double evaluate(const Field& u) const override;
  Field gradient(const Field& u) const override;
  std::string name() const override { return "linear"; }

 private:
  Field h1_, h2_, sum_;
};

/// f(u) = 1/2 sum_j a_j <u, phi_j>^2 over an orthonormal family phi_j.
class QuadraticFunctional final : public Functional {
 public:
  QuadraticFunctional(Subspace basis, Eigen::VectorXd coefficients);
  explicit QuadraticFunctional(const std::vector<std::pair<Field, double>>& terms);
  double evaluate(const Field& u) const override;
  Field gradient(const Field& u) const override;
  std::pair<double, Field> evaluate_with_gradient(const Field& u) const override;
  std::string name() const override { return "quadratic"; }

  const Subspace& basis() const { return basis_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }

 private:
  Subspace basis_;
  Eigen::VectorXd coefficients_;
};

/// Smooth map R^n -> R together with its gradient.
struct RidgeProfile {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::string name;

  /// sum_i y_i
  static RidgeProfile sum();
  /// 1/2 |y|^2
  static RidgeProfile half_squared_norm();
  /// sum_i sin(y_i / scale) + y_0 y_1 / scale^2
  static RidgeProfile sinusoidal(double scale);
};

/// f(u) = profile(<u, w_1>, ..., <u, w_n>) for an orthonormal family w_i.
class RidgeFunctional final : public Functional {
 public:
  RidgeFunctional(Subspace directions, RidgeProfile profile);
  double evaluate(const Field& u) const override;
  Field gradient(const Field& u) const override;
  std::pair<double, Field> evaluate_with_gradient(const Field& u) const override;
  std::string name() const override { return "ridge"; }

  const Subspace& directions() const { return directions_; }

 private:
  Subspace directions_;
  RidgeProfile profile_;
};

struct PoissonControlProblem {
  SpacePtr<double> space;
  Field desired_state;
  double alpha = 1e-4;
  double solver_tol = 1e-10;
  int solver_max_iter = 10000;

  /// Unit-square problem with v_d(x, y) = sin(4 pi x) sin(pi y).
  static PoissonControlProblem with_defaults(SpacePtr<double> space);
};

/// Distributed control of -Lap v = m on the unit square with v = 0 on the
/// boundary:
///   J(m) = 1/2 |v - v_d|^2 + alpha/2 |m|^2,
/// with the 5-point stencil on interior nodes. The gradient p + alpha m uses
/// the adjoint p solving -Lap p = v - v_d, p = 0 on the boundary.
class PoissonControl final : public Functional {
 public:
  explicit PoissonControl(PoissonControlProblem problem);
  double evaluate(const Field& m) const override;
  Field gradient(const Field& m) const override;
  std::pair<double, Field> evaluate_with_gradient(const Field& m) const override;
  std::string name() const override { return "poisson_control"; }

  /// Discrete solution operator m -> v (zero on the boundary).
  Field state(const Field& m) const;
  const PoissonControlProblem& problem() const { return problem_; }

  /// Number of CG iterations taken by the last solve on this thread.
  static int last_iterations();

 private:
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  void apply_laplacian(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  PoissonControlProblem problem_;
};

struct GradientCheckReport {
  std::vector<double> relative_errors;
  std::vector<double> finite_differences;
  std::vector<double> directional_derivatives;
  double max_error = 0;
};

/// Central finite differences of f along each direction against <h, grad f(u)>.
GradientCheckReport check_gradient(const Functional& f, const Field& u, const std::vector<Field>& directions,
                                   double step);

}  // namespace asub
