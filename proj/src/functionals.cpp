#include "asub/functionals.hpp"

#include <cmath>
#include <numbers>

namespace asub {

namespace {

void require_orthonormal(const Subspace& s) {
  const Eigen::MatrixXd g = gram(s);
  if (!s.orthonormal() || (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw NotOrthonormalError("basis must be orthonormal under the space inner product");
}

thread_local int g_last_iterations = 0;

}  // namespace

// ---------------------------------------------------------------------------

LinearFunctional::LinearFunctional(Field h1, Field h2) : h1_(std::move(h1)), h2_(std::move(h2)), sum_(h1_ + h2_) {}

double LinearFunctional::evaluate(const Field& u) const { return inner_product(u, h1_) + inner_product(u, h2_); }

Field LinearFunctional::gradient(const Field& u) const {
  require_same_space(u, sum_);
  return sum_;
}

// ---------------------------------------------------------------------------

QuadraticFunctional::QuadraticFunctional(Subspace basis, Eigen::VectorXd coefficients)
    : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != basis_.dim()) throw InvalidArgument("one coefficient per basis function required");
  require_orthonormal(basis_);
}

namespace {
Subspace stack_terms(const std::vector<std::pair<Field, double>>& terms) {
  if (terms.empty()) throw EmptySubspaceError();
  const auto& space = terms.front().first.space();
  Eigen::MatrixXd cols(space->size(), static_cast<Index>(terms.size()));
  for (std::size_t j = 0; j < terms.size(); ++j) {
    require_same_space(terms.front().first, terms[j].first);
    cols.col(static_cast<Index>(j)) = terms[j].first.values();
  }
  // Orthonormality is verified, not imposed.
  return Subspace(space, cols, true);
}
Eigen::VectorXd stack_coefficients(const std::vector<std::pair<Field, double>>& terms) {
  Eigen::VectorXd a(static_cast<Index>(terms.size()));
  for (std::size_t j = 0; j < terms.size(); ++j) a[static_cast<Index>(j)] = terms[j].second;
  return a;
}
}  // namespace

QuadraticFunctional::QuadraticFunctional(const std::vector<std::pair<Field, double>>& terms)
    : QuadraticFunctional(stack_terms(terms), stack_coefficients(terms)) {}

double QuadraticFunctional::evaluate(const Field& u) const {
  const Eigen::VectorXd c = coordinates(u, basis_);
  return 0.5 * (coefficients_.array() * c.array().square()).sum();
}

Field QuadraticFunctional::gradient(const Field& u) const { return evaluate_with_gradient(u).second; }

std::pair<double, Field> QuadraticFunctional::evaluate_with_gradient(const Field& u) const {
  const Eigen::VectorXd c = coordinates(u, basis_);
  const Eigen::VectorXd ac = coefficients_.cwiseProduct(c);
  return {0.5 * ac.dot(c), Field(u.space(), basis_.basis() * ac)};
}

// ---------------------------------------------------------------------------

RidgeProfile RidgeProfile::sum() {
  return {[](const Eigen::VectorXd& y) { return y.sum(); },
          [](const Eigen::VectorXd& y) { return Eigen::VectorXd::Ones(y.size()).eval(); }, "sum"};
}

RidgeProfile RidgeProfile::half_squared_norm() {
  return {[](const Eigen::VectorXd& y) { return 0.5 * y.squaredNorm(); },
          [](const Eigen::VectorXd& y) { return y; }, "half_squared_norm"};
}

RidgeProfile RidgeProfile::sinusoidal(double scale) {
  return {[scale](const Eigen::VectorXd& y) {
            double v = (y.array() / scale).sin().sum();
            if (y.size() >= 2) v += y[0] * y[1] / (scale * scale);
            return v;
          },
          [scale](const Eigen::VectorXd& y) {
            Eigen::VectorXd g = (y.array() / scale).cos() / scale;
            if (y.size() >= 2) {
              g[0] += y[1] / (scale * scale);
              g[1] += y[0] / (scale * scale);
            }
            return g;
          },
          "sinusoidal"};
}

RidgeFunctional::RidgeFunctional(Subspace directions, RidgeProfile profile)
    : directions_(std::move(directions)), profile_(std::move(profile)) {
  require_orthonormal(directions_);
}

double RidgeFunctional::evaluate(const Field& u) const { return profile_.value(coordinates(u, directions_)); }

Field RidgeFunctional::gradient(const Field& u) const { return evaluate_with_gradient(u).second; }

std::pair<double, Field> RidgeFunctional::evaluate_with_gradient(const Field& u) const {
  const Eigen::VectorXd y = coordinates(u, directions_);
  return {profile_.value(y), Field(u.space(), directions_.basis() * profile_.gradient(y))};
}

// ---------------------------------------------------------------------------

PoissonControlProblem PoissonControlProblem::with_defaults(SpacePtr<double> space) {
  constexpr double pi = std::numbers::pi;
  Field vd = Field::sample(space, [](double x, double y) { return std::sin(4 * pi * x) * std::sin(pi * y); });
  return {std::move(space), std::move(vd)};
}

PoissonControl::PoissonControl(PoissonControlProblem problem) : problem_(std::move(problem)) {
  const auto& s = *problem_.space;
  if (s.nx() < 17 || s.ny() < 17) throw InvalidArgument("poisson_control needs at least a 17x17 grid");
  if (!(problem_.alpha > 0)) throw InvalidArgument("alpha must be positive");
  if (!(problem_.solver_tol > 0)) throw InvalidArgument("solver_tol must be positive");
  if (problem_.solver_max_iter < 1) throw InvalidArgument("solver_max_iter must be positive");
  require_same_space(problem_.desired_state, Field(problem_.space));
}

int PoissonControl::last_iterations() { return g_last_iterations; }

// y = -Lap x on interior nodes; x, y are full-grid vectors whose boundary
// entries are zero.
void PoissonControl::apply_laplacian(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const auto& s = *problem_.space;
  const Index nx = s.nx(), ny = s.ny();
  const double cx = 1.0 / (s.hx() * s.hx()), cy = 1.0 / (s.hy() * s.hy());
  y.setZero(x.size());
  for (Index j = 1; j < ny - 1; ++j) {
    for (Index i = 1; i < nx - 1; ++i) {
      const Index k = j * nx + i;
      y[k] = cx * (2 * x[k] - x[k - 1] - x[k + 1]) + cy * (2 * x[k] - x[k - nx] - x[k + nx]);
    }
  }
}

Eigen::VectorXd PoissonControl::solve(const Eigen::VectorXd& rhs) const {
  const auto& s = *problem_.space;
  const Index nx = s.nx(), ny = s.ny();
  // Restrict the right-hand side to interior nodes.
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rhs.size());
  for (Index j = 1; j < ny - 1; ++j)
    for (Index i = 1; i < nx - 1; ++i) b[j * nx + i] = rhs[j * nx + i];

  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  const double bnorm = b.norm();
  g_last_iterations = 0;
  if (bnorm == 0) return x;

  Eigen::VectorXd r = b, p = b, ap(b.size());
  double rr = r.squaredNorm();
  int it = 0;
  while (std::sqrt(rr) > problem_.solver_tol * bnorm) {
    if (it >= problem_.solver_max_iter) throw SolverError(it, std::sqrt(rr) / bnorm);
    apply_laplacian(p, ap);
    const double step = rr / p.dot(ap);
    x.noalias() += step * p;
    r.noalias() -= step * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++it;
  }
  // Recurrence residuals drift; confirm against the true residual.
  apply_laplacian(x, ap);
  const double true_res = (b - ap).norm() / bnorm;
  if (true_res > 10 * problem_.solver_tol) throw SolverError(it, true_res);
  g_last_iterations = it;
  return x;
}

Field PoissonControl::state(const Field& m) const {
  require_same_space(m, problem_.desired_state);
  return Field(problem_.space, solve(m.values()));
}

double PoissonControl::evaluate(const Field& m) const {
  const Field v = state(m);
  const Field misfit = v - problem_.desired_state;
  return 0.5 * inner_product(misfit, misfit) + 0.5 * problem_.alpha * inner_product(m, m);
}

Field PoissonControl::gradient(const Field& m) const { return evaluate_with_gradient(m).second; }

std::pair<double, Field> PoissonControl::evaluate_with_gradient(const Field& m) const {
  const Field v = state(m);
  const Field misfit = v - problem_.desired_state;
  const double j = 0.5 * inner_product(misfit, misfit) + 0.5 * problem_.alpha * inner_product(m, m);
  // Interior weights are uniform, so the weighted adjoint reduces to a plain solve.
  Eigen::VectorXd g = solve(misfit.values());
  g += problem_.alpha * m.values();
  return {j, Field(problem_.space, g)};
}

// ---------------------------------------------------------------------------

GradientCheckReport check_gradient(const Functional& f, const Field& u, const std::vector<Field>& directions,
                                   double step) {
  if (!(step > 0)) throw InvalidArgument("finite-difference step must be positive");
  GradientCheckReport report;
  const Field g = f.gradient(u);
  for (const auto& h : directions) {
    const double fd = (f.evaluate(u + step * h) - f.evaluate(u - step * h)) / (2 * step);
    const double dd = inner_product(h, g);
    const double err = std::abs(fd - dd) / (std::abs(dd) + 1e-12);
    report.finite_differences.push_back(fd);
    report.directional_derivatives.push_back(dd);
    report.relative_errors.push_back(err);
    report.max_error = std::max(report.max_error, err);
  }
  return report;
}

}  // namespace asub
