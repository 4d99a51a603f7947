#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "asub/functionals.hpp"
#include "asub/randfield.hpp"
#include "support/problems.hpp"

using namespace asub;

namespace {

std::vector<Field> directions(const GaussianMeasure& m, std::uint64_t seed, Index n) {
  return m.sample(n, seed);
}

}  // namespace

TEST_CASE("linear functional") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const Field h1 = m.kl_functions()[0] + 0.5 * m.kl_functions()[3];
  const Field h2 = m.kl_functions()[1] - m.kl_functions()[7];
  const LinearFunctional f(h1, h2);

  CHECK(f.evaluate(Field(s)) == 0.0);
  for (const auto& u : m.sample(5, 1)) {
    CHECK(f.gradient(u).values() == (h1 + h2).values());
    CHECK(f.evaluate(u) == doctest::Approx(inner_product(u, h1) + inner_product(u, h2)).epsilon(1e-14));
  }

  const Field w = m.kl_functions()[2];
  CHECK(LinearFunctional(w, w).evaluate(w) == doctest::Approx(2.0).epsilon(1e-12));

  auto other = FunctionSpace::unit_square(17, 17);
  CHECK_THROWS_AS(LinearFunctional(h1, Field(other)), SpaceMismatchError);
}

TEST_CASE("quadratic functional") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const Subspace phi = m.kl_functions().leading(3);
  const QuadraticFunctional f(phi, Eigen::Vector3d(2.0, -1.0, 0.5));

  SUBCASE("orthogonal inputs vanish") {
    const Field u = m.kl_functions()[5] - 3.0 * m.kl_functions()[9];
    CHECK(std::abs(f.evaluate(u)) < 1e-24);
    CHECK(norm(f.gradient(u)) < 1e-12);
  }

  SUBCASE("single pair") {
    const QuadraticFunctional g({{phi[0], 3.0}});
    CHECK(g.evaluate(2.0 * phi[0]) == doctest::Approx(0.5 * 3.0 * 4.0).epsilon(1e-12));
  }

  SUBCASE("non-orthonormal basis is rejected") {
    CHECK_THROWS_AS(QuadraticFunctional({{phi[0], 1.0}, {phi[0] + phi[1], 1.0}}), NotOrthonormalError);
    CHECK_THROWS_AS(QuadraticFunctional({{2.0 * phi[0], 1.0}}), NotOrthonormalError);
  }

  SUBCASE("central differences are exact") {
    const Field u = testing::random_field(m, 3);
    const auto report = check_gradient(f, u, directions(m, 4, 10), 1e-3);
    CHECK(report.max_error < 1e-9);
  }
}

TEST_CASE("closed-form quadratic operator agrees with a dense expectation") {
  // With phi_j = KL functions, E[g (x) g] = sum a_j^2 kl_j phi_j (x) phi_j.
  const testing::QuadraticProblem p(17);
  const LowRankOperator c = p.exact();
  REQUIRE(c.rank() == 6);
  for (Index j = 0; j < 6; ++j) CHECK(c.values()[j] == doctest::Approx(p.lambdas[j]).epsilon(1e-12));

  // Independent route: the gradient is linear in u, g = L u with
  // L = Phi diag(a) Phi^T W, and E[u u^T] = Psi diag(kl) Psi^T.
  const auto& w = p.space->weights();
  const Eigen::MatrixXd& phi = p.f->basis().basis();
  const Eigen::MatrixXd& psi = p.measure.kl_functions().basis();
  const Eigen::MatrixXd l = phi * p.f->coefficients().asDiagonal() * phi.transpose() * w.asDiagonal();
  const Eigen::MatrixXd cov = psi * p.measure.kl_values().asDiagonal() * psi.transpose();
  const Eigen::MatrixXd dense = l * cov * l.transpose();
  const Eigen::MatrixXd sym = w.cwiseSqrt().asDiagonal() * dense * w.cwiseSqrt().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = eig.eigenvalues().reverse();
  for (Index j = 0; j < 6; ++j) CHECK(ev[j] == doctest::Approx(p.lambdas[j]).epsilon(1e-9));
  CHECK(std::abs(ev[6]) < 1e-12);
}

TEST_CASE("ridge functional") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const Subspace a = testing::ridge_directions(m);

  SUBCASE("sum profile has a constant gradient") {
    const RidgeFunctional f(a, RidgeProfile::sum());
    const Field expected = a[0] + a[1] + a[2];
    for (const auto& u : m.sample(4, 8)) CHECK((f.gradient(u).values() - expected.values()).cwiseAbs().maxCoeff() < 1e-14);
  }

  const RidgeFunctional f(a, RidgeProfile::sinusoidal(0.3));

  SUBCASE("gradient lies in the ridge span") {
    for (const auto& u : m.sample(20, 9)) {
      const Field g = f.gradient(u);
      CHECK(norm(project_orthogonal(g, a)) < 1e-12 * (1 + norm(g)));
    }
  }

  SUBCASE("level sets are invariant under orthogonal perturbations") {
    const auto us = m.sample(10, 10);
    const auto zs = m.sample(10, 11);
    for (std::size_t k = 0; k < us.size(); ++k) {
      const Field z = project_orthogonal(zs[k], a);
      CHECK(f.evaluate(us[k] + 5.0 * z) == doctest::Approx(f.evaluate(us[k])).epsilon(1e-10));
    }
  }

  SUBCASE("gradient check") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto report = check_gradient(f, testing::random_field(m, 12, k), directions(m, 13 + k, 1), 1e-5);
      CHECK(report.max_error < 1e-5);
    }
  }
}

TEST_CASE("ridge profiles match their finite differences") {
  for (const auto& prof : {RidgeProfile::sum(), RidgeProfile::half_squared_norm(), RidgeProfile::sinusoidal(0.7)}) {
    const Eigen::Vector3d y(0.3, -1.1, 0.8);
    const Eigen::VectorXd g = prof.gradient(y);
    for (Index i = 0; i < 3; ++i) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[i] = 1e-6;
      const double fd = (prof.value(y + e) - prof.value(y - e)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("linear functional passes the gradient check") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const LinearFunctional f(m.kl_functions()[0], m.kl_functions()[4]);
  const auto report = check_gradient(f, testing::random_field(m, 1), directions(m, 2, 10), 1e-3);
  CHECK(report.max_error < 1e-10);
  CHECK(report.relative_errors.size() == 10);
  CHECK_THROWS_AS(check_gradient(f, Field(s), {}, 0.0), InvalidArgument);
}

TEST_CASE("poisson control") {
  auto s65 = FunctionSpace::unit_square(65, 65);
  const PoissonControl f(PoissonControlProblem::with_defaults(s65));

  SUBCASE("zero control costs half the desired state norm") {
    CHECK(f.evaluate(Field(s65)) == doctest::Approx(0.125).epsilon(1e-3 / 0.125));
    CHECK(norm(f.state(Field(s65))) == 0.0);
  }

  SUBCASE("adjoint gradient matches finite differences") {
    const auto m = separable_sine_measure(s65, 8, 2.0, 1.0);
    const auto report = check_gradient(f, testing::random_field(m, 21), directions(m, 22, 10), 1e-5);
    CHECK(report.max_error < 1e-5);
  }
}

TEST_CASE("poisson control on a coarse grid") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const PoissonControl f(PoissonControlProblem::with_defaults(s));

  SUBCASE("state solves the discrete Poisson problem") {
    const Field u = testing::random_field(m, 5);
    const Field v = f.state(u);
    const double h2 = s->hx() * s->hx();
    double res = 0, rhs = 0;
    for (Index j = 1; j < 32; ++j)
      for (Index i = 1; i < 32; ++i) {
        const Index k = s->node(i, j);
        const auto& x = v.values();
        const double lap = (4 * x[k] - x[k - 1] - x[k + 1] - x[k - 33] - x[k + 33]) / h2;
        res += std::pow(lap - u.values()[k], 2);
        rhs += std::pow(u.values()[k], 2);
      }
    CHECK(std::sqrt(res / rhs) <= 10 * f.problem().solver_tol);
    for (Index i = 0; i < 33; ++i) {
      CHECK(v.values()[s->node(i, 0)] == 0.0);
      CHECK(v.values()[s->node(0, i)] == 0.0);
    }
  }

  SUBCASE("state map is self-adjoint") {
    for (std::uint64_t k = 0; k < 5; ++k) {
      const Field a = testing::random_field(m, 30, k), b = testing::random_field(m, 31, k);
      const double ab = inner_product(f.state(a), b), ba = inner_product(a, f.state(b));
      CHECK(std::abs(ab - ba) < 1e-8 * std::max(1.0, std::abs(ab)));
    }
  }

  SUBCASE("strong regularization dominates the gradient") {
    auto prob = PoissonControlProblem::with_defaults(s);
    prob.alpha = 1e6;
    const PoissonControl g(prob);
    const Field u = testing::random_field(m, 6);
    const Field grad = g.gradient(u);
    CHECK(norm(grad - 1e6 * u) < 1.0);
  }

  SUBCASE("gradient passes the check at ten samples") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto report = check_gradient(f, testing::random_field(m, 40, k), directions(m, 41 + k, 1), 1e-5);
      CHECK(report.max_error < 1e-5);
    }
  }

  SUBCASE("solver failure is reported") {
    auto prob = PoissonControlProblem::with_defaults(s);
    prob.solver_max_iter = 3;
    const PoissonControl g(prob);
    CHECK_THROWS_AS(g.evaluate(testing::random_field(m, 7)), SolverError);
  }

  SUBCASE("grid and parameter validation") {
    CHECK_THROWS_AS(PoissonControl(PoissonControlProblem::with_defaults(FunctionSpace::unit_square(9, 9))),
                    InvalidArgument);
    auto prob = PoissonControlProblem::with_defaults(s);
    prob.alpha = 0;
    CHECK_THROWS_AS(PoissonControl{prob}, InvalidArgument);
  }
}
