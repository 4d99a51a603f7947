#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "asub/hilbert.hpp"
#include "asub/operators.hpp"
#include "support/oracles.hpp"

using namespace asub;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_smooth(const SpacePtr<double>& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  const double a = n(rng), b = n(rng), c = n(rng), d = n(rng);
  return Field::sample(s, [&](double x, double y) {
    return a * std::sin(kPi * x) + b * std::cos(2 * kPi * y) + c * x * y + d * std::exp(x - y);
  });
}

Field random_nodal(const SpacePtr<double>& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::VectorXd v(s->size());
  for (Index k = 0; k < v.size(); ++k) v[k] = n(rng);
  return Field(s, v);
}

}  // namespace

TEST_CASE("trapezoid weights sum to the domain area") {
  auto s = FunctionSpace::unit_square(65, 65);
  CHECK(s->weights().size() == 65 * 65);
  CHECK(std::abs(s->weights().sum() - 1.0) < 1e-12);
  CHECK(s->weights()[0] == doctest::Approx(s->hx() * s->hy() / 4));
  CHECK(s->weights()[1] == doctest::Approx(s->hx() * s->hy() / 2));
  CHECK(s->weights()[s->node(1, 1)] == doctest::Approx(s->hx() * s->hy()));

  auto rect = FunctionSpace::trapezoid(11, 21, 0.2, 0.05, {1.0, -1.0});
  CHECK(std::abs(rect->weights().sum() - 2.0) < 1e-12);
}

TEST_CASE("function space rejects invalid geometry") {
  CHECK_THROWS_AS(FunctionSpace(0, 3, 1, 1, {0, 0}, Eigen::VectorXd::Ones(0)), InvalidArgument);
  CHECK_THROWS_AS(FunctionSpace(2, 2, 1, 1, {0, 0}, Eigen::VectorXd::Ones(3)), InvalidArgument);
  CHECK_THROWS_AS(FunctionSpace(2, 2, 1, 1, {0, 0}, Eigen::VectorXd::Zero(4)), InvalidArgument);
  Eigen::VectorXd neg = Eigen::VectorXd::Ones(4);
  neg[2] = -1;
  CHECK_THROWS_AS(FunctionSpace(2, 2, 1, 1, {0, 0}, neg), InvalidArgument);
}

TEST_CASE("layout is row-major with y outer") {
  auto s = FunctionSpace::unit_square(5, 3);
  Field f = Field::sample(s, [](double x, double y) { return 10 * y + x; });
  CHECK(f.values()[1] == doctest::Approx(0.25));
  CHECK(f.values()[5] == doctest::Approx(5.0));
}

TEST_CASE("inner_product examples") {
  auto s = FunctionSpace::unit_square(65, 65);
  std::mt19937_64 rng(1);
  const Field zero(s);
  CHECK(inner_product(zero, random_nodal(s, rng)) == 0.0);

  const Field one(s, Eigen::VectorXd::Ones(s->size()));
  CHECK(std::abs(inner_product(one, one) - 1.0) < 1e-12);

  const Field sn = Field::sample(s, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
  CHECK(std::abs(inner_product(sn, sn) - 0.25) < 1e-3);
}

TEST_CASE("inner_product rejects fields on different spaces") {
  auto a = FunctionSpace::unit_square(9, 9);
  auto b = FunctionSpace::unit_square(17, 17);
  CHECK_THROWS_AS(inner_product(Field(a), Field(b)), SpaceMismatchError);
  // Structurally identical spaces are compatible.
  auto a2 = FunctionSpace::unit_square(9, 9);
  CHECK(inner_product(Field(a), Field(a2)) == 0.0);
}

TEST_CASE("norm examples") {
  auto s = FunctionSpace::unit_square(33, 33);
  CHECK(norm(Field(s)) == 0.0);
  CHECK(std::abs(norm(Field(s, Eigen::VectorXd::Ones(s->size()))) - 1.0) < 1e-12);
  std::mt19937_64 rng(2);
  Field w = random_nodal(s, rng);
  w *= 1.0 / norm(w);
  CHECK(std::abs(norm(2.0 * w) - 2.0) < 1e-12);
}

TEST_CASE("bilinearity and symmetry on random inputs") {
  auto s = FunctionSpace::unit_square(33, 33);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Field u = random_nodal(s, rng), v = random_nodal(s, rng), z = random_nodal(s, rng);
    const double a = n(rng), b = n(rng);
    const double lhs = inner_product(a * u + b * v, z);
    const double rhs = a * inner_product(u, z) + b * inner_product(v, z);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(a * inner_product(u, z)) + std::abs(b * inner_product(v, z))));
    CHECK(inner_product(u, v) == doctest::Approx(inner_product(v, u)).epsilon(1e-14));
  }
}

TEST_CASE("riesz_map examples") {
  auto s = FunctionSpace::unit_square(17, 17);
  CHECK(riesz_map(s, Eigen::VectorXd::Zero(s->size())).values().isZero());

  auto uniform = std::make_shared<const FunctionSpace>(4, 4, 1.0, 1.0, std::array<double, 2>{0, 0},
                                                       Eigen::VectorXd::Constant(16, 2.5));
  Eigen::VectorXd d = Eigen::VectorXd::LinSpaced(16, -3, 4);
  CHECK(riesz_map(uniform, d).values().isApprox(d / 2.5));
}

TEST_CASE("riesz_map of a linear functional's derivative recovers its representer") {
  auto s = FunctionSpace::unit_square(33, 33);
  std::mt19937_64 rng(4);
  const Field h1 = random_smooth(s, rng);
  auto f = [&](const Field& u) { return inner_product(u, h1); };
  // Euclidean derivative of sum_k w_k u_k h1_k with respect to u_k.
  const Eigen::VectorXd dual = s->weights().cwiseProduct(h1.values());
  const Field g = riesz_map(s, dual);
  CHECK((g.values() - h1.values()).cwiseAbs().maxCoeff() < 1e-12);

  const Field u = random_smooth(s, rng);
  for (int t = 0; t < 10; ++t) {
    const Field h = random_nodal(s, rng);
    const double eps = 1e-5;
    const double fd = (f(u + eps * h) - f(u - eps * h)) / (2 * eps);
    CHECK(std::abs(inner_product(h, g) - fd) <= 1e-8 * (1 + std::abs(fd)));
  }
}

TEST_CASE("riesz_map refuses zero weights carrying derivative mass") {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  w[1] = 0;
  auto s = std::make_shared<const FunctionSpace>(2, 2, 1.0, 1.0, std::array<double, 2>{0, 0}, w);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(4);
  CHECK_THROWS_AS(riesz_map(s, d), SingularRieszError);
  d[1] = 0;
  CHECK(riesz_map(s, d).values()[1] == 0.0);
}

TEST_CASE("orthonormalize examples") {
  auto s = FunctionSpace::unit_square(33, 33);
  std::mt19937_64 rng(5);

  SUBCASE("already orthonormal pair is unchanged up to sign") {
    const Field a = Field::sample(s, [](double x, double y) { return 2 * std::sin(kPi * x) * std::sin(kPi * y); });
    const Field b = Field::sample(s, [](double x, double y) { return 2 * std::sin(2 * kPi * x) * std::sin(kPi * y); });
    Eigen::MatrixXd cols(s->size(), 2);
    cols << a.values(), b.values();
    const Subspace q = orthonormalize(s, cols);
    CHECK(q.dim() == 2);
    CHECK((gram(q) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::min((q.basis().col(0) - a.values()).norm(), (q.basis().col(0) + a.values()).norm()) < 1e-10);
  }

  SUBCASE("dependent input collapses to one unit vector") {
    const Field h = random_smooth(s, rng);
    const Subspace q = orthonormalize(std::vector<Field>{h, 2.0 * h});
    CHECK(q.dim() == 1);
    CHECK(q.dropped() == 1);
    CHECK((q.basis().col(0) - h.values() / norm(h)).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("random fields give an identity Gram matrix") {
    std::vector<Field> fs;
    for (int i = 0; i < 5; ++i) fs.push_back(random_nodal(s, rng));
    const Subspace q = orthonormalize(fs);
    CHECK(q.dim() == 5);
    CHECK((gram(q) - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
    // Span preserved: every input is reproduced by its projection.
    for (const auto& f : fs) CHECK(norm(f - project(f, q)) < 1e-10 * norm(f));
  }

  SUBCASE("all-zero input is an error") {
    CHECK_THROWS_AS(orthonormalize(std::vector<Field>{Field(s), Field(s)}), EmptySubspaceError);
    CHECK_THROWS_AS(orthonormalize(std::vector<Field>{}), EmptySubspaceError);
  }
}

TEST_CASE("project examples and projector algebra") {
  auto s = FunctionSpace::unit_square(33, 33);
  std::mt19937_64 rng(6);
  std::vector<Field> fs;
  for (int i = 0; i < 4; ++i) fs.push_back(random_smooth(s, rng));
  const Subspace a = orthonormalize(fs);

  const Field in_span = 0.3 * a[0] - 1.7 * a[2];
  CHECK(norm(project(in_span, a) - in_span) < 1e-10);

  const Field u = random_nodal(s, rng);
  const Field perp = project_orthogonal(u, a);
  CHECK(norm(project(perp, a)) < 1e-10);

  for (int t = 0; t < 10; ++t) {
    const Field v = random_nodal(s, rng);
    const Field pv = project(v, a);
    const double lhs = inner_product(v, v);
    const double rhs = inner_product(pv, pv) + inner_product(v - pv, v - pv);
    CHECK(std::abs(lhs - rhs) < 1e-9 * lhs);
    CHECK(norm(project(pv, a) - pv) < 1e-10 * (1 + norm(pv)));
    CHECK(norm(pv) <= norm(v) + 1e-10);
    for (Index i = 0; i < a.dim(); ++i) CHECK(std::abs(inner_product(v - pv, a[i])) < 1e-10 * norm(v));
  }

  const Subspace raw(s, a.basis() * 2.0, false);
  CHECK_THROWS_AS(project(u, raw), NotOrthonormalError);
}

TEST_CASE("mesh consistency: trapezoid error shrinks at second order") {
  const double exact = std::pow(std::exp(1.0) - 1.0, 2);  // int exp(x + y) over the unit square
  auto err = [&](Index n) {
    auto s = FunctionSpace::unit_square(n, n);
    const Field a = Field::sample(s, [](double x, double) { return std::exp(x); });
    const Field b = Field::sample(s, [](double, double y) { return std::exp(y); });
    return std::abs(inner_product(a, b) - exact);
  };
  const double ratio = err(33) / err(65);
  CHECK(ratio > 4 * 0.7);
  CHECK(ratio < 4 * 1.3);
}

TEST_CASE("library quadrature agrees with an independent trapezoid sum") {
  auto s = FunctionSpace::unit_square(21, 21);
  auto fn = [](double x, double y) { return std::cos(3 * x) * (1 + y * y); };
  const Field f = Field::sample(s, fn);
  const Field one(s, Eigen::VectorXd::Ones(s->size()));
  CHECK(inner_product(f, one) == doctest::Approx(oracle::trapezoid_integral(21, 21, fn)).epsilon(1e-13));
}

TEST_CASE("principal angles") {
  auto s = FunctionSpace::unit_square(17, 17);
  std::mt19937_64 rng(7);
  std::vector<Field> fs;
  for (int i = 0; i < 3; ++i) fs.push_back(random_nodal(s, rng));
  const Subspace a = orthonormalize(fs);
  // Same span, different basis.
  const Subspace b = orthonormalize(std::vector<Field>{fs[2] + fs[0], fs[1] - fs[2], fs[0]});
  CHECK(principal_angles(a, b).maxCoeff() < 1e-7);
  const Subspace c = orthonormalize(std::vector<Field>{fs[0], fs[1], random_nodal(s, rng)});
  const Eigen::VectorXd ang = principal_angles(a, c);
  CHECK(ang[0] < 1e-7);
  CHECK(ang[2] > 0.1);
}
