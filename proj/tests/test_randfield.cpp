#include <doctest.h>

#include <cmath>

#include "asub/randfield.hpp"
#include "support/oracles.hpp"

using namespace asub;

TEST_CASE("separable_sine_measure with one mode") {
  auto s = FunctionSpace::unit_square(17, 17);
  const auto m = separable_sine_measure(s, 1, 2.0, 1.0);
  REQUIRE(m.modes() == 1);
  CHECK(m.kl_values()[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.mode_indices()[0] == std::pair<int, int>{1, 1});
}

TEST_CASE("separable_sine_measure ordering and trace") {
  auto s = FunctionSpace::unit_square(33, 33);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.5);
  REQUIRE(m.modes() == 64);
  for (Index k = 1; k < m.modes(); ++k) CHECK(m.kl_values()[k] <= m.kl_values()[k - 1]);
  // (1,2) and (2,1) tie; lexicographic order keeps (1,2) first.
  CHECK(m.mode_indices()[1] == std::pair<int, int>{1, 2});
  CHECK(m.mode_indices()[2] == std::pair<int, int>{2, 1});

  double expected = 0;
  for (int i = 1; i <= 8; ++i)
    for (int j = 1; j <= 8; ++j) expected += 1.5 * std::pow(double(i * i + j * j), -2.0);
  CHECK(m.trace() == doctest::Approx(expected).epsilon(1e-14));

  const Eigen::MatrixXd g = gram(m.kl_functions());
  CHECK((g - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(m.mean().values().isZero());
}

TEST_CASE("separable_sine_measure rejects bad parameters") {
  auto s = FunctionSpace::unit_square(17, 17);
  CHECK_THROWS_AS(separable_sine_measure(s, 4, 1.0, 1.0), NonTraceClassError);
  CHECK_THROWS_AS(separable_sine_measure(s, 4, 0.5, 1.0), NonTraceClassError);
  CHECK_THROWS_AS(separable_sine_measure(s, 4, 2.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(separable_sine_measure(s, 16, 2.0, 1.0), InvalidArgument);
}

TEST_CASE("measure constructor validates KL data") {
  auto s = FunctionSpace::unit_square(9, 9);
  const auto ok = separable_sine_measure(s, 2, 2.0, 1.0);
  Eigen::VectorXd increasing = ok.kl_values().reverse();
  CHECK_THROWS_AS(GaussianMeasure(ok.mean(), increasing, ok.kl_functions()), InvalidArgument);
  Eigen::VectorXd zero = ok.kl_values();
  zero[3] = 0;
  CHECK_THROWS_AS(GaussianMeasure(ok.mean(), zero, ok.kl_functions()), InvalidArgument);
  const Subspace scaled(s, 2.0 * ok.kl_functions().basis(), true);
  CHECK_THROWS_AS(GaussianMeasure(ok.mean(), ok.kl_values(), scaled), NotOrthonormalError);
}

TEST_CASE("mean-only measure returns the mean") {
  auto s = FunctionSpace::unit_square(9, 9);
  const Field mu = Field::sample(s, [](double x, double y) { return x - 2 * y; });
  const auto m = GaussianMeasure::point_mass(mu);
  for (const auto& u : m.sample(5, 11)) CHECK(u.values() == mu.values());
}

TEST_CASE("sampling is reproducible and index-addressable") {
  auto s = FunctionSpace::unit_square(17, 17);
  const auto m = separable_sine_measure(s, 4, 2.0, 1.0);
  const Eigen::MatrixXd a = m.sample_matrix(40, 99);
  const Eigen::MatrixXd b = m.sample_matrix(40, 99);
  CHECK(a == b);
  const Eigen::MatrixXd tail = m.sample_matrix(10, 99, 30);
  CHECK(tail == a.rightCols(10));
  CHECK(m.sample_matrix(40, 100) != a);
}

TEST_CASE("sampling does not depend on worker count") {
  auto s = FunctionSpace::unit_square(17, 17);
  const auto m = separable_sine_measure(s, 4, 2.0, 1.0);
  const Eigen::MatrixXd ref = m.sample_matrix(64, 5);
  Eigen::MatrixXd serial(s->size(), 64);
  parallel_for(64, [&](long b) { serial.col(b) = m.realize(m.standard_coefficients(5, std::uint64_t(b))); }, 1);
  Eigen::MatrixXd wide(s->size(), 64);
  parallel_for(64, [&](long b) { wide.col(b) = m.realize(m.standard_coefficients(5, std::uint64_t(b))); }, 7);
  CHECK(serial == ref);
  CHECK(wide == ref);
}

TEST_CASE("sample moments match the KL description") {
  auto s = FunctionSpace::unit_square(17, 17);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const Index n = 20000;
  const Eigen::MatrixXd u = m.sample_matrix(n, 2024);
  const auto& w = s->weights();

  const Eigen::VectorXd mean = u.rowwise().mean();
  CHECK(std::sqrt(weighted_dot(w, mean, mean)) <= 3 * std::sqrt(m.trace() / double(n)));

  const Eigen::VectorXd c0 = weighted_gram(w, u, m.kl_functions().basis().col(0));
  const double var0 = c0.squaredNorm() / double(n);
  CHECK(std::abs(var0 / m.kl_values()[0] - 1) < 0.05);

  double sq = 0;
  for (Index b = 0; b < n; ++b) sq += weighted_dot(w, u.col(b), u.col(b));
  CHECK(std::abs(sq / double(n) / m.trace() - 1) < 0.02);

  // Kurtosis of the projection on the first 10,000 draws.
  const Eigen::ArrayXd z = c0.head(10000).array() - c0.head(10000).mean();
  const double m2 = z.square().mean(), m4 = z.square().square().mean();
  CHECK(std::abs(m4 / (m2 * m2) - 3) < 0.25);
}

TEST_CASE("empirical covariance recovers the leading KL value") {
  auto s = FunctionSpace::unit_square(17, 17);
  const auto m = separable_sine_measure(s, 8, 2.0, 1.0);
  const Eigen::MatrixXd u = m.sample_matrix(10000, 7);
  const auto& w = s->weights();
  const Eigen::VectorXd phi = m.kl_functions().basis().col(0);
  // <C phi, phi> with C the empirical covariance.
  const Eigen::VectorXd proj = weighted_gram(w, u, phi);
  const double mean = proj.mean();
  const double var = (proj.array() - mean).square().sum() / double(proj.size() - 1);
  CHECK(std::abs(var / m.kl_values()[0] - 1) < 0.05);
}
