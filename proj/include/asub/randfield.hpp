#pragma once

// Gaussian measures on the discretized space given by a truncated
// Karhunen-Loeve expansion U = mean + sum_m sqrt(lambda_m) xi_m phi_m.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "asub/hilbert.hpp"
#include "asub/parallel.hpp"
#include "asub/rng.hpp"

namespace asub {

template <typename Scalar>
class BasicGaussianMeasure {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  BasicGaussianMeasure(BasicField<Scalar> mean, Vector kl_values, BasicSubspace<Scalar> kl_functions)
      : mean_(std::move(mean)), kl_values_(std::move(kl_values)), kl_functions_(std::move(kl_functions)) {
    require_same_space(mean_, kl_functions_);
    if (kl_values_.size() != kl_functions_.dim()) throw InvalidArgument("one KL value per KL function required");
    for (Index m = 0; m < kl_values_.size(); ++m) {
      if (!(kl_values_[m] > 0)) throw InvalidArgument("KL values must be strictly positive");
      if (m > 0 && kl_values_[m] > kl_values_[m - 1]) throw InvalidArgument("KL values must be nonincreasing");
    }
    if (kl_values_.size() > 0) {
      if (!kl_functions_.orthonormal()) throw NotOrthonormalError("KL functions must be orthonormal");
      const Matrix g = gram(kl_functions_);
      if ((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() > Scalar(1e-10))
        throw NotOrthonormalError("KL functions are not orthonormal to 1e-10");
    }
  }

  /// Degenerate measure concentrated on a single field.
  static BasicGaussianMeasure point_mass(BasicField<Scalar> mean) {
    auto space = mean.space();
    return BasicGaussianMeasure(std::move(mean), Vector(0), BasicSubspace<Scalar>(space, Matrix(space->size(), 0), true));
  }

  const SpacePtr<Scalar>& space() const { return mean_.space(); }
  const BasicField<Scalar>& mean() const { return mean_; }
  const Vector& kl_values() const { return kl_values_; }
  const BasicSubspace<Scalar>& kl_functions() const { return kl_functions_; }
  Index modes() const { return kl_values_.size(); }
  Scalar trace() const { return kl_values_.sum(); }

  /// Standard normal KL coefficients of sample `index`. Depends only on
  /// (seed, index, modes), so the same draws can be realized on any grid.
  Vector standard_coefficients(std::uint64_t seed, std::uint64_t index) const {
    Engine engine(derive_seed(derive_seed(seed, Stream::kSamples), index));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector xi(modes());
    for (Index m = 0; m < xi.size(); ++m) xi[m] = Scalar(normal(engine));
    return xi;
  }

  /// Realizes a field from standard normal KL coefficients.
  template <typename Derived>
  Vector realize(const Eigen::MatrixBase<Derived>& xi) const {
    return mean_.values() + kl_functions_.basis() * (kl_values_.array().sqrt() * xi.array()).matrix();
  }

  /// Samples first_index .. first_index + count - 1 as matrix columns.
  Matrix sample_matrix(Index count, std::uint64_t seed, std::uint64_t first_index = 0) const {
    if (count < 1) throw InvalidArgument("sample count must be at least 1");
    Matrix out(space()->size(), count);
    parallel_for(count, [&](long b) {
      out.col(b) = realize(standard_coefficients(seed, first_index + static_cast<std::uint64_t>(b)));
    });
    return out;
  }

  std::vector<BasicField<Scalar>> sample(Index count, std::uint64_t seed) const {
    const Matrix m = sample_matrix(count, seed);
    std::vector<BasicField<Scalar>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index b = 0; b < count; ++b) out.emplace_back(space(), m.col(b));
    return out;
  }

  /// Grid index pairs (i, j) of each mode for separable-sine measures; empty otherwise.
  const std::vector<std::pair<int, int>>& mode_indices() const { return mode_indices_; }
  void set_mode_indices(std::vector<std::pair<int, int>> idx) { mode_indices_ = std::move(idx); }

 private:
  BasicField<Scalar> mean_;
  Vector kl_values_;
  BasicSubspace<Scalar> kl_functions_;
  std::vector<std::pair<int, int>> mode_indices_;
};

using GaussianMeasure = BasicGaussianMeasure<double>;

/// Zero-mean measure on the unit square with KL functions proportional to
/// sin(i pi x) sin(j pi y), 1 <= i, j <= m_per_axis, and variances
/// amplitude * (i^2 + j^2)^(-decay), sorted descending (ties keep (i, j)
/// lexicographic order).
template <typename Scalar>
BasicGaussianMeasure<Scalar> separable_sine_measure(const SpacePtr<Scalar>& space, int m_per_axis, Scalar decay,
                                                    Scalar amplitude) {
  if (!(decay > 1)) throw NonTraceClassError(static_cast<double>(decay));
  if (m_per_axis < 1) throw InvalidArgument("m_per_axis must be at least 1");
  if (!(amplitude > 0)) throw InvalidArgument("amplitude must be positive");
  if (m_per_axis >= space->nx() - 1 || m_per_axis >= space->ny() - 1)
    throw InvalidArgument("grid too coarse to resolve the requested sine modes");

  struct Mode {
    int i, j;
    Scalar value;
  };
  std::vector<Mode> modes;
  for (int i = 1; i <= m_per_axis; ++i)
    for (int j = 1; j <= m_per_axis; ++j)
      modes.push_back({i, j, amplitude * std::pow(Scalar(i * i + j * j), -decay)});
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.value > b.value; });

  const auto n = static_cast<Index>(modes.size());
  MatrixX<Scalar> basis(space->size(), n);
  VectorX<Scalar> values(n);
  std::vector<std::pair<int, int>> idx;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (Index m = 0; m < n; ++m) {
    const auto [i, j, value] = modes[static_cast<std::size_t>(m)];
    auto f = BasicField<Scalar>::sample(space, [&](Scalar x, Scalar y) { return std::sin(i * pi * x) * std::sin(j * pi * y); });
    basis.col(m) = f.values() / norm(f);
    values[m] = value;
    idx.emplace_back(i, j);
  }
  BasicGaussianMeasure<Scalar> measure(BasicField<Scalar>(space), values, BasicSubspace<Scalar>(space, basis, true));
  measure.set_mode_indices(std::move(idx));
  return measure;
}

}  // namespace asub
