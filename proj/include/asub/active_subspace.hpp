#pragma once

// Monte Carlo estimation of the active subspace operator
//   C_B h = (1/B) sum_b <h, g_b> g_b,   g_b = grad f(U_b),
// and its eigenanalysis through the B x B Gram matrix
//   Gamma_B[b, j] = <g_b, g_j> / B.
// With Gamma_B v_i = sigma_i v_i the eigenfunctions of C_B are
//   w_i = sum_b v_{i,b} g_b / sqrt(B sigma_i),
// which are orthonormal and satisfy C_B w_i = sigma_i w_i.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "asub/hilbert.hpp"
#include "asub/operators.hpp"
#include "asub/rng.hpp"

namespace asub {

template <typename Scalar>
struct BasicGradientSampleSet {
  SpacePtr<Scalar> space;
  MatrixX<Scalar> inputs;     // nodes x B
  MatrixX<Scalar> gradients;  // nodes x B
  VectorX<Scalar> values;     // B
  std::uint64_t seed = 0;

  Index size() const { return gradients.cols(); }
  BasicField<Scalar> input(Index b) const { return BasicField<Scalar>(space, inputs.col(b)); }
  BasicField<Scalar> gradient(Index b) const { return BasicField<Scalar>(space, gradients.col(b)); }

  void validate() const {
    const Index b = gradients.cols();
    if (b < 1) throw InvalidArgument("gradient sample set must be nonempty");
    if (inputs.cols() != b || values.size() != b) throw InvalidArgument("inputs, gradients and values must have equal length");
    if (gradients.rows() != space->size() || inputs.rows() != space->size())
      throw InvalidArgument("sample rows must equal nx*ny");
    if (!gradients.allFinite() || !inputs.allFinite() || !values.allFinite())
      throw NumericalFailure("gradient samples contain non-finite values");
  }
};

using GradientSampleSet = BasicGradientSampleSet<double>;

/// Gamma_B = G^* G with G e_b = g_b / sqrt(B).
template <typename Scalar>
MatrixX<Scalar> gram_matrix(const BasicGradientSampleSet<Scalar>& samples) {
  MatrixX<Scalar> g = weighted_gram(samples.space->weights(), samples.gradients, samples.gradients);
  g /= Scalar(samples.size());
  return Scalar(0.5) * (g + g.transpose());
}

template <typename Scalar>
class BasicSubspaceEstimate {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  BasicSubspaceEstimate(std::shared_ptr<const BasicGradientSampleSet<Scalar>> samples, std::optional<Matrix> gram,
                        Vector spectrum, Matrix coeffs, BasicSubspace<Scalar> eigenfunctions, Scalar rank_tol)
      : samples_(std::move(samples)),
        gram_(std::move(gram)),
        spectrum_(std::move(spectrum)),
        coeffs_(std::move(coeffs)),
        eigenfunctions_(std::move(eigenfunctions)),
        rank_tol_(rank_tol) {}

  const BasicGradientSampleSet<Scalar>& samples() const { return *samples_; }
  std::shared_ptr<const BasicGradientSampleSet<Scalar>> samples_ptr() const { return samples_; }
  /// Gamma_B; assembled on demand when the estimate was computed in node space.
  Matrix gram() const { return gram_ ? *gram_ : gram_matrix(*samples_); }
  /// All B eigenvalues of Gamma_B, descending, clamped at zero.
  const Vector& spectrum() const { return spectrum_; }
  /// Retained eigenvalues sigma_1 >= ... >= sigma_r.
  auto eigenvalues() const { return spectrum_.head(rank()); }
  /// B x r, columns v_i / sqrt(sigma_i).
  const Matrix& coeffs() const { return coeffs_; }
  const BasicSubspace<Scalar>& eigenfunctions() const { return eigenfunctions_; }
  Index rank() const { return eigenfunctions_.dim(); }
  Scalar rank_tol() const { return rank_tol_; }
  const SpacePtr<Scalar>& space() const { return samples_->space; }

  /// C_B h through the retained eigenpairs.
  BasicField<Scalar> apply(const BasicField<Scalar>& h) const { return as_operator().apply(h); }

  /// C_B h through the sample definition (1/B) sum_b <h, g_b> g_b.
  BasicField<Scalar> apply_direct(const BasicField<Scalar>& h) const {
    const auto& s = *samples_;
    const Vector c = s.gradients.transpose() * (s.space->weights().asDiagonal() * h.values());
    return BasicField<Scalar>(s.space, s.gradients * c / Scalar(s.size()));
  }

  BasicLowRankOperator<Scalar> as_operator() const {
    return BasicLowRankOperator<Scalar>(eigenfunctions_, Vector(eigenvalues()));
  }

 private:
  std::shared_ptr<const BasicGradientSampleSet<Scalar>> samples_;
  std::optional<Matrix> gram_;
  Vector spectrum_;
  Matrix coeffs_;
  BasicSubspace<Scalar> eigenfunctions_;
  Scalar rank_tol_;
};

using SubspaceEstimate = BasicSubspaceEstimate<double>;

/// Flips v so that its largest-magnitude entry (lowest index on ties) is positive.
template <typename Derived>
void canonical_sign(Eigen::MatrixBase<Derived>& v) {
  Index arg = 0;
  for (Index b = 1; b < v.size(); ++b)
    if (std::abs(v[b]) > std::abs(v[arg])) arg = b;
  if (v[arg] < 0) v = -v;
}

/// Eigenpairs of Gamma_B. When B exceeds the node count the same nonzero
/// spectrum is taken from the node-space matrix A A^T, A = W^{1/2} G / sqrt(B),
/// and the Gram eigenvectors are recovered as v = A^T y / sqrt(sigma).
template <typename Scalar>
BasicSubspaceEstimate<Scalar> eigendecompose(std::shared_ptr<const BasicGradientSampleSet<Scalar>> samples,
                                             Scalar rank_tol = Scalar(1e-12)) {
  if (!(rank_tol > 0 && rank_tol < 1)) throw InvalidArgument("rank_tol must lie in (0, 1)");
  samples->validate();
  const Index b = samples->size();
  const Index n = samples->space->size();
  const bool gram_route = b <= n;

  std::optional<MatrixX<Scalar>> gamma;
  MatrixX<Scalar> a;
  VectorX<Scalar> sigma = VectorX<Scalar>::Zero(b);
  MatrixX<Scalar> vecs;
  if (gram_route) {
    gamma = gram_matrix(*samples);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(*gamma);
    if (eig.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver failed on the Gram matrix");
    sigma = eig.eigenvalues().reverse();
    vecs = eig.eigenvectors().rowwise().reverse();
  } else {
    a = samples->space->weights().cwiseSqrt().asDiagonal() * samples->gradients / std::sqrt(Scalar(b));
    MatrixX<Scalar> m = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(Scalar(0.5) * (m + m.transpose()));
    if (eig.info() != Eigen::Success) throw NumericalFailure("symmetric eigensolver failed on the sample operator");
    sigma.head(n) = eig.eigenvalues().reverse();
    vecs = eig.eigenvectors().rowwise().reverse();
  }

  const Scalar top = sigma[0];
  const Scalar lowest = gram_route ? sigma[b - 1] : sigma[n - 1];
  Index r = 0;
  if (top > 0) {
    if (lowest < -Scalar(1e-10) * top) throw NumericalFailure("Gram matrix has a significantly negative eigenvalue");
    while (r < b && sigma[r] > rank_tol * top) ++r;
  }
  sigma = sigma.cwiseMax(Scalar(0));

  MatrixX<Scalar> coeffs(b, r);
  VectorX<Scalar> vi;
  for (Index i = 0; i < r; ++i) {
    vi = gram_route ? VectorX<Scalar>(vecs.col(i)) : VectorX<Scalar>(a.transpose() * vecs.col(i) / std::sqrt(sigma[i]));
    canonical_sign(vi);
    coeffs.col(i) = vi / std::sqrt(sigma[i]);
  }
  MatrixX<Scalar> w = samples->gradients * coeffs / std::sqrt(Scalar(b));
  BasicSubspace<Scalar> eigenfunctions(samples->space, std::move(w), true);
  return BasicSubspaceEstimate<Scalar>(std::move(samples), std::move(gamma), std::move(sigma), std::move(coeffs),
                                       std::move(eigenfunctions), rank_tol);
}

template <typename Scalar>
BasicSubspaceEstimate<Scalar> eigendecompose(BasicGradientSampleSet<Scalar> samples, Scalar rank_tol = Scalar(1e-12)) {
  return eigendecompose(std::make_shared<const BasicGradientSampleSet<Scalar>>(std::move(samples)), rank_tol);
}

/// (1/B) sum_b <g_b, w>^2 for a unit-norm direction w.
template <typename Scalar>
Scalar directional_second_moment(const BasicSubspaceEstimate<Scalar>& est, const BasicField<Scalar>& w) {
  if (!w.space()->same_as(*est.space())) throw SpaceMismatchError();
  const Scalar n = norm(w);
  if (std::abs(n - 1) > Scalar(1e-8)) throw InvalidArgument("direction must have unit norm");
  const auto& s = est.samples();
  const VectorX<Scalar> d = s.gradients.transpose() * (s.space->weights().asDiagonal() * w.values());
  return d.squaredNorm() / Scalar(s.size());
}

/// C_B^{1/2} on the retained range, and its pseudo-inverse.
template <typename Scalar>
class BasicWarpOperator {
 public:
  explicit BasicWarpOperator(const BasicSubspaceEstimate<Scalar>& est, Scalar pinv_tol = Scalar(-1))
      : basis_(est.eigenfunctions()), sqrt_values_(VectorX<Scalar>(est.eigenvalues()).cwiseSqrt()) {
    if (est.rank() < 1) throw InvalidArgument("warp needs at least one retained eigenpair");
    const Scalar tol = pinv_tol < 0 ? est.rank_tol() : pinv_tol;
    const Scalar top = est.eigenvalues()[0];
    inv_sqrt_values_ = VectorX<Scalar>::Zero(sqrt_values_.size());
    for (Index i = 0; i < sqrt_values_.size(); ++i) {
      if (est.eigenvalues()[i] > tol * top)
        inv_sqrt_values_[i] = 1 / sqrt_values_[i];
      else
        ++excluded_;
    }
  }

  BasicField<Scalar> apply(const BasicField<Scalar>& u) const {
    return BasicField<Scalar>(u.space(), basis_.basis() * sqrt_values_.cwiseProduct(coordinates(u, basis_)));
  }
  BasicField<Scalar> apply_pinv(const BasicField<Scalar>& v) const {
    return BasicField<Scalar>(v.space(), basis_.basis() * inv_sqrt_values_.cwiseProduct(coordinates(v, basis_)));
  }
  const BasicSubspace<Scalar>& range() const { return basis_; }
  /// Number of eigenpairs left out of the pseudo-inverse.
  Index excluded() const { return excluded_; }

 private:
  BasicSubspace<Scalar> basis_;
  VectorX<Scalar> sqrt_values_;
  VectorX<Scalar> inv_sqrt_values_;
  Index excluded_ = 0;
};

using WarpOperator = BasicWarpOperator<double>;

template <typename Scalar>
struct BasicBootstrapSpectrum {
  VectorX<Scalar> estimate;  // retained sigma_i
  VectorX<Scalar> p10, p50, p90;
  Index resamples = 0;
};

using BootstrapSpectrum = BasicBootstrapSpectrum<double>;

/// Linear-interpolation percentile of a sorted sample (q in [0, 100]).
template <typename Scalar>
Scalar percentile_sorted(const std::vector<Scalar>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("percentile of an empty sample");
  const double pos = q / 100.0 * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - double(lo);
  return sorted[lo] + Scalar(t) * (sorted[hi] - sorted[lo]);
}

/// Resamples gradient indices with replacement and recomputes the Gram
/// eigenvalues; reports 10/50/90 percentiles per retained index.
template <typename Scalar>
BasicBootstrapSpectrum<Scalar> bootstrap_spectrum(const BasicSubspaceEstimate<Scalar>& est, Index resamples,
                                                  std::uint64_t seed) {
  if (resamples < 100) throw InvalidArgument("bootstrap needs at least 100 resamples");
  const Index b = est.samples().size();
  const Index r = est.rank();
  const MatrixX<Scalar> raw = est.gram();  // already divided by B
  std::vector<std::vector<Scalar>> draws(static_cast<std::size_t>(r));
  Engine engine(derive_seed(seed, Stream::kBootstrap));
  std::uniform_int_distribution<Index> pick(0, b - 1);
  std::vector<Index> idx(static_cast<std::size_t>(b));
  MatrixX<Scalar> sub(b, b);
  for (Index k = 0; k < resamples; ++k) {
    for (auto& i : idx) i = pick(engine);
    for (Index p = 0; p < b; ++p)
      for (Index q = 0; q < b; ++q) sub(p, q) = raw(idx[std::size_t(p)], idx[std::size_t(q)]);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(sub, Eigen::EigenvaluesOnly);
    const VectorX<Scalar> s = eig.eigenvalues().reverse();
    for (Index i = 0; i < r; ++i) draws[std::size_t(i)].push_back(std::max(Scalar(0), s[i]));
  }
  BasicBootstrapSpectrum<Scalar> out;
  out.estimate = est.eigenvalues();
  out.p10.resize(r);
  out.p50.resize(r);
  out.p90.resize(r);
  out.resamples = resamples;
  for (Index i = 0; i < r; ++i) {
    auto& d = draws[std::size_t(i)];
    std::sort(d.begin(), d.end());
    out.p10[i] = percentile_sorted(d, 10);
    out.p50[i] = percentile_sorted(d, 50);
    out.p90[i] = percentile_sorted(d, 90);
  }
  return out;
}

/// Streaming accumulation of (1/B) sum_b g_b (x) g_b in a growing orthonormal
/// basis of the gradient span. Memory is O(nodes * rank) regardless of B.
template <typename Scalar>
class BasicOperatorAccumulator {
 public:
  explicit BasicOperatorAccumulator(SpacePtr<Scalar> space, Scalar drop_tol = Scalar(1e-12))
      : space_(std::move(space)), basis_(space_->size(), 0), drop_tol_(drop_tol) {}

  void add(const VectorX<Scalar>& g) {
    const auto& w = space_->weights();
    VectorX<Scalar> c = VectorX<Scalar>::Zero(basis_.cols() + 1);
    VectorX<Scalar> res = g;
    for (int pass = 0; pass < 2; ++pass) {
      const VectorX<Scalar> d = basis_.transpose() * (w.asDiagonal() * res);
      res -= basis_ * d;
      c.head(basis_.cols()) += d;
    }
    const Scalar gn = std::sqrt(weighted_dot(w, g, g));
    max_norm_ = std::max(max_norm_, gn);
    const Scalar rn = std::sqrt(weighted_dot(w, res, res));
    if (rn > drop_tol_ * max_norm_ && rn > 0) {
      const Index k = basis_.cols();
      basis_.conservativeResize(Eigen::NoChange, k + 1);
      basis_.col(k) = res / rn;
      c[k] = rn;
      moment_.conservativeResize(k + 1, k + 1);
      moment_.row(k).setZero();
      moment_.col(k).setZero();
    } else {
      c.conservativeResize(basis_.cols());
    }
    moment_ += c * c.transpose();
    ++count_;
  }

  Index count() const { return count_; }
  Index basis_size() const { return basis_.cols(); }

  /// Current estimate in eigen-form, eigenvalues descending.
  BasicLowRankOperator<Scalar> snapshot() const {
    if (count_ == 0) throw InvalidArgument("no gradients accumulated");
    BasicSubspace<Scalar> x(space_, basis_, true);
    return BasicLowRankOperator<Scalar>::from_coefficients(x, moment_ / Scalar(count_));
  }

 private:
  SpacePtr<Scalar> space_;
  MatrixX<Scalar> basis_;
  MatrixX<Scalar> moment_;
  Scalar drop_tol_;
  Scalar max_norm_ = 0;
  Index count_ = 0;
};

using OperatorAccumulator = BasicOperatorAccumulator<double>;

}  // namespace asub
