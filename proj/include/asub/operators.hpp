#pragma once

// Finite-rank self-adjoint operators on the discretized space, kept in
// eigen-form  A = sum_i a_i x_i (x) x_i  with an orthonormal family x_i.

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "asub/hilbert.hpp"

namespace asub {

template <typename Scalar>
class BasicLowRankOperator {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  BasicLowRankOperator(BasicSubspace<Scalar> functions, Vector values)
      : functions_(std::move(functions)), values_(std::move(values)) {
    if (!functions_.orthonormal()) throw NotOrthonormalError("operator eigenfunctions must be orthonormal");
    if (values_.size() != functions_.dim()) throw InvalidArgument("one eigenvalue per eigenfunction required");
  }

  /// Eigen-form of X S X^T for an orthonormal X and a symmetric coefficient matrix S.
  static BasicLowRankOperator from_coefficients(const BasicSubspace<Scalar>& x, const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Scalar(0.5) * (s + s.transpose()));
    const Vector values = eig.eigenvalues().reverse();
    const Matrix vecs = eig.eigenvectors().rowwise().reverse();
    return BasicLowRankOperator(BasicSubspace<Scalar>(x.space(), x.basis() * vecs, true), values);
  }

  const BasicSubspace<Scalar>& functions() const { return functions_; }
  const Vector& values() const { return values_; }
  Index rank() const { return values_.size(); }
  const SpacePtr<Scalar>& space() const { return functions_.space(); }

  BasicField<Scalar> apply(const BasicField<Scalar>& h) const {
    const Vector c = coordinates(h, functions_);
    return BasicField<Scalar>(h.space(), functions_.basis() * values_.cwiseProduct(c));
  }

  Scalar trace() const { return values_.sum(); }

 private:
  BasicSubspace<Scalar> functions_;
  Vector values_;
};

using LowRankOperator = BasicLowRankOperator<double>;

/// Spectrum of D = sum_k m_k z_k (x) z_k for arbitrary (not necessarily
/// independent) z_k, from the joint Gram matrix K = Z^T W Z:
/// the nonzero eigenvalues of D are those of K^{1/2} diag(m) K^{1/2}.
template <typename Scalar>
VectorX<Scalar> joint_spectrum(const VectorX<Scalar>& weights, const MatrixX<Scalar>& z, const VectorX<Scalar>& m) {
  if (z.cols() == 0) return VectorX<Scalar>(0);
  const MatrixX<Scalar> k = weighted_gram(weights, z, z);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> ek(Scalar(0.5) * (k + k.transpose()));
  const Scalar kmax = std::max(Scalar(0), ek.eigenvalues().maxCoeff());
  const Scalar cutoff = kmax * Scalar(z.cols()) * std::numeric_limits<Scalar>::epsilon();
  Index keep = 0;
  for (Index i = 0; i < ek.eigenvalues().size(); ++i) keep += ek.eigenvalues()[i] > cutoff;
  if (keep == 0) return VectorX<Scalar>(0);
  MatrixX<Scalar> r(keep, z.cols());
  for (Index i = 0, row = 0; i < ek.eigenvalues().size(); ++i)
    if (ek.eigenvalues()[i] > cutoff) r.row(row++) = std::sqrt(ek.eigenvalues()[i]) * ek.eigenvectors().col(i).transpose();
  const MatrixX<Scalar> core = r * m.asDiagonal() * r.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> ec(Scalar(0.5) * (core + core.transpose()), Eigen::EigenvaluesOnly);
  return ec.eigenvalues().reverse();
}

/// ||A - B||_op computed on the joint span of both operators' ranges.
template <typename Scalar>
Scalar operator_norm_distance(const BasicLowRankOperator<Scalar>& a, const BasicLowRankOperator<Scalar>& b) {
  if (!a.space()->same_as(*b.space())) throw SpaceMismatchError();
  MatrixX<Scalar> z(a.space()->size(), a.rank() + b.rank());
  z << a.functions().basis(), b.functions().basis();
  VectorX<Scalar> m(a.rank() + b.rank());
  m << a.values(), -b.values();
  const VectorX<Scalar> s = joint_spectrum(a.space()->weights(), z, m);
  return s.size() == 0 ? Scalar(0) : s.cwiseAbs().maxCoeff();
}

/// Principal angles (radians, ascending) between span(a) and span(b),
/// dim(a) <= dim(b). Uses sines from the residual of a after projecting
/// onto b, which stays accurate for tiny angles.
template <typename Scalar>
VectorX<Scalar> principal_angles(const BasicSubspace<Scalar>& a, const BasicSubspace<Scalar>& b) {
  require_same_space(a, b);
  if (!a.orthonormal() || !b.orthonormal()) throw NotOrthonormalError("principal angles need orthonormal bases");
  if (a.dim() > b.dim()) return principal_angles(b, a);
  const auto& w = a.space()->weights();
  const MatrixX<Scalar> c = weighted_gram(w, b.basis(), a.basis());
  const MatrixX<Scalar> residual = a.basis() - b.basis() * c;
  const MatrixX<Scalar> wr = w.cwiseSqrt().asDiagonal() * residual;
  Eigen::JacobiSVD<MatrixX<Scalar>> sv_cos(c);
  Eigen::JacobiSVD<MatrixX<Scalar>> sv_sin(wr);
  VectorX<Scalar> cosines = sv_cos.singularValues();  // descending
  VectorX<Scalar> sines = sv_sin.singularValues().reverse();  // ascending
  VectorX<Scalar> angles(a.dim());
  for (Index i = 0; i < a.dim(); ++i) {
    const Scalar s = i < sines.size() ? sines[i] : Scalar(0);
    const Scalar co = i < cosines.size() ? cosines[i] : Scalar(0);
    angles[i] = std::atan2(s, co);
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

}  // namespace asub
