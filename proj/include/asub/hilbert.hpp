#pragma once

// Discretized L2 space on a rectangle: tensor-product trapezoid quadrature,
// fields as node-value vectors, weighted inner products, Riesz map and
// orthogonal projectors onto finite spans.
//
// Node layout is row-major with y outer: node (i, j) -> j * nx + i.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "asub/errors.hpp"

namespace asub {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class BasicFunctionSpace {
 public:
  using Vector = VectorX<Scalar>;

  BasicFunctionSpace(Index nx, Index ny, Scalar hx, Scalar hy, std::array<Scalar, 2> origin, Vector weights)
      : nx_(nx), ny_(ny), hx_(hx), hy_(hy), origin_(origin), weights_(std::move(weights)) {
    if (nx < 1 || ny < 1) throw InvalidArgument("grid node counts must be positive");
    if (!(hx > 0) || !(hy > 0)) throw InvalidArgument("grid spacings must be positive");
    if (weights_.size() != nx * ny) throw InvalidArgument("weights length must equal nx*ny");
    if ((weights_.array() < 0).any() || !weights_.allFinite())
      throw InvalidArgument("quadrature weights must be finite and nonnegative");
    if (!(weights_.maxCoeff() > 0)) throw InvalidArgument("at least one quadrature weight must be positive");
  }

  /// Tensor-product trapezoid weights on [x0, x0 + (nx-1) hx] x [y0, y0 + (ny-1) hy].
  static std::shared_ptr<const BasicFunctionSpace> trapezoid(Index nx, Index ny, Scalar hx, Scalar hy,
                                                             std::array<Scalar, 2> origin = {0, 0}) {
    if (nx < 2 || ny < 2) throw InvalidArgument("trapezoid rule needs at least 2 nodes per axis");
    Vector w(nx * ny);
    for (Index j = 0; j < ny; ++j) {
      const Scalar wy = (j == 0 || j == ny - 1) ? hy / 2 : hy;
      for (Index i = 0; i < nx; ++i) {
        const Scalar wx = (i == 0 || i == nx - 1) ? hx / 2 : hx;
        w[j * nx + i] = wx * wy;
      }
    }
    return std::make_shared<const BasicFunctionSpace>(nx, ny, hx, hy, origin, std::move(w));
  }

  static std::shared_ptr<const BasicFunctionSpace> unit_square(Index nx, Index ny) {
    return trapezoid(nx, ny, Scalar(1) / Scalar(nx - 1), Scalar(1) / Scalar(ny - 1));
  }

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index size() const { return nx_ * ny_; }
  Scalar hx() const { return hx_; }
  Scalar hy() const { return hy_; }
  const std::array<Scalar, 2>& origin() const { return origin_; }
  const Vector& weights() const { return weights_; }

  Scalar x(Index i) const { return origin_[0] + Scalar(i) * hx_; }
  Scalar y(Index j) const { return origin_[1] + Scalar(j) * hy_; }
  Index node(Index i, Index j) const { return j * nx_ + i; }

  bool same_as(const BasicFunctionSpace& other) const {
    if (this == &other) return true;
    return nx_ == other.nx_ && ny_ == other.ny_ && hx_ == other.hx_ && hy_ == other.hy_ &&
           origin_ == other.origin_ && weights_ == other.weights_;
  }

 private:
  Index nx_, ny_;
  Scalar hx_, hy_;
  std::array<Scalar, 2> origin_;
  Vector weights_;
};

template <typename Scalar>
using SpacePtr = std::shared_ptr<const BasicFunctionSpace<Scalar>>;

template <typename Scalar>
class BasicField {
 public:
  using Vector = VectorX<Scalar>;

  explicit BasicField(SpacePtr<Scalar> space) : space_(std::move(space)), values_(Vector::Zero(space_->size())) {}

  template <typename Derived>
  BasicField(SpacePtr<Scalar> space, const Eigen::MatrixBase<Derived>& values)
      : space_(std::move(space)), values_(values) {
    if (values_.size() != space_->size()) throw InvalidArgument("field length must equal nx*ny");
    if (!values_.allFinite()) throw InvalidArgument("field values must be finite");
  }

  /// Samples fn(x, y) at every grid node.
  template <typename Fn>
  static BasicField sample(SpacePtr<Scalar> space, Fn&& fn) {
    Vector v(space->size());
    for (Index j = 0; j < space->ny(); ++j)
      for (Index i = 0; i < space->nx(); ++i) v[space->node(i, j)] = fn(space->x(i), space->y(j));
    return BasicField(std::move(space), v);
  }

  const SpacePtr<Scalar>& space() const { return space_; }
  const Vector& values() const { return values_; }
  Index size() const { return values_.size(); }

  BasicField& operator+=(const BasicField& o) {
    check(o);
    values_ += o.values_;
    return *this;
  }
  BasicField& operator-=(const BasicField& o) {
    check(o);
    values_ -= o.values_;
    return *this;
  }
  BasicField& operator*=(Scalar a) {
    values_ *= a;
    return *this;
  }

  friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
  friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
  friend BasicField operator*(Scalar s, BasicField a) { return a *= s; }
  friend BasicField operator*(BasicField a, Scalar s) { return a *= s; }

 private:
  void check(const BasicField& o) const {
    if (!space_->same_as(*o.space_)) throw SpaceMismatchError();
  }

  SpacePtr<Scalar> space_;
  Vector values_;
};

/// Finite span in H. Basis functions are stored as the columns of a matrix.
template <typename Scalar>
class BasicSubspace {
 public:
  using Matrix = MatrixX<Scalar>;

  BasicSubspace(SpacePtr<Scalar> space, Matrix basis, bool orthonormal)
      : space_(std::move(space)), basis_(std::move(basis)), orthonormal_(orthonormal) {
    if (basis_.rows() != space_->size()) throw InvalidArgument("basis rows must equal nx*ny");
  }

  const SpacePtr<Scalar>& space() const { return space_; }
  const Matrix& basis() const { return basis_; }
  Index dim() const { return basis_.cols(); }
  bool orthonormal() const { return orthonormal_; }
  BasicField<Scalar> operator[](Index i) const { return BasicField<Scalar>(space_, basis_.col(i)); }

  /// Leading k basis elements.
  BasicSubspace leading(Index k) const {
    return BasicSubspace(space_, basis_.leftCols(std::min(k, dim())), orthonormal_);
  }

  /// Number of elements dropped by orthonormalize() as numerically dependent.
  Index dropped() const { return dropped_; }
  void set_dropped(Index n) { dropped_ = n; }

 private:
  SpacePtr<Scalar> space_;
  Matrix basis_;
  bool orthonormal_;
  Index dropped_ = 0;
};

using FunctionSpace = BasicFunctionSpace<double>;
using Field = BasicField<double>;
using Subspace = BasicSubspace<double>;

// ---------------------------------------------------------------------------
// Free functions on raw coefficient vectors (weights given explicitly).

template <typename W, typename A, typename B>
typename A::Scalar weighted_dot(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<A>& a,
                                const Eigen::MatrixBase<B>& b) {
  return (w.array() * a.array() * b.array()).sum();
}

/// Matrix of weighted inner products X^T W Y.
template <typename W, typename X, typename Y>
MatrixX<typename X::Scalar> weighted_gram(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x,
                                          const Eigen::MatrixBase<Y>& y) {
  return x.transpose() * (w.asDiagonal() * y);
}

// ---------------------------------------------------------------------------

inline void require_same_space(const auto& a, const auto& b) {
  if (!a.space()->same_as(*b.space())) throw SpaceMismatchError();
}

template <typename Scalar>
Scalar inner_product(const BasicField<Scalar>& u, const BasicField<Scalar>& v) {
  require_same_space(u, v);
  return weighted_dot(u.space()->weights(), u.values(), v.values());
}

template <typename Scalar>
Scalar norm(const BasicField<Scalar>& u) {
  return std::sqrt(std::max(Scalar(0), inner_product(u, u)));
}

/// Converts Euclidean derivative coefficients (d f / d u_k) into the gradient
/// under the weighted inner product: g_k = dual_k / w_k.
template <typename Scalar, typename Derived>
BasicField<Scalar> riesz_map(const SpacePtr<Scalar>& space, const Eigen::MatrixBase<Derived>& dual_coeffs) {
  if (dual_coeffs.size() != space->size()) throw InvalidArgument("dual coefficient length must equal nx*ny");
  const auto& w = space->weights();
  VectorX<Scalar> g(space->size());
  for (Index k = 0; k < g.size(); ++k) {
    if (w[k] > 0) {
      g[k] = dual_coeffs[k] / w[k];
    } else {
      if (dual_coeffs[k] != Scalar(0)) throw SingularRieszError(k);
      g[k] = 0;
    }
  }
  return BasicField<Scalar>(space, g);
}

/// Coefficients <u, w_i> of u against an orthonormal basis.
template <typename Scalar>
VectorX<Scalar> coordinates(const BasicField<Scalar>& u, const BasicSubspace<Scalar>& a) {
  require_same_space(u, a);
  if (!a.orthonormal()) throw NotOrthonormalError("subspace basis must be orthonormalized first");
  return a.basis().transpose() * (a.space()->weights().asDiagonal() * u.values());
}

template <typename Scalar>
BasicField<Scalar> project(const BasicField<Scalar>& u, const BasicSubspace<Scalar>& a) {
  const VectorX<Scalar> c = coordinates(u, a);
  return BasicField<Scalar>(u.space(), a.basis() * c);
}

template <typename Scalar>
BasicField<Scalar> project_orthogonal(const BasicField<Scalar>& u, const BasicSubspace<Scalar>& a) {
  return u - project(u, a);
}

/// Modified Gram-Schmidt with one re-orthogonalization pass under the weighted
/// inner product. Columns whose norm after deflation drops below
/// 1e-12 * (largest input norm) are discarded; the count is kept in dropped().
template <typename Scalar, typename Derived>
BasicSubspace<Scalar> orthonormalize(const SpacePtr<Scalar>& space, const Eigen::MatrixBase<Derived>& columns,
                                     Scalar drop_tol = Scalar(1e-12)) {
  if (columns.cols() == 0) throw EmptySubspaceError();
  if (columns.rows() != space->size()) throw InvalidArgument("basis rows must equal nx*ny");
  const auto& w = space->weights();
  Scalar max_norm = 0;
  for (Index c = 0; c < columns.cols(); ++c)
    max_norm = std::max(max_norm, std::sqrt(weighted_dot(w, columns.col(c), columns.col(c))));
  if (!(max_norm > 0)) throw EmptySubspaceError();

  MatrixX<Scalar> q(columns.rows(), columns.cols());
  Index kept = 0;
  VectorX<Scalar> v;
  for (Index c = 0; c < columns.cols(); ++c) {
    v = columns.col(c);
    for (int pass = 0; pass < 2; ++pass)
      for (Index k = 0; k < kept; ++k) v -= weighted_dot(w, q.col(k), v) * q.col(k);
    const Scalar n = std::sqrt(weighted_dot(w, v, v));
    if (n <= drop_tol * max_norm) continue;
    q.col(kept++) = v / n;
  }
  if (kept == 0) throw EmptySubspaceError();
  BasicSubspace<Scalar> out(space, q.leftCols(kept), true);
  out.set_dropped(columns.cols() - kept);
  return out;
}

template <typename Scalar>
BasicSubspace<Scalar> orthonormalize(const std::vector<BasicField<Scalar>>& fields) {
  if (fields.empty()) throw EmptySubspaceError();
  const auto& space = fields.front().space();
  MatrixX<Scalar> cols(space->size(), static_cast<Index>(fields.size()));
  for (std::size_t c = 0; c < fields.size(); ++c) {
    require_same_space(fields.front(), fields[c]);
    cols.col(static_cast<Index>(c)) = fields[c].values();
  }
  return orthonormalize(space, cols);
}

/// Gram matrix of the basis under the space inner product.
template <typename Scalar>
MatrixX<Scalar> gram(const BasicSubspace<Scalar>& a) {
  return weighted_gram(a.space()->weights(), a.basis(), a.basis());
}

}  // namespace asub
