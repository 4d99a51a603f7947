#pragma once

// Test-only oracles. These assemble operators densely on the node grid and
// never go through the Gram-matrix route they are used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "asub/hilbert.hpp"

namespace asub::oracle {

/// Symmetric weighted matrix W^{1/2} [(1/B) sum_b g_b g_b^T] W^{1/2}.
inline Eigen::MatrixXd dense_weighted_operator(const Eigen::VectorXd& weights, const Eigen::MatrixXd& gradients) {
  const Eigen::MatrixXd sg = weights.cwiseSqrt().asDiagonal() * gradients;
  return sg * sg.transpose() / double(gradients.cols());
}

struct DenseEigen {
  Eigen::VectorXd values;        // descending
  Eigen::MatrixXd eigenfunctions;  // columns as node values (W^{-1/2} y)
};

inline DenseEigen dense_eigen(const Eigen::VectorXd& weights, const Eigen::MatrixXd& weighted_operator) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weighted_operator);
  DenseEigen out;
  out.values = eig.eigenvalues().reverse();
  out.eigenfunctions = weights.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().rowwise().reverse();
  return out;
}

/// Plain trapezoid sum of fn over the grid, computed without the library's weights.
template <typename Fn>
double trapezoid_integral(Index nx, Index ny, Fn&& fn) {
  const double hx = 1.0 / double(nx - 1), hy = 1.0 / double(ny - 1);
  double total = 0;
  for (Index j = 0; j < ny; ++j)
    for (Index i = 0; i < nx; ++i) {
      double w = hx * hy;
      if (i == 0 || i == nx - 1) w *= 0.5;
      if (j == 0 || j == ny - 1) w *= 0.5;
      total += w * fn(double(i) * hx, double(j) * hy);
    }
  return total;
}

/// min over signs of the weighted norm of a -/+ b, computed from node values.
inline double sign_free_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
  const Eigen::VectorXd p = a - b, m = a + b;
  return std::sqrt(std::min((w.array() * p.array().square()).sum(), (w.array() * m.array().square()).sum()));
}

/// Sample mean and standard error.
inline std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  double m = 0;
  for (double x : xs) m += x;
  m /= double(xs.size());
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= double(xs.size() - 1);
  return {m, std::sqrt(v / double(xs.size()))};
}

/// Exhaustive K-nearest indices by Euclidean distance between rows, ties by index.
inline std::vector<Index> brute_force_neighbors(const Eigen::MatrixXd& rows, const Eigen::VectorXd& query, Index k,
                                                Index exclude = -1) {
  std::vector<std::pair<double, Index>> d;
  for (Index i = 0; i < rows.rows(); ++i) {
    if (i == exclude) continue;
    d.emplace_back((rows.row(i).transpose() - query).squaredNorm(), i);
  }
  std::sort(d.begin(), d.end());
  std::vector<Index> out;
  for (Index i = 0; i < k; ++i) out.push_back(d[std::size_t(i)].second);
  return out;
}

}  // namespace asub::oracle
