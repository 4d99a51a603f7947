#pragma once

// Modeling in reduced coordinates: the active-subspace pseudometric,
// K-nearest-neighbor regression with leave-one-out cross-validation, and a
// GP conditional-mean surface on two coordinates.

#include <cstdint>
#include <string>
#include <vector>

#include "asub/active_subspace.hpp"
#include "asub/gp.hpp"

namespace asub {

struct Provenance {
  std::uint64_t seed = 0;
  Index B = 0;
  std::string functional;
};

/// Coordinates <u_j, w_i> of N inputs against an orthonormal basis, with values f(u_j).
struct ReducedDataset {
  Eigen::MatrixXd coords;  // N x n
  Eigen::VectorXd values;  // N
  Subspace basis;
  Provenance source;

  Index size() const { return coords.rows(); }
  Index dim() const { return coords.cols(); }
};

/// inputs: nodes x N.
ReducedDataset reduce(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& values, const Subspace& basis,
                      Provenance source = {});
ReducedDataset reduce(const GradientSampleSet& samples, const Subspace& basis, Provenance source = {});

/// ||P_A (u1 - u2)||.
double as_distance(const Field& u1, const Field& u2, const Subspace& a);

enum class Metric { kL2, kActive };

/// Training points embedded so that Euclidean distance between rows equals
/// the chosen metric: W^{1/2} u for L2, coordinates for the active metric.
struct NeighborSet {
  Eigen::MatrixXd points;  // N x dim
  Eigen::VectorXd values;

  Index size() const { return points.rows(); }
};

NeighborSet neighbor_set(const ReducedDataset& data);
NeighborSet neighbor_set(const SpacePtr<double>& space, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& values,
                         Metric metric, const Subspace* basis = nullptr);

/// Embeds one field the same way neighbor_set does.
Eigen::VectorXd embed(const Field& u, Metric metric, const Subspace* basis = nullptr);

/// Indices of the K nearest rows, ties broken by index; `exclude` is skipped.
std::vector<Index> nearest(const NeighborSet& train, const Eigen::VectorXd& query, Index K, Index exclude = -1);

/// Unweighted mean of the K nearest training values.
double knn_predict(const NeighborSet& train, const Eigen::VectorXd& query, Index K, Index exclude = -1);

/// Mean squared leave-one-out error for each K.
Eigen::VectorXd loo_cv(const NeighborSet& data, const std::vector<Index>& K_range);

struct Surface {
  Eigen::VectorXd x1, x2;
  Eigen::MatrixXd mean;  // mean(i, j) at (x1[i], x2[j])
  GpHyperparameters hyper;
};

/// GP mean on a grid_res x grid_res lattice spanning the observed coordinates +-10%.
Surface gp_surface(const ReducedDataset& data, Index grid_res, const GpFitOptions& options = {});

}  // namespace asub
