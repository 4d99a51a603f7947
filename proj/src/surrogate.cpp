#include "asub/surrogate.hpp"

#include <algorithm>

#include "asub/parallel.hpp"

namespace asub {

ReducedDataset reduce(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& values, const Subspace& basis,
                      Provenance source) {
  if (!basis.orthonormal()) throw NotOrthonormalError("reduction basis must be orthonormal");
  if (inputs.rows() != basis.space()->size()) throw InvalidArgument("input rows must equal nx*ny");
  if (inputs.cols() != values.size()) throw InvalidArgument("one value per input required");
  ReducedDataset out{weighted_gram(basis.space()->weights(), inputs, basis.basis()), values, basis, std::move(source)};
  return out;
}

ReducedDataset reduce(const GradientSampleSet& samples, const Subspace& basis, Provenance source) {
  if (!samples.space->same_as(*basis.space())) throw SpaceMismatchError();
  return reduce(samples.inputs, samples.values, basis, std::move(source));
}

double as_distance(const Field& u1, const Field& u2, const Subspace& a) {
  require_same_space(u1, u2);
  return coordinates(u1 - u2, a).norm();
}

NeighborSet neighbor_set(const ReducedDataset& data) { return {data.coords, data.values}; }

NeighborSet neighbor_set(const SpacePtr<double>& space, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& values,
                         Metric metric, const Subspace* basis) {
  if (inputs.rows() != space->size()) throw InvalidArgument("input rows must equal nx*ny");
  if (inputs.cols() != values.size()) throw InvalidArgument("one value per input required");
  if (metric == Metric::kActive) {
    if (!basis) throw InvalidArgument("the active metric needs a basis");
    return neighbor_set(reduce(inputs, values, *basis));
  }
  return {(space->weights().cwiseSqrt().asDiagonal() * inputs).transpose(), values};
}

Eigen::VectorXd embed(const Field& u, Metric metric, const Subspace* basis) {
  if (metric == Metric::kActive) {
    if (!basis) throw InvalidArgument("the active metric needs a basis");
    return coordinates(u, *basis);
  }
  return u.space()->weights().cwiseSqrt().cwiseProduct(u.values());
}

std::vector<Index> nearest(const NeighborSet& train, const Eigen::VectorXd& query, Index K, Index exclude) {
  const Index n = train.size();
  const Index available = n - (exclude >= 0 && exclude < n ? 1 : 0);
  if (available < 1) throw InvalidArgument("KNN training set is empty");
  if (K < 1 || K > available) throw InvalidArgument("K must lie in [1, N]");
  if (query.size() != train.points.cols()) throw InvalidArgument("query dimension does not match the training set");
  std::vector<std::pair<double, Index>> d;
  d.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    if (i != exclude) d.emplace_back((train.points.row(i).transpose() - query).squaredNorm(), i);
  std::partial_sort(d.begin(), d.begin() + K, d.end());
  std::vector<Index> out(static_cast<std::size_t>(K));
  for (Index k = 0; k < K; ++k) out[std::size_t(k)] = d[std::size_t(k)].second;
  return out;
}

double knn_predict(const NeighborSet& train, const Eigen::VectorXd& query, Index K, Index exclude) {
  double sum = 0;
  for (Index i : nearest(train, query, K, exclude)) sum += train.values[i];
  return sum / double(K);
}

Eigen::VectorXd loo_cv(const NeighborSet& data, const std::vector<Index>& K_range) {
  if (K_range.empty()) return Eigen::VectorXd(0);
  const Index kmax = *std::max_element(K_range.begin(), K_range.end());
  const Index kmin = *std::min_element(K_range.begin(), K_range.end());
  if (kmin < 1) throw InvalidArgument("K values must be at least 1");
  if (data.size() < kmax + 1) throw InvalidArgument("leave-one-out needs N >= max(K) + 1");
  const Index n = data.size();
  // err(j, K - 1) for every K up to kmax.
  Eigen::MatrixXd err(n, kmax);
  parallel_for(n, [&](long j) {
    const auto idx = nearest(data, data.points.row(j).transpose(), kmax, j);
    double sum = 0;
    for (Index k = 0; k < kmax; ++k) {
      sum += data.values[idx[std::size_t(k)]];
      const double r = data.values[j] - sum / double(k + 1);
      err(j, k) = r * r;
    }
  });
  Eigen::VectorXd out(static_cast<Index>(K_range.size()));
  for (std::size_t i = 0; i < K_range.size(); ++i) out[Index(i)] = err.col(K_range[i] - 1).mean();
  return out;
}

Surface gp_surface(const ReducedDataset& data, Index grid_res, const GpFitOptions& options) {
  if (data.dim() != 2) throw InvalidArgument("gp_surface needs exactly two coordinates");
  if (data.size() < 10) throw InvalidArgument("gp_surface needs at least 10 points");
  if (grid_res < 2) throw InvalidArgument("grid_res must be at least 2");
  const auto gp = GaussianProcess::fit(data.coords, data.values, options);
  Surface s;
  s.hyper = gp.hyperparameters();
  auto axis = [&](Index c) {
    const double lo = data.coords.col(c).minCoeff(), hi = data.coords.col(c).maxCoeff();
    const double pad = 0.1 * (hi - lo);
    return Eigen::VectorXd::LinSpaced(grid_res, lo - pad, hi + pad);
  };
  s.x1 = axis(0);
  s.x2 = axis(1);
  Eigen::MatrixXd pts(grid_res * grid_res, 2);
  for (Index j = 0; j < grid_res; ++j)
    for (Index i = 0; i < grid_res; ++i) pts.row(j * grid_res + i) << s.x1[i], s.x2[j];
  const Eigen::VectorXd m = gp.mean(pts);
  s.mean.resize(grid_res, grid_res);
  for (Index j = 0; j < grid_res; ++j)
    for (Index i = 0; i < grid_res; ++i) s.mean(i, j) = m[j * grid_res + i];
  return s;
}

}  // namespace asub
