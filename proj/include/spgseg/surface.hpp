#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "spgseg/spatial_index.hpp"

namespace spgseg {

/// Per-point unit normals and PCA curvature (smallest eigenvalue over the
/// eigenvalue sum, so always in [0, 1/3]).
struct SurfaceEstimate {
  std::vector<Vec3> normals;
  std::vector<double> curvatures;
  /// Points whose neighborhood had (numerically) zero spread.
  std::size_t degenerate_count = 0;

  std::size_t size() const { return normals.size(); }
};

/// Eigenvalues below this sum are treated as a degenerate neighborhood.
inline constexpr double kDegenerateEigenSum = 1e-12;
inline constexpr std::size_t kDefaultNormalNeighbors = 16;

/// Covariance (normalized by the neighbor count) of the positions `ids`.
Eigen::Matrix3d neighborhood_covariance(const PointCloud& cloud, std::span<const PointId> ids);

/// Flips `n` so that its first non-zero component among z, y, x is positive.
Vec3 canonicalize_normal(const Vec3& n);

/// k-NN PCA normals and curvature. Requires 3 <= k_normal <= N.
SurfaceEstimate estimate_surface(const PointCloud& cloud, const SpatialIndex& index, std::size_t k_normal);

}  // namespace spgseg
