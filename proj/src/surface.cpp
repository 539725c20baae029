#include "spgseg/surface.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include <Eigen/Eigenvalues>

#include "spgseg/error.hpp"
#include "spgseg/parallel.hpp"

namespace spgseg {

Eigen::Matrix3d neighborhood_covariance(const PointCloud& cloud, std::span<const PointId> ids) {
  Vec3 mean = Vec3::Zero();
  for (PointId id : ids) mean += cloud.positions[id];
  mean /= static_cast<double>(ids.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (PointId id : ids) {
    const Vec3 d = cloud.positions[id] - mean;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(ids.size());
}

Vec3 canonicalize_normal(const Vec3& n) {
  double key = n.z();
  if (key == 0.0) key = n.y();
  if (key == 0.0) key = n.x();
  return key < 0.0 ? Vec3(-n) : n;
}

SurfaceEstimate estimate_surface(const PointCloud& cloud, const SpatialIndex& index, std::size_t k_normal) {
  require(k_normal >= 3, "k_normal must be at least 3");
  require(index.size() == cloud.size(), "index and cloud sizes differ");
  require(k_normal <= cloud.size(),
          "k_normal=" + std::to_string(k_normal) + " exceeds cloud size " + std::to_string(cloud.size()));

  const std::size_t n = cloud.size();
  SurfaceEstimate out;
  out.normals.resize(n);
  out.curvatures.resize(n);
  std::vector<std::uint8_t> degenerate(n, 0);

  parallel_for(n, [&](std::size_t i) {
    std::vector<PointId> nbrs;
    index.knn(static_cast<PointId>(i), k_normal, nbrs);
    const Eigen::Matrix3d cov = neighborhood_covariance(cloud, nbrs);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Vec3 eig = solver.eigenvalues();  // ascending
    const double lambda_min = std::max(0.0, eig[0]);
    const double sum = lambda_min + std::max(0.0, eig[1]) + std::max(0.0, eig[2]);
    if (solver.info() != Eigen::Success || sum < kDegenerateEigenSum) {
      out.normals[i] = Vec3::UnitZ();
      out.curvatures[i] = 0.0;
      degenerate[i] = 1;
      return;
    }
    out.normals[i] = canonicalize_normal(solver.eigenvectors().col(0).normalized());
    out.curvatures[i] = std::min(lambda_min / sum, 1.0 / 3.0);
  }, 256);

  out.degenerate_count = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  return out;
}

}  // namespace spgseg
