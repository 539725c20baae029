#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spgseg/point_cloud.hpp"

namespace spgseg {

/// Exact k-nearest-neighbor index over the positions of one cloud.
///
/// Results are ranked by (squared distance, point id), with the query point
/// itself always first. This is exactly the order a brute-force sort produces,
/// including ties. Immutable after construction; concurrent queries are safe.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(const PointCloud& cloud);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(PointId id) const { return points_[id]; }

  /// k nearest neighbors of point `query`, self first. Throws InputError if k > N or k == 0.
  std::vector<PointId> knn(PointId query, std::size_t k) const;
  void knn(PointId query, std::size_t k, std::vector<PointId>& out) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };
  struct Candidate {
    double dist2;
    PointId id;
    bool operator<(const Candidate& o) const { return dist2 < o.dist2 || (dist2 == o.dist2 && id < o.id); }
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, PointId query, std::size_t k, std::vector<Candidate>& heap) const;

  std::vector<Vec3> points_;
  std::vector<PointId> order_;
  std::vector<Node> nodes_;
};

/// build_index: validates the cloud and constructs its index.
SpatialIndex build_index(const PointCloud& cloud);

/// Fixed-k neighbor lists for every point, row i = knn(i, k).
struct NeighborTable {
  std::size_t k = 0;
  std::vector<PointId> ids;

  std::size_t num_points() const { return k == 0 ? 0 : ids.size() / k; }
  std::span<const PointId> row(std::size_t i) const { return {ids.data() + i * k, k}; }
};

NeighborTable knn_table(const SpatialIndex& index, std::size_t k);

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace spgseg
