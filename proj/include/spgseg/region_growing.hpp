#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"
#include "spgseg/spatial_index.hpp"
#include "spgseg/surface.hpp"

namespace spgseg {

/// Thresholds shared by the geometric and color region growers.
struct GrowingConfig {
  /// Maximum angle between unsigned normals, radians.
  double t_ang = 3.0 * std::numbers::pi / 180.0;
  /// Seeds need curvature below this (units of lambda_min / sum lambda, so at most 1/3).
  double t_cvt = 0.05;
  /// Per-point color distance to the growing seed, 0-255 RGB units.
  double t_clr = 6.0;
  /// Cluster mean color distance below which adjacent clusters merge, 0-255 units.
  double t_merge = 6.0;
  /// Neighborhood size, counting the point itself.
  std::size_t k_grow = 16;
  std::size_t min_cluster = 10;

  void validate() const;
};

/// Point `to` joined a region while `from` was the active seed.
struct Admission {
  PointId from;
  PointId to;
};

/// Optional record of how a region grower reached its result.
struct GrowthTrace {
  std::vector<PointId> region_seeds;
  std::vector<Admission> admissions;
  /// Color grower only: clusters right after growth, before any merging.
  SuperpointPartition before_merge;
};

/// |a . b| for unit normals, summed in x, y, z order.
double normal_alignment(const Vec3& a, const Vec3& b);

/// Euclidean RGB distance in 0-255 units: sqrt(sum_c (255 (a_c - b_c))^2).
double color_distance(const Vec3& a, const Vec3& b);

/// Fixed-point scale for accumulating 0-255 color sums, so cluster means do
/// not depend on the order clusters were merged in.
inline constexpr double kColorFixedScale = 16777216.0;  // 2^24
std::int64_t color_to_fixed(double channel);

/// Geometry-based region growing.
///
/// Repeatedly starts a region at the unsegmented point of least curvature
/// (ties by id) whose curvature is below t_cvt, then drains a FIFO of seeds:
/// every unsegmented k_grow-neighbor of the active seed whose unsigned normal
/// is within t_ang of the seed's joins the region, and becomes a seed itself
/// when its curvature is below t_cvt. Regions smaller than min_cluster and
/// points never reached end up unclustered.
SuperpointPartition grow_geometric(const PointCloud& cloud, const SurfaceEstimate& surface, const SpatialIndex& index,
                                   const GrowingConfig& cfg, GrowthTrace* trace = nullptr);

/// Color-based region growing followed by cluster merging.
///
/// Growth: regions start at the lowest unsegmented id; a neighbor joins when
/// its color is within t_clr of the active seed's, and every member seeds.
/// Merging: two clusters are adjacent when some point has a k_grow-neighbor in
/// the other. Until no pair qualifies, the adjacent pair with the smallest
/// mean-color distance below t_merge merges (ties by the pair's smallest
/// member ids). Then, smallest cluster first (ties by smallest member id),
/// each cluster under min_cluster with any neighbor merges into the neighbor
/// of nearest mean color (ties by smallest member id). Every point ends up
/// clustered.
SuperpointPartition grow_color(const PointCloud& cloud, const SpatialIndex& index, const GrowingConfig& cfg,
                               GrowthTrace* trace = nullptr);

/// Over-segments each geometric superpoint by the color superpoints: output
/// groups are the non-empty intersections; unclustered = geo.unclustered.
SuperpointPartition merge_partitions(const SuperpointPartition& geo, const SuperpointPartition& color);

}  // namespace spgseg
