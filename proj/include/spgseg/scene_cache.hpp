#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "spgseg/labels.hpp"
#include "spgseg/point_cloud.hpp"
#include "spgseg/region_growing.hpp"
#include "spgseg/spatial_index.hpp"
#include "spgseg/surface.hpp"

namespace spgseg {

struct GeometryConfig {
  GrowingConfig growing;
  std::size_t k_normal = kDefaultNormalNeighbors;
  std::size_t k_edge = 8;

  void validate() const;
  bool operator==(const GeometryConfig&) const = default;
};

/// Everything derived from a scene's points alone.
struct SceneGeometry {
  SpatialIndex index;
  SurfaceEstimate surface;
  SuperpointPartition geometric;
  SuperpointPartition color;
  SuperpointPartition merged;
  EdgeLabels edges;
};

SceneGeometry compute_scene_geometry(const PointCloud& cloud, const GeometryConfig& cfg);

/// Cache key: content hash of the cloud combined with every config field.
std::uint64_t geometry_key(const PointCloud& cloud, const GeometryConfig& cfg);

/// Thread-safe memo of scene geometry. With a directory, entries also persist
/// as JSON files; unreadable or mismatching files are recomputed and rewritten.
class SceneCache {
 public:
  explicit SceneCache(std::optional<std::filesystem::path> directory = std::nullopt);
  /// Directory from the SPGSEG_CACHE_DIR environment variable, if set.
  static SceneCache from_environment();

  std::shared_ptr<const SceneGeometry> get(const PointCloud& cloud, const GeometryConfig& cfg);

  std::size_t memory_hits() const;
  std::size_t disk_hits() const;
  std::size_t misses() const;
  std::size_t disk_rejects() const;

 private:
  std::optional<SceneGeometry> load(const std::filesystem::path& file, const PointCloud& cloud,
                                    std::uint64_t key) const;
  void store(const std::filesystem::path& file, const SceneGeometry& geo, std::uint64_t key) const;

  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const SceneGeometry>> entries_;
  std::size_t memory_hits_ = 0, disk_hits_ = 0, misses_ = 0;
  mutable std::size_t disk_rejects_ = 0;
};

}  // namespace spgseg
