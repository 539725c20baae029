#include "spgseg/point_cloud.hpp"

#include <cmath>
#include <string>

#include "spgseg/error.hpp"
#include "spgseg/parallel.hpp"

namespace spgseg {

namespace {
std::size_t g_max_threads = 1;
}  // namespace

void set_max_threads(std::size_t n) { g_max_threads = std::max<std::size_t>(1, n); }
std::size_t max_threads() { return g_max_threads; }

void PointCloud::validate() const {
  require(!positions.empty(), "point cloud is empty");
  require(colors.size() == positions.size(), "point cloud has " + std::to_string(positions.size()) +
                                                 " positions but " + std::to_string(colors.size()) + " colors");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    require(positions[i].allFinite(), "point " + std::to_string(i) + " has a non-finite coordinate");
    const Vec3& c = colors[i];
    require(c.allFinite() && (c.array() >= 0.0).all() && (c.array() <= 1.0).all(),
            "point " + std::to_string(i) + " has a color outside [0, 1]");
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : positions) sum += p;
  return positions.empty() ? sum : Vec3(sum / static_cast<double>(positions.size()));
}

PointCloud PointCloud::subset(std::span<const PointId> ids) const {
  PointCloud out;
  out.positions.reserve(ids.size());
  out.colors.reserve(ids.size());
  for (PointId id : ids) out.add(positions.at(id), colors.at(id));
  return out;
}

std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t content_hash(const PointCloud& cloud) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t n = cloud.size();
  h = hash_bytes(h, &n, sizeof(n));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    h = hash_bytes(h, cloud.positions[i].data(), 3 * sizeof(double));
    h = hash_bytes(h, cloud.colors[i].data(), 3 * sizeof(double));
  }
  return h;
}

}  // namespace spgseg
