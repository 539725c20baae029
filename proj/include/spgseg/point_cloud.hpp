#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spgseg/types.hpp"

namespace spgseg {

/// N points with XYZ positions (meters) and RGB colors in [0, 1].
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  void add(const Vec3& position, const Vec3& color) {
    positions.push_back(position);
    colors.push_back(color);
  }

  /// Throws InputError unless N >= 1, positions are finite and colors lie in [0, 1].
  void validate() const;

  Vec3 centroid() const;

  /// Points `ids` in the given order.
  PointCloud subset(std::span<const PointId> ids) const;
};

/// FNV-1a over the raw coordinate and color bytes.
std::uint64_t content_hash(const PointCloud& cloud);

/// Continues an FNV-1a hash with arbitrary bytes.
std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t size);

}  // namespace spgseg
