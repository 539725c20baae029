#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spgseg/types.hpp"

namespace spgseg {

inline constexpr std::int32_t kNoGroup = -1;

/// Disjoint superpoints plus the residue of points that belong to none.
///
/// Always stored in canonical form: ids inside a group ascend, groups are
/// ordered by their smallest id, and group ids are positions in that order.
/// Two partitions describing the same sets therefore compare equal.
class SuperpointPartition {
 public:
  SuperpointPartition() = default;

  /// Builds a partition from arbitrary per-point labels (kNoGroup = unclustered).
  /// Label values only need to be consistent, not dense.
  static SuperpointPartition from_labels(std::span<const std::int32_t> labels);

  /// Every point in one group.
  static SuperpointPartition single_group(std::size_t num_points);

  std::size_t num_points() const { return membership_.size(); }
  std::size_t num_groups() const { return groups_.size(); }
  const std::vector<std::vector<PointId>>& groups() const { return groups_; }
  const std::vector<PointId>& group(std::size_t g) const { return groups_[g]; }
  const std::vector<PointId>& unclustered() const { return unclustered_; }
  const std::vector<std::int32_t>& membership() const { return membership_; }
  std::int32_t group_of(PointId id) const { return membership_[id]; }
  bool is_clustered(PointId id) const { return membership_[id] != kNoGroup; }

  /// Checks every structural invariant; throws InputError on violation.
  void validate() const;

  /// Groups with fewer than `min_size` points move to the unclustered set.
  SuperpointPartition dissolve_smaller_than(std::size_t min_size) const;

  /// Restriction to the points `ids` (renumbered 0..ids.size()-1 in the given order).
  SuperpointPartition restrict_to(std::span<const PointId> ids) const;

  bool operator==(const SuperpointPartition&) const = default;

 private:
  std::vector<std::vector<PointId>> groups_;
  std::vector<PointId> unclustered_;
  std::vector<std::int32_t> membership_;
};

}  // namespace spgseg
