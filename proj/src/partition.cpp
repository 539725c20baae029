#include "spgseg/partition.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "spgseg/error.hpp"

namespace spgseg {

SuperpointPartition SuperpointPartition::from_labels(std::span<const std::int32_t> labels) {
  SuperpointPartition p;
  p.membership_.assign(labels.size(), kNoGroup);
  // Scanning ids in ascending order assigns group ids by smallest member.
  std::unordered_map<std::int32_t, std::int32_t> dense;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto id = static_cast<PointId>(i);
    if (labels[i] == kNoGroup) {
      p.unclustered_.push_back(id);
      continue;
    }
    auto [it, inserted] = dense.try_emplace(labels[i], static_cast<std::int32_t>(p.groups_.size()));
    if (inserted) p.groups_.emplace_back();
    p.groups_[it->second].push_back(id);
    p.membership_[i] = it->second;
  }
  return p;
}

SuperpointPartition SuperpointPartition::single_group(std::size_t num_points) {
  std::vector<std::int32_t> labels(num_points, 0);
  return from_labels(labels);
}

void SuperpointPartition::validate() const {
  const std::size_t n = membership_.size();
  std::vector<std::uint8_t> seen(n, 0);
  PointId prev_min = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& grp = groups_[g];
    require(!grp.empty(), "superpoint " + std::to_string(g) + " is empty");
    require(g == 0 || grp.front() > prev_min, "superpoints are not ordered by smallest member");
    prev_min = grp.front();
    for (std::size_t j = 0; j < grp.size(); ++j) {
      const PointId id = grp[j];
      require(id < n, "superpoint member out of range");
      require(j == 0 || grp[j - 1] < id, "superpoint members not ascending");
      require(!seen[id], "point " + std::to_string(id) + " appears twice");
      require(membership_[id] == static_cast<std::int32_t>(g), "membership inconsistent with groups");
      seen[id] = 1;
    }
  }
  for (std::size_t j = 0; j < unclustered_.size(); ++j) {
    const PointId id = unclustered_[j];
    require(id < n && (j == 0 || unclustered_[j - 1] < id), "unclustered ids invalid");
    require(!seen[id], "point " + std::to_string(id) + " is both clustered and unclustered");
    require(membership_[id] == kNoGroup, "membership inconsistent with unclustered set");
    seen[id] = 1;
  }
  require(std::all_of(seen.begin(), seen.end(), [](std::uint8_t s) { return s != 0; }),
          "partition does not cover every point");
}

SuperpointPartition SuperpointPartition::dissolve_smaller_than(std::size_t min_size) const {
  std::vector<std::int32_t> labels = membership_;
  for (auto& l : labels) {
    if (l != kNoGroup && groups_[static_cast<std::size_t>(l)].size() < min_size) l = kNoGroup;
  }
  return from_labels(labels);
}

SuperpointPartition SuperpointPartition::restrict_to(std::span<const PointId> ids) const {
  std::vector<std::int32_t> labels(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) labels[i] = membership_.at(ids[i]);
  return from_labels(labels);
}

}  // namespace spgseg
