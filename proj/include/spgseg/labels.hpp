#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spgseg/partition.hpp"
#include "spgseg/spatial_index.hpp"

namespace spgseg {

inline constexpr std::int32_t kNoLabel = -1;

/// Per-point class indices; kNoLabel marks a point excluded from the losses.
struct LabelSet {
  std::vector<std::int32_t> class_of;
  std::size_t num_classes = 0;

  LabelSet() = default;
  LabelSet(std::vector<std::int32_t> classes, std::size_t classes_count)
      : class_of(std::move(classes)), num_classes(classes_count) {}
  static LabelSet unlabeled(std::size_t n, std::size_t classes_count) {
    return {std::vector<std::int32_t>(n, kNoLabel), classes_count};
  }

  std::size_t size() const { return class_of.size(); }
  /// The loss mask: true exactly when the point carries a class.
  bool has_label(std::size_t i) const { return class_of[i] != kNoLabel; }
  std::size_t labeled_count() const;
  void validate() const;
  LabelSet restrict_to(std::span<const PointId> ids) const;

  bool operator==(const LabelSet&) const = default;
};

/// Per-point edge flags (geometric or color edge).
struct EdgeLabels {
  std::vector<std::uint8_t> is_edge;

  std::size_t size() const { return is_edge.size(); }
  std::size_t edge_count() const;
  EdgeLabels restrict_to(std::span<const PointId> ids) const;

  bool operator==(const EdgeLabels&) const = default;
};

/// Exact rational threshold p/q with 0 < p/q < 1.
struct Ratio {
  std::int64_t num = 4;
  std::int64_t den = 5;

  /// Smallest-denominator fraction within 1e-12 of `value` (denominator up to 10^6).
  static Ratio from_double(double value);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  bool operator==(const Ratio&) const = default;
};

/// Superpoint majority vote over pseudo labels.
///
/// For each superpoint of n points the winning class (ties to the smaller
/// index) is written to every member if its count strictly exceeds t_plo * n;
/// otherwise every member loses its label. Unlabeled inputs count toward n
/// but toward no class. Unclustered points lose their labels.
LabelSet optimize_pseudo_labels(const SuperpointPartition& sp, const LabelSet& pseudo, Ratio t_plo);

/// Edge flag: geometric edge (unclustered in `geo`) or color edge (some point
/// of its k_edge-neighborhood, which includes itself, lies in a different
/// color superpoint).
EdgeLabels compute_edge_labels(const SuperpointPartition& geo, const SuperpointPartition& color,
                               const SpatialIndex& index, std::size_t k_edge);

}  // namespace spgseg
