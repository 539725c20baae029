#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spgseg/labels.hpp"

namespace spgseg {

/// Percentages in [0, 100]. Per-class entries are empty for classes that do
/// not take part in the corresponding mean.
struct MetricsReport {
  double miou = 0.0;
  double macc = 0.0;
  double oa = 0.0;
  std::vector<std::optional<double>> class_iou;
  std::vector<std::optional<double>> class_accuracy;
  std::uint64_t total_points = 0;
};

/// Rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  /// Accumulates all points that carry a ground-truth class.
  void add(const LabelSet& truth, std::span<const std::int32_t> predicted);
  void add(std::int32_t truth, std::int32_t predicted, std::uint64_t count = 1);

  std::size_t num_classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::uint64_t total() const;

  /// OA = trace / total; IoU_c = tp / (tp + fp + fn) over classes present in
  /// truth or prediction; mAcc = mean recall over classes present in truth.
  MetricsReport report() const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace spgseg
