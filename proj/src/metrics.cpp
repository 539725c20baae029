#include "spgseg/metrics.hpp"

#include <numeric>
#include <string>

#include "spgseg/error.hpp"

namespace spgseg {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : classes_(num_classes), counts_(num_classes * num_classes, 0) {
  require(num_classes >= 2, "confusion matrix needs at least 2 classes");
}

void ConfusionMatrix::add(std::int32_t truth, std::int32_t predicted, std::uint64_t count) {
  require(truth >= 0 && static_cast<std::size_t>(truth) < classes_, "truth class out of range");
  require(predicted >= 0 && static_cast<std::size_t>(predicted) < classes_,
          "predicted class " + std::to_string(predicted) + " out of range");
  counts_[static_cast<std::size_t>(truth) * classes_ + static_cast<std::size_t>(predicted)] += count;
}

void ConfusionMatrix::add(const LabelSet& truth, std::span<const std::int32_t> predicted) {
  require(truth.size() == predicted.size(), "truth and prediction cover different point counts");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.has_label(i)) add(truth.class_of[i], predicted[i]);
  }
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

MetricsReport ConfusionMatrix::report() const {
  MetricsReport r;
  r.total_points = total();
  require(r.total_points > 0, "cannot compute metrics over an empty evaluation set");
  r.class_iou.resize(classes_);
  r.class_accuracy.resize(classes_);

  std::uint64_t trace = 0;
  double iou_sum = 0.0, acc_sum = 0.0;
  std::size_t iou_n = 0, acc_n = 0;
  for (std::size_t c = 0; c < classes_; ++c) {
    const std::uint64_t tp = at(c, c);
    std::uint64_t row = 0, col = 0;
    for (std::size_t o = 0; o < classes_; ++o) {
      row += at(c, o);
      col += at(o, c);
    }
    trace += tp;
    const std::uint64_t uni = row + col - tp;
    if (uni > 0) {
      r.class_iou[c] = 100.0 * static_cast<double>(tp) / static_cast<double>(uni);
      iou_sum += *r.class_iou[c];
      ++iou_n;
    }
    if (row > 0) {
      r.class_accuracy[c] = 100.0 * static_cast<double>(tp) / static_cast<double>(row);
      acc_sum += *r.class_accuracy[c];
      ++acc_n;
    }
  }
  r.oa = 100.0 * static_cast<double>(trace) / static_cast<double>(r.total_points);
  r.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  r.macc = acc_n ? acc_sum / static_cast<double>(acc_n) : 0.0;
  return r;
}

}  // namespace spgseg
