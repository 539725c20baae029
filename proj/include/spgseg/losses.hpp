#pragma once

#include <cstdint>
#include <string>

#include "spgseg/labels.hpp"
#include "spgseg/model.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/types.hpp"

namespace spgseg {

/// One loss term: its value (a plain sum over points), the gradient w.r.t. the
/// tensor it was computed on, and the number of contributing points.
struct LossTerm {
  double value = 0.0;
  Matrix grad;
  std::size_t count = 0;
  /// Set when no point contributed (the value is then 0).
  bool empty = false;
};

/// Floor applied to probabilities inside logarithms.
inline constexpr double kLogFloor = 1e-12;

/// Cross entropy of softmax(x) against labeled points.
LossTerm loss_seg_labeled(const Matrix& x, const LabelSet& labels);

/// Cross entropy weighted by "has an optimized pseudo label"; identical to the
/// labeled form because unlabeled points carry zero weight.
LossTerm loss_seg_unlabeled(const Matrix& x, const LabelSet& optimized);

/// Binary cross entropy over both edge channels; edge points target (1, 1),
/// others (0, 0).
LossTerm loss_edge(const Matrix& e, const EdgeLabels& edges);

/// sum_i w_i sum_c (x_ic - mean_k x_{i_k c})^2 over the recorded superpoint samples;
/// w_i = 0 for unclustered points.
LossTerm loss_sp(const Matrix& x, const SampleTable& samples);
LossTerm loss_sp(const Matrix& x, const SuperpointPartition& sp, std::size_t k, std::uint64_t seed);

/// Per-term values and point counts. total = labeled terms + unlabeled_weight *
/// unlabeled terms; the weight is 1 except while the unlabeled branch is idle.
struct LossReport {
  double seg_l = 0, seg_u = 0, edge_l = 0, edge_u = 0, sp_l = 0, sp_u = 0, total = 0;
  double unlabeled_weight = 1.0;
  std::size_t n_seg_l = 0, n_seg_u = 0, n_edge_l = 0, n_edge_u = 0, n_sp_l = 0, n_sp_u = 0;

  /// One JSON object: raw sums plus per-point means for readability.
  std::string to_json() const;
};

LossReport total_loss(const LossTerm& seg_l, const LossTerm& seg_u, const LossTerm& edge_l, const LossTerm& edge_u,
                      const LossTerm& sp_l, const LossTerm& sp_u, double unlabeled_weight = 1.0);

}  // namespace spgseg
