#include "spgseg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "spgseg/error.hpp"

namespace spgseg {

namespace {

LossTerm cross_entropy(const Matrix& x, const LabelSet& labels) {
  require(static_cast<std::size_t>(x.rows()) == labels.size(), "logits and labels cover different point counts");
  require(static_cast<std::size_t>(x.cols()) == labels.num_classes, "logit width differs from the class count");
  labels.validate();
  LossTerm term;
  term.grad = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const std::int32_t target = labels.class_of[static_cast<std::size_t>(i)];
    if (target == kNoLabel) continue;
    const double top = x.row(i).maxCoeff();
    const auto shifted = (x.row(i).array() - top).exp();
    const double denom = shifted.sum();
    term.value += std::log(denom) - (x(i, target) - top);
    term.grad.row(i) = shifted / denom;
    term.grad(i, target) -= 1.0;
    ++term.count;
  }
  term.empty = term.count == 0;
  return term;
}

}  // namespace

LossTerm loss_seg_labeled(const Matrix& x, const LabelSet& labels) { return cross_entropy(x, labels); }

LossTerm loss_seg_unlabeled(const Matrix& x, const LabelSet& optimized) { return cross_entropy(x, optimized); }

LossTerm loss_edge(const Matrix& e, const EdgeLabels& edges) {
  require(static_cast<std::size_t>(e.rows()) == edges.size(), "edge outputs and labels cover different point counts");
  require(e.cols() == 2, "edge outputs must have 2 channels");
  LossTerm term;
  term.grad = Matrix::Zero(e.rows(), 2);
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    const double target = edges.is_edge[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double p = e(i, c);
      if (!std::isfinite(p)) throw NumericalError("edge output is not finite at point " + std::to_string(i));
      require(p >= 0.0 && p <= 1.0, "edge output outside [0, 1] at point " + std::to_string(i));
      const double pos = std::max(p, kLogFloor);
      const double neg = std::max(1.0 - p, kLogFloor);
      term.value += -target * std::log(pos) - (1.0 - target) * std::log(neg);
      // Derivative of the clamped expression; zero where the floor is active.
      double g = 0.0;
      if (p > kLogFloor) g -= target / p;
      if (1.0 - p > kLogFloor) g += (1.0 - target) / (1.0 - p);
      term.grad(i, c) = g;
    }
  }
  term.count = static_cast<std::size_t>(e.rows());
  term.empty = term.count == 0;
  return term;
}

LossTerm loss_sp(const Matrix& x, const SampleTable& samples) {
  require(samples.num_points() == static_cast<std::size_t>(x.rows()), "sample table does not match logits");
  require(samples.k >= 1, "sample count K must be at least 1");
  LossTerm term;
  term.grad = Matrix::Zero(x.rows(), x.cols());
  const double inv_k = 1.0 / static_cast<double>(samples.k);
  Eigen::RowVectorXd mean(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!samples.clustered[static_cast<std::size_t>(i)]) continue;
    mean.setZero();
    for (PointId j : samples.row(static_cast<std::size_t>(i))) mean += x.row(j);
    mean *= inv_k;
    const Eigen::RowVectorXd r = x.row(i) - mean;
    term.value += r.squaredNorm();
    term.grad.row(i) += 2.0 * r;
    const Eigen::RowVectorXd spread = -2.0 * inv_k * r;
    for (PointId j : samples.row(static_cast<std::size_t>(i))) term.grad.row(j) += spread;
    ++term.count;
  }
  term.empty = term.count == 0;
  return term;
}

LossTerm loss_sp(const Matrix& x, const SuperpointPartition& sp, std::size_t k, std::uint64_t seed) {
  require(k >= 1, "sample count K must be at least 1");
  return loss_sp(x, draw_superpoint_samples(sp, k, seed));
}

LossReport total_loss(const LossTerm& seg_l, const LossTerm& seg_u, const LossTerm& edge_l, const LossTerm& edge_u,
                      const LossTerm& sp_l, const LossTerm& sp_u, double unlabeled_weight) {
  LossReport r;
  r.unlabeled_weight = unlabeled_weight;
  r.seg_l = seg_l.value;
  r.seg_u = seg_u.value;
  r.edge_l = edge_l.value;
  r.edge_u = edge_u.value;
  r.sp_l = sp_l.value;
  r.sp_u = sp_u.value;
  r.n_seg_l = seg_l.count;
  r.n_seg_u = seg_u.count;
  r.n_edge_l = edge_l.count;
  r.n_edge_u = edge_u.count;
  r.n_sp_l = sp_l.count;
  r.n_sp_u = sp_u.count;
  r.total = (r.seg_l + r.edge_l + r.sp_l) + unlabeled_weight * (r.seg_u + r.edge_u + r.sp_u);
  return r;
}

std::string LossReport::to_json() const {
  auto mean = [](double v, std::size_t n) { return n == 0 ? 0.0 : v / static_cast<double>(n); };
  nlohmann::ordered_json j;
  j["seg_l"] = seg_l;
  j["seg_u"] = seg_u;
  j["edge_l"] = edge_l;
  j["edge_u"] = edge_u;
  j["sp_l"] = sp_l;
  j["sp_u"] = sp_u;
  j["total"] = total;
  j["unlabeled_weight"] = unlabeled_weight;
  j["counts"] = {{"seg_l", n_seg_l}, {"seg_u", n_seg_u}, {"edge_l", n_edge_l},
                 {"edge_u", n_edge_u}, {"sp_l", n_sp_l},   {"sp_u", n_sp_u}};
  j["per_point"] = {{"seg_l", mean(seg_l, n_seg_l)},    {"seg_u", mean(seg_u, n_seg_u)},
                    {"edge_l", mean(edge_l, n_edge_l)}, {"edge_u", mean(edge_u, n_edge_u)},
                    {"sp_l", mean(sp_l, n_sp_l)},       {"sp_u", mean(sp_u, n_sp_u)}};
  return j.dump();
}

}  // namespace spgseg
