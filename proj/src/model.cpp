#include "spgseg/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "spgseg/error.hpp"
#include "spgseg/rng.hpp"

namespace spgseg {

void ModelConfig::validate() const {
  require(hidden >= 1 && feature_dim >= 1 && edge_hidden >= 1, "model widths must be positive");
  require(num_classes >= 2, "model needs at least 2 classes");
  require(k_feat >= 1, "k_feat must be positive");
}

namespace {

struct Shape {
  std::size_t rows, cols;
};

template <typename Fn>
void for_each_shape(const ModelConfig& cfg, Fn&& fn) {
  const std::size_t h = cfg.hidden;
  const std::size_t f = cfg.feature_dim;
  const std::size_t c = cfg.num_classes;
  const std::size_t e = cfg.edge_hidden;
  fn(Shape{h, ModelConfig::kInputDim}, Shape{1, h});
  fn(Shape{f, 2 * h}, Shape{1, f});
  fn(Shape{c, f}, Shape{1, c});
  fn(Shape{e, c}, Shape{1, e});
  fn(Shape{2, e}, Shape{1, 2});
}

std::vector<Shape> flat_shapes(const ModelConfig& cfg) {
  std::vector<Shape> shapes;
  for_each_shape(cfg, [&](Shape w, Shape b) {
    shapes.push_back(w);
    shapes.push_back(b);
  });
  return shapes;
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double ev = std::exp(v);
  return ev / (1.0 + ev);
}

Matrix affine(const Matrix& in, const Matrix& w, const Matrix& b) {
  Matrix out = in * w.transpose();
  out.rowwise() += b.row(0);
  return out;
}

void check_columns(const Matrix& m, std::size_t cols, const char* what) {
  require(static_cast<std::size_t>(m.cols()) == cols,
          std::string(what) + " has " + std::to_string(m.cols()) + " channels, expected " + std::to_string(cols));
}

/// Mean of `values` rows over each point's neighbor list.
Matrix neighborhood_mean(const Matrix& values, const NeighborTable& neighbors) {
  Matrix out = Matrix::Zero(values.rows(), values.cols());
  const double inv = 1.0 / static_cast<double>(neighbors.k);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (PointId j : neighbors.row(static_cast<std::size_t>(i))) out.row(i) += values.row(j);
    out.row(i) *= inv;
  }
  return out;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  const auto shapes = flat_shapes(cfg);
  std::size_t i = 0;
  p.for_each([&](std::string_view, Matrix& m) {
    m = Matrix::Zero(static_cast<Eigen::Index>(shapes[i].rows), static_cast<Eigen::Index>(shapes[i].cols));
    ++i;
  });
  return p;
}

ModelParams ModelParams::glorot(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  std::mt19937_64 rng(splitmix64(seed));
  std::size_t i = 0;
  p.for_each([&](std::string_view, Matrix& m) {
    if (i++ % 2 == 1) return;  // biases stay zero
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  });
  return p;
}

void ModelParams::validate(const ModelConfig& cfg) const {
  cfg.validate();
  const auto shapes = flat_shapes(cfg);
  std::size_t i = 0;
  for_each([&](std::string_view name, const Matrix& m) {
    require(static_cast<std::size_t>(m.rows()) == shapes[i].rows && static_cast<std::size_t>(m.cols()) == shapes[i].cols,
            "parameter " + std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", expected " + std::to_string(shapes[i].rows) + "x" +
                std::to_string(shapes[i].cols));
    require(m.allFinite(), "parameter " + std::string(name) + " is not finite");
    ++i;
  });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](std::string_view, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
  bool same = true;
  std::vector<const Matrix*> mine;
  for_each([&](std::string_view, const Matrix& m) { mine.push_back(&m); });
  std::size_t i = 0;
  other.for_each([&](std::string_view, const Matrix& m) {
    const Matrix& a = *mine[i++];
    same = same && a.rows() == m.rows() && a.cols() == m.cols() && a == m;
  });
  return same;
}

SampleTable draw_superpoint_samples(const SuperpointPartition& sp, std::size_t k, std::uint64_t seed) {
  require(k >= 1, "sample count K must be at least 1");
  const std::size_t n = sp.num_points();
  SampleTable table{k, std::vector<PointId>(n * k), std::vector<std::uint8_t>(n, 0)};
  const std::uint64_t base = splitmix64(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<PointId>(i);
    if (!sp.is_clustered(id)) {
      std::fill_n(table.ids.begin() + static_cast<std::ptrdiff_t>(i * k), k, id);
      continue;
    }
    table.clustered[i] = 1;
    const auto& group = sp.group(static_cast<std::size_t>(sp.group_of(id)));
    const std::uint64_t point_stream = splitmix64(base ^ i);
    for (std::size_t j = 0; j < k; ++j) {
      table.ids[i * k + j] = group[bounded_index(splitmix64(point_stream ^ j), group.size())];
    }
  }
  return table;
}

Matrix network_input(const PointCloud& cloud) {
  const Vec3 center = cloud.centroid();
  Matrix in(static_cast<Eigen::Index>(cloud.size()), static_cast<Eigen::Index>(ModelConfig::kInputDim));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    in.row(r).head<3>() = (cloud.positions[i] - center).transpose();
    in.row(r).tail<3>() = cloud.colors[i].transpose();
  }
  return in;
}

FeatureMatrix extract_features(const PointCloud& cloud, const NeighborTable& neighbors, const ModelParams& params) {
  require(neighbors.num_points() == cloud.size(), "neighbor table does not match the cloud");
  check_columns(params.w1, ModelConfig::kInputDim, "extractor layer 1");
  require(params.w2.cols() == 2 * params.w1.rows(), "extractor layer 2 input width mismatch");
  const Matrix h1 = affine(network_input(cloud), params.w1, params.b1).cwiseMax(0.0);
  Matrix z(h1.rows(), 2 * h1.cols());
  z << h1, neighborhood_mean(h1, neighbors);
  return affine(z, params.w2, params.b2).cwiseMax(0.0);
}

FeatureMatrix extract_features(const PointCloud& cloud, const SpatialIndex& index, const ModelParams& params,
                               std::size_t k_feat) {
  return extract_features(cloud, knn_table(index, k_feat), params);
}

FeatureMatrix spfa(const FeatureMatrix& features, const SampleTable& samples) {
  require(samples.num_points() == static_cast<std::size_t>(features.rows()), "sample table does not match features");
  FeatureMatrix g = features;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (!samples.clustered[static_cast<std::size_t>(i)]) continue;
    for (PointId j : samples.row(static_cast<std::size_t>(i))) g.row(i) += features.row(j);
    g.row(i) *= 0.5;
  }
  return g;
}

FeatureMatrix spfa(const FeatureMatrix& features, const SuperpointPartition& sp, std::size_t k, std::uint64_t seed) {
  require(k >= 1, "SPFA sample count K must be at least 1");
  return spfa(features, draw_superpoint_samples(sp, k, seed));
}

FeatureMatrix spfa_backward(const FeatureMatrix& grad_out, const SampleTable& samples) {
  FeatureMatrix grad = FeatureMatrix::Zero(grad_out.rows(), grad_out.cols());
  for (Eigen::Index i = 0; i < grad_out.rows(); ++i) {
    if (!samples.clustered[static_cast<std::size_t>(i)]) {
      grad.row(i) += grad_out.row(i);
      continue;
    }
    const auto half = 0.5 * grad_out.row(i);
    grad.row(i) += half;
    for (PointId j : samples.row(static_cast<std::size_t>(i))) grad.row(j) += half;
  }
  return grad;
}

FeatureMatrix classify(const FeatureMatrix& g, const ModelParams& params) {
  check_columns(g, static_cast<std::size_t>(params.wc.cols()), "classifier input");
  return affine(g, params.wc, params.bc);
}

FeatureMatrix edge_head(const FeatureMatrix& x, const ModelParams& params) {
  check_columns(x, static_cast<std::size_t>(params.we1.cols()), "edge head input");
  const Matrix a = affine(x, params.we1, params.be1);
  const Matrix h = a.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
  return affine(h, params.we2, params.be2).unaryExpr([](double v) { return sigmoid(v); });
}

ForwardPass forward(const PointCloud& cloud, const NeighborTable& neighbors, const ModelParams& params,
                    const SampleTable* samples) {
  require(neighbors.num_points() == cloud.size(), "neighbor table does not match the cloud");
  check_columns(params.w1, ModelConfig::kInputDim, "extractor layer 1");
  ForwardPass p;
  p.neighbors = neighbors;
  p.input = network_input(cloud);
  p.a1 = affine(p.input, params.w1, params.b1);
  p.h1 = p.a1.cwiseMax(0.0);
  p.mean1 = neighborhood_mean(p.h1, neighbors);
  Matrix z(p.h1.rows(), 2 * p.h1.cols());
  z << p.h1, p.mean1;
  p.a2 = affine(z, params.w2, params.b2);
  p.f = p.a2.cwiseMax(0.0);
  if (samples != nullptr) {
    p.samples = *samples;
    p.used_spfa = true;
    p.g = spfa(p.f, p.samples);
  } else {
    p.g = p.f;
  }
  p.x = classify(p.g, params);
  p.ae1 = affine(p.x, params.we1, params.be1);
  p.he1 = p.ae1.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
  p.ae2 = affine(p.he1, params.we2, params.be2);
  p.e = p.ae2.unaryExpr([](double v) { return sigmoid(v); });
  p.recorded = true;
  return p;
}

ModelParams backward(const ForwardPass& pass, const ModelParams& params, const Matrix& grad_x, const Matrix& grad_e) {
  require(pass.recorded, "backward called without a recorded forward pass");
  require(grad_x.rows() == pass.x.rows() && grad_x.cols() == pass.x.cols(), "logit gradient shape mismatch");
  require(grad_e.rows() == pass.e.rows() && grad_e.cols() == pass.e.cols(), "edge gradient shape mismatch");
  ModelParams grads;

  // Edge head.
  const Matrix d_ae2 = grad_e.cwiseProduct(pass.e.cwiseProduct((1.0 - pass.e.array()).matrix()));
  grads.we2 = d_ae2.transpose() * pass.he1;
  grads.be2 = d_ae2.colwise().sum();
  const Matrix d_he1 = d_ae2 * params.we2;
  const Matrix d_ae1 =
      d_he1.cwiseProduct(pass.ae1.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }));
  grads.we1 = d_ae1.transpose() * pass.x;
  grads.be1 = d_ae1.colwise().sum();

  // Classifier; logits receive both the segmentation/consistency and edge gradients.
  const Matrix d_x = grad_x + d_ae1 * params.we1;
  grads.wc = d_x.transpose() * pass.g;
  grads.bc = d_x.colwise().sum();
  const Matrix d_g = d_x * params.wc;
  const Matrix d_f = pass.used_spfa ? spfa_backward(d_g, pass.samples) : d_g;

  // Extractor layer 2.
  const Matrix d_a2 = d_f.cwiseProduct(pass.a2.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  const Eigen::Index h = pass.h1.cols();
  Matrix z(pass.h1.rows(), 2 * h);
  z << pass.h1, pass.mean1;
  grads.w2 = d_a2.transpose() * z;
  grads.b2 = d_a2.colwise().sum();
  const Matrix d_z = d_a2 * params.w2;

  // Neighborhood mean scatters back to every neighbor.
  Matrix d_h1 = d_z.leftCols(h);
  const double inv = 1.0 / static_cast<double>(pass.neighbors.k);
  for (Eigen::Index i = 0; i < d_z.rows(); ++i) {
    const auto d_mean = d_z.row(i).rightCols(h) * inv;
    for (PointId j : pass.neighbors.row(static_cast<std::size_t>(i))) d_h1.row(j) += d_mean;
  }

  // Extractor layer 1.
  const Matrix d_a1 = d_h1.cwiseProduct(pass.a1.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  grads.w1 = d_a1.transpose() * pass.input;
  grads.b1 = d_a1.colwise().sum();
  return grads;
}

std::vector<std::int32_t> argmax_rows(const Matrix& logits) {
  std::vector<std::int32_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace spgseg
