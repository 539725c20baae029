#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"
#include "spgseg/spatial_index.hpp"
#include "spgseg/types.hpp"

namespace spgseg {

/// Network widths. The extractor is a small stand-in for a U-Net backbone:
/// per-point affine + ReLU, concatenation with the k_feat-neighborhood mean
/// of that layer, then a second affine + ReLU producing feature_dim channels.
struct ModelConfig {
  static constexpr std::size_t kInputDim = 6;  // centered xyz + rgb

  std::size_t hidden = 32;
  std::size_t feature_dim = 32;  // C_h
  std::size_t num_classes = 5;   // C
  std::size_t edge_hidden = 6;
  std::size_t k_feat = 8;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Every trainable tensor. Shared by the labeled and unlabeled branches.
/// Weights are (out x in); biases are (1 x out).
struct ModelParams {
  Matrix w1, b1;    // extractor layer 1
  Matrix w2, b2;    // extractor layer 2, input = [h1, neighborhood mean of h1]
  Matrix wc, bc;    // final FC: feature_dim -> num_classes
  Matrix we1, be1;  // edge head FC1: num_classes -> edge_hidden, leaky ReLU
  Matrix we2, be2;  // edge head FC2: edge_hidden -> 2, sigmoid

  static ModelParams zeros(const ModelConfig& cfg);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
  static ModelParams glorot(const ModelConfig& cfg, std::uint64_t seed);

  /// Throws InputError unless shapes match `cfg` and entries are finite.
  void validate(const ModelConfig& cfg) const;
  std::size_t parameter_count() const;

  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(std::string_view("w1"), w1);
    fn(std::string_view("b1"), b1);
    fn(std::string_view("w2"), w2);
    fn(std::string_view("b2"), b2);
    fn(std::string_view("wc"), wc);
    fn(std::string_view("bc"), bc);
    fn(std::string_view("we1"), we1);
    fn(std::string_view("be1"), be1);
    fn(std::string_view("we2"), we2);
    fn(std::string_view("be2"), be2);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](std::string_view name, Matrix& m) { fn(name, static_cast<const Matrix&>(m)); });
  }

  bool operator==(const ModelParams&) const;
};

inline constexpr double kLeakySlope = 0.01;

/// K superpoint-mates drawn with replacement for every clustered point.
/// Row i is only meaningful where `clustered[i]` is set.
struct SampleTable {
  std::size_t k = 0;
  std::vector<PointId> ids;
  std::vector<std::uint8_t> clustered;

  std::size_t num_points() const { return clustered.size(); }
  std::span<const PointId> row(std::size_t i) const { return {ids.data() + i * k, k}; }
};

/// Draw j of point i is group[bounded_index(splitmix64(splitmix64(splitmix64(seed) ^ i) ^ j), |group|)].
SampleTable draw_superpoint_samples(const SuperpointPartition& sp, std::size_t k, std::uint64_t seed);

/// Network input rows: [xyz - centroid, rgb].
Matrix network_input(const PointCloud& cloud);

FeatureMatrix extract_features(const PointCloud& cloud, const NeighborTable& neighbors, const ModelParams& params);
FeatureMatrix extract_features(const PointCloud& cloud, const SpatialIndex& index, const ModelParams& params,
                               std::size_t k_feat);

/// Superpoint feature aggregation: g_i = (f_i + sum_k f_{i_k}) / 2 for
/// clustered points (a (K+1)/2 scale for constant groups, taken literally),
/// g_i = f_i for unclustered points.
FeatureMatrix spfa(const FeatureMatrix& features, const SampleTable& samples);
FeatureMatrix spfa(const FeatureMatrix& features, const SuperpointPartition& sp, std::size_t k, std::uint64_t seed);
/// Adjoint of spfa: gradient w.r.t. the features given a gradient w.r.t. its output.
FeatureMatrix spfa_backward(const FeatureMatrix& grad_out, const SampleTable& samples);

FeatureMatrix classify(const FeatureMatrix& g, const ModelParams& params);

/// e_i = sigmoid(FC2(leaky_relu(FC1(x_i)))), two channels in (0, 1).
FeatureMatrix edge_head(const FeatureMatrix& x, const ModelParams& params);

/// Every intermediate of one forward pass, as needed by backward().
struct ForwardPass {
  bool recorded = false;
  bool used_spfa = false;
  NeighborTable neighbors;
  SampleTable samples;
  Matrix input, a1, h1, mean1, a2, f, g, x, ae1, he1, ae2, e;
};

/// Full forward pass. `samples` == nullptr disables aggregation (G = F).
ForwardPass forward(const PointCloud& cloud, const NeighborTable& neighbors, const ModelParams& params,
                    const SampleTable* samples);

/// Reverse-mode gradients of a scalar loss for every parameter, given the
/// loss gradients w.r.t. the logits X and the edge outputs E.
ModelParams backward(const ForwardPass& pass, const ModelParams& params, const Matrix& grad_x, const Matrix& grad_e);

/// Row-wise argmax, ties to the smallest class.
std::vector<std::int32_t> argmax_rows(const Matrix& logits);

}  // namespace spgseg
