#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spgseg/adam.hpp"
#include "spgseg/labels.hpp"
#include "spgseg/losses.hpp"
#include "spgseg/metrics.hpp"
#include "spgseg/model.hpp"
#include "spgseg/scene_cache.hpp"
#include "spgseg/synthetic.hpp"

namespace spgseg {

/// Which components of the method are active.
struct MethodFlags {
  bool spfa = true;           // superpoint feature aggregation before the classifier
  bool pseudo_labels = true;  // unlabeled branch trained on refreshed pseudo labels
  bool plo = true;            // superpoint vote on pseudo labels
  bool edge = true;           // edge head and its loss
  bool sp_loss = true;        // superpoint consistency loss

  bool operator==(const MethodFlags&) const = default;
};

struct TrainConfig {
  std::size_t epochs_total = 40;
  std::size_t epochs_labeled_only = 20;
  double learning_rate = 0.01;
  /// Per-epoch multiplicative decay; 1 keeps the rate constant.
  double lr_decay = 1.0;
  /// Points per training chunk (one labeled and one unlabeled chunk per step).
  std::size_t chunk_size = 4096;
  /// 0 = max(#labeled, #unlabeled) scenes, regardless of the active method.
  std::size_t steps_per_epoch = 0;
  AdamConfig adam;
  Ratio t_plo{4, 5};
  GeometryConfig geometry;
  ModelConfig model;
  /// Superpoint samples per point for aggregation and the consistency loss.
  std::size_t samples_k = 8;
  std::uint64_t seed = 1;
  MethodFlags method;

  void validate() const;
};

/// Labeled scenes carry truth, unlabeled scenes are used without it, and
/// evaluation scenes are held out.
struct SceneSet {
  std::vector<Scene> labeled;
  std::vector<Scene> unlabeled;
  std::vector<Scene> evaluation;

  /// Distinct ids across all three lists, truth present where required and
  /// consistent with `num_classes`.
  void validate(std::size_t num_classes) const;
};

struct StepLog {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // 0-based within the epoch
  double learning_rate = 0.0;
  LossReport losses;

  std::string to_json() const;
};

struct TrainResult {
  ModelParams params;
  std::vector<StepLog> log;
  /// Epochs at whose start pseudo labels were refreshed.
  std::vector<std::size_t> refresh_epochs;
};

/// Called after every step; lets callers stream the log.
using StepObserver = std::function<void(const StepLog&)>;

TrainResult train(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache,
                  const StepObserver& observer = {});

/// Full-scene class prediction, aggregation enabled iff `use_spfa`.
std::vector<std::int32_t> predict_classes(const ModelParams& params, const PointCloud& cloud,
                                          const SceneGeometry& geometry, const ModelConfig& model, bool use_spfa,
                                          std::size_t samples_k, std::uint64_t sample_seed);

/// Pseudo labels for one unlabeled scene: every point carries its predicted class.
LabelSet predict_pseudo_labels(const ModelParams& params, const PointCloud& cloud, const SceneGeometry& geometry,
                               const ModelConfig& model, bool use_spfa, std::size_t samples_k,
                               std::uint64_t sample_seed);

/// Metrics over all evaluation scenes (parallel across scenes, ordered reduction).
MetricsReport evaluate(const ModelParams& params, const TrainConfig& cfg, const std::vector<Scene>& scenes,
                       SceneCache& cache);

struct Variant {
  std::string name;
  MethodFlags flags;
};

/// The six stacked configurations, from the labeled-only baseline to the full method.
std::vector<Variant> ablation_variants();

struct VariantResult {
  std::string name;
  MethodFlags flags;
  MetricsReport metrics;
};

/// Runs every variant with `cfg` except for its method flags.
std::vector<VariantResult> ablation_suite(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache,
                                          const std::vector<Variant>& variants = ablation_variants());

struct SweepRow {
  Ratio t_plo;
  MetricsReport metrics;
};

inline const std::array<Ratio, 5> kPloSweep = {Ratio{7, 10}, Ratio{3, 4}, Ratio{4, 5}, Ratio{17, 20}, Ratio{9, 10}};

/// Full method trained once per threshold.
std::vector<SweepRow> sweep_tplo(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache,
                                 std::span<const Ratio> values = kPloSweep);

/// `name,miou,macc,oa` rows with fixed decimals.
std::string metrics_csv(const std::vector<VariantResult>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string metrics_table(const std::vector<VariantResult>& rows);

/// Scenes from random_room_spec: `labeled` + `unlabeled` training scenes and
/// `evaluation` held-out scenes, all derived from `seed`.
struct BenchmarkConfig {
  std::size_t scenes = 20;
  std::size_t labeled = 2;
  std::size_t evaluation = 6;
  std::size_t target_points = 6000;
  std::uint64_t seed = 2024;

  void validate() const;
};

SceneSet make_benchmark(const BenchmarkConfig& cfg);

}  // namespace spgseg
