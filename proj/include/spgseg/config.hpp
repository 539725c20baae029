#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "spgseg/trainer.hpp"

namespace spgseg {

/// Scene sources for train/eval/ablate. When every file list is empty the
/// synthetic benchmark described by `synthetic` is generated instead.
struct DataConfig {
  BenchmarkConfig synthetic;
  std::vector<std::filesystem::path> labeled_files;
  std::vector<std::filesystem::path> unlabeled_files;
  std::vector<std::filesystem::path> evaluation_files;

  bool uses_files() const { return !labeled_files.empty() || !unlabeled_files.empty() || !evaluation_files.empty(); }
};

struct PathsConfig {
  std::filesystem::path output_dir = ".";
  std::string log_file = "train_log.jsonl";
  std::string metrics_file = "metrics.csv";
  std::string params_file = "params.json";
};

/// Everything a CLI run needs. JSON layout:
///
///   { "growing":  { t_ang_deg, t_cvt, t_clr, t_merge, k_grow, min_cluster },
///     "geometry": { k_normal, k_edge },
///     "model":    { hidden, feature_dim, num_classes, edge_hidden, k_feat, samples_k },
///     "train":    { epochs_total, epochs_labeled_only, learning_rate, lr_decay, chunk_size,
///                   steps_per_epoch, beta1, beta2, epsilon, t_plo, seed,
///                   method: { spfa, pseudo_labels, plo, edge, sp_loss } },
///     "data":     { scenes, labeled, evaluation, target_points, seed,
///                   labeled_files, unlabeled_files, evaluation_files },
///     "paths":    { output_dir, log_file, metrics_file, params_file } }
///
/// Every key is optional; unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  DataConfig data;
  PathsConfig paths;

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);
RunConfig read_run_config(const std::filesystem::path& path);

/// Loads the configured scenes (files or synthetic benchmark).
SceneSet load_scenes(const RunConfig& cfg);

}  // namespace spgseg
