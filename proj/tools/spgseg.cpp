// spgseg: command-line front end for superpoint generation, label
// optimization, training and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spgseg/config.hpp"
#include "spgseg/error.hpp"
#include "spgseg/io.hpp"
#include "spgseg/parallel.hpp"
#include "spgseg/synthetic.hpp"
#include "spgseg/trainer.hpp"

namespace fs = std::filesystem;
using namespace spgseg;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Growing overrides shared by the geometry subcommands.
struct GrowingFlags {
  std::optional<fs::path> config;
  std::optional<double> t_ang_deg, t_cvt, t_clr, t_merge;
  std::optional<std::size_t> k_grow, min_cluster;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "Run config JSON supplying growing/geometry settings");
    app->add_option("--t-ang", t_ang_deg, "Normal angle threshold in degrees");
    app->add_option("--t-cvt", t_cvt, "Curvature threshold for seeds");
    app->add_option("--t-clr", t_clr, "Color distance threshold (0-255 units)");
    app->add_option("--t-merge", t_merge, "Color cluster merge threshold (0-255 units)");
    app->add_option("--k-grow", k_grow, "Neighborhood size for growing (includes the point)");
    app->add_option("--min-cluster", min_cluster, "Smallest kept cluster");
  }

  RunConfig resolve() const {
    RunConfig cfg = config ? read_run_config(*config) : RunConfig{};
    GrowingConfig& g = cfg.train.geometry.growing;
    if (t_ang_deg) g.t_ang = *t_ang_deg * std::numbers::pi / 180.0;
    if (t_cvt) g.t_cvt = *t_cvt;
    if (t_clr) g.t_clr = *t_clr;
    if (t_merge) g.t_merge = *t_merge;
    if (k_grow) g.k_grow = *k_grow;
    if (min_cluster) g.min_cluster = *min_cluster;
    cfg.train.geometry.validate();
    return cfg;
  }
};

SceneSpec preset(const std::string& name, std::uint64_t seed) {
  if (name == "room") return random_room_spec(seed);
  if (name == "floor") return floor_only_spec();
  if (name == "board") return floor_with_board_spec();
  if (name == "wall") return floor_and_wall_spec();
  if (name == "beam") return wall_with_beam_spec();
  throw InputError("unknown preset '" + name + "'");
}

RunConfig run_config(const std::optional<fs::path>& path, std::optional<std::uint64_t> seed,
                     std::optional<fs::path> out_dir) {
  RunConfig cfg = path ? read_run_config(*path) : RunConfig{};
  if (seed) cfg.train.seed = *seed;
  if (out_dir) cfg.paths.output_dir = *out_dir;
  cfg.validate();
  return cfg;
}

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.paths.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.paths.output_dir.string());
  return cfg.paths.output_dir / name;
}

std::size_t class_count(const std::optional<std::size_t>& flag, const CloudFile& cf) {
  if (flag) return *flag;
  return cf.labels ? cf.labels->num_classes : kRoomClasses;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpoint-guided semi-supervised point cloud segmentation"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "Upper bound on worker threads")->check(CLI::Range(1, 256));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic scene");
  fs::path synth_out;
  std::string synth_preset = "room";
  std::uint64_t synth_seed = 1;
  std::size_t synth_points = 6000;
  synth->add_option("--out", synth_out, "Output cloud file")->required();
  synth->add_option("--preset", synth_preset, "room | floor | board | wall | beam");
  synth->add_option("--seed", synth_seed, "Scene seed");
  synth->add_option("--points", synth_points, "Approximate point count")->check(CLI::Range(std::size_t{5000}, std::size_t{50000}));

  // superpoints
  auto* sp_cmd = app.add_subcommand("superpoints", "Run superpoint generation on a cloud");
  fs::path sp_in, sp_out;
  std::optional<fs::path> sp_ply;
  std::string sp_which = "merged";
  GrowingFlags sp_flags;
  sp_cmd->add_option("--in", sp_in, "Input cloud file")->required();
  sp_cmd->add_option("--out", sp_out, "Output partition JSON")->required();
  sp_cmd->add_option("--ply", sp_ply, "Also write a superpoint-colored PLY");
  sp_cmd->add_option("--which", sp_which, "merged | geometric | color");
  sp_flags.attach(sp_cmd);

  // edges
  auto* edges_cmd = app.add_subcommand("edges", "Compute edge labels (one 0/1 per point)");
  fs::path edges_in, edges_out;
  std::optional<fs::path> edges_ply;
  GrowingFlags edges_flags;
  edges_cmd->add_option("--in", edges_in, "Input cloud file")->required();
  edges_cmd->add_option("--out", edges_out, "Output edge file")->required();
  edges_cmd->add_option("--ply", edges_ply, "Also write an edge-colored PLY");
  edges_flags.attach(edges_cmd);

  // optimize-labels
  auto* plo_cmd = app.add_subcommand("optimize-labels", "Superpoint vote over a predicted-label file");
  fs::path plo_in, plo_labels, plo_out;
  std::optional<fs::path> plo_partition;
  double plo_t = 0.8;
  std::optional<std::size_t> plo_classes;
  GrowingFlags plo_flags;
  plo_cmd->add_option("--in", plo_in, "Input cloud file")->required();
  plo_cmd->add_option("--labels", plo_labels, "Predicted labels, one class per line")->required();
  plo_cmd->add_option("--out", plo_out, "Optimized labels output")->required();
  plo_cmd->add_option("--partition", plo_partition, "Precomputed partition JSON (else generated)");
  plo_cmd->add_option("--t-plo", plo_t, "Vote threshold in (0, 1)");
  plo_cmd->add_option("--classes", plo_classes, "Class count");
  plo_flags.attach(plo_cmd);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train on the configured scenes and evaluate");
  std::optional<fs::path> train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  bool dump_config = false;
  train_cmd->add_option("--config", train_config, "Run config JSON");
  train_cmd->add_option("--seed", train_seed, "Training seed (overrides the config)");
  train_cmd->add_option("--out-dir", train_out, "Output directory (overrides the config)");
  train_cmd->add_flag("--dump-config", dump_config, "Print the resolved config and exit");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the evaluation scenes");
  std::optional<fs::path> eval_config, eval_out;
  std::optional<std::uint64_t> eval_seed;
  fs::path eval_params;
  eval_cmd->add_option("--config", eval_config, "Run config JSON");
  eval_cmd->add_option("--seed", eval_seed, "Seed of the training run (drives superpoint sampling)");
  eval_cmd->add_option("--params", eval_params, "Checkpoint JSON")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics CSV (default: stdout)");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate the six stacked variants");
  std::optional<fs::path> ablate_config, ablate_out;
  std::optional<std::uint64_t> ablate_seed;
  ablate_cmd->add_option("--config", ablate_config, "Run config JSON");
  ablate_cmd->add_option("--seed", ablate_seed, "Training seed (overrides the config)");
  ablate_cmd->add_option("--out", ablate_out, "Metrics CSV");

  // export-ply
  auto* ply_cmd = app.add_subcommand("export-ply", "Write a colored PLY for inspection");
  fs::path ply_in, ply_out;
  std::string ply_coloring = "superpoint";
  std::optional<fs::path> ply_params, ply_labels, ply_run_config;
  std::optional<std::size_t> ply_classes;
  ply_cmd->add_option("--in", ply_in, "Input cloud file")->required();
  ply_cmd->add_option("--out", ply_out, "Output PLY")->required();
  ply_cmd->add_option("--coloring", ply_coloring, "superpoint | label | edge | prediction");
  ply_cmd->add_option("--params", ply_params, "Checkpoint for prediction coloring");
  ply_cmd->add_option("--labels", ply_labels, "Label file for label coloring (default: the cloud's labels)");
  ply_cmd->add_option("--config", ply_run_config, "Run config JSON");
  ply_cmd->add_option("--classes", ply_classes, "Class count");

  // sweep-tplo
  auto* sweep_cmd = app.add_subcommand("sweep-tplo", "Full method over t_plo in {0.70, 0.75, 0.80, 0.85, 0.90}");
  std::optional<fs::path> sweep_config, sweep_out;
  std::optional<std::uint64_t> sweep_seed;
  sweep_cmd->add_option("--config", sweep_config, "Run config JSON");
  sweep_cmd->add_option("--seed", sweep_seed, "Training seed (overrides the config)");
  sweep_cmd->add_option("--out", sweep_out, "Sweep CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  set_max_threads(threads);

  try {
    if (synth->parsed()) {
      SceneSpec spec = preset(synth_preset, synth_seed);
      spec.target_points = synth_points;
      const Scene scene = generate_synthetic_scene(synth_seed, spec);
      write_cloud(synth_out, scene.cloud, &*scene.truth);
      std::cout << "wrote " << scene.cloud.size() << " points to " << synth_out.string() << '\n';
    } else if (sp_cmd->parsed()) {
      const RunConfig cfg = sp_flags.resolve();
      const CloudFile cf = read_cloud(sp_in);
      const SceneGeometry geo = compute_scene_geometry(cf.cloud, cfg.train.geometry);
      const SuperpointPartition* sp = &geo.merged;
      if (sp_which == "geometric") {
        sp = &geo.geometric;
      } else if (sp_which == "color") {
        sp = &geo.color;
      } else if (sp_which != "merged") {
        throw CLI::ValidationError("--which", "expected merged, geometric or color");
      }
      write_text_atomic(sp_out, partition_to_json(*sp, content_hash(cf.cloud)).dump() + "\n");
      if (sp_ply) write_ply(*sp_ply, cf.cloud, superpoint_coloring(*sp));
      std::cout << sp->num_groups() << " superpoints, " << sp->unclustered().size() << " unclustered points\n";
    } else if (edges_cmd->parsed()) {
      const RunConfig cfg = edges_flags.resolve();
      const CloudFile cf = read_cloud(edges_in);
      const SceneGeometry geo = compute_scene_geometry(cf.cloud, cfg.train.geometry);
      std::string text;
      for (auto e : geo.edges.is_edge) text += e ? "1\n" : "0\n";
      write_text_atomic(edges_out, text);
      if (edges_ply) write_ply(*edges_ply, cf.cloud, edge_coloring(geo.edges));
      std::cout << geo.edges.edge_count() << " edge points of " << cf.cloud.size() << '\n';
    } else if (plo_cmd->parsed()) {
      const RunConfig cfg = plo_flags.resolve();
      const CloudFile cf = read_cloud(plo_in);
      const std::size_t c = class_count(plo_classes, cf);
      std::ifstream in(plo_labels);
      if (!in) throw IoError("cannot open " + plo_labels.string());
      const LabelSet predicted = parse_labels(in, plo_labels.string(), c);
      require(predicted.size() == cf.cloud.size(), "label file has " + std::to_string(predicted.size()) +
                                                       " entries, cloud has " + std::to_string(cf.cloud.size()));
      SuperpointPartition sp;
      if (plo_partition) {
        PartitionFile pf = partition_from_json(nlohmann::json::parse(read_text(*plo_partition)));
        require(pf.content_hash == content_hash(cf.cloud), "partition was computed for a different cloud");
        sp = std::move(pf.partition);
      } else {
        sp = compute_scene_geometry(cf.cloud, cfg.train.geometry).merged;
      }
      require(plo_t > 0.0 && plo_t < 1.0, "--t-plo must lie strictly between 0 and 1");
      const LabelSet optimized = optimize_pseudo_labels(sp, predicted, Ratio::from_double(plo_t));
      write_text_atomic(plo_out, format_labels(optimized));
      std::cout << optimized.labeled_count() << " of " << optimized.size() << " points keep a label\n";
    } else if (train_cmd->parsed()) {
      const RunConfig cfg = run_config(train_config, train_seed, train_out);
      if (dump_config) {
        std::cout << run_config_to_json(cfg).dump(2) << '\n';
        return kOk;
      }
      const SceneSet scenes = load_scenes(cfg);
      SceneCache cache = SceneCache::from_environment();
      std::string log;
      const TrainResult result = train(cfg.train, scenes, cache, [&](const StepLog& s) { log += s.to_json() + '\n'; });
      write_text_atomic(output_path(cfg, cfg.paths.log_file), log);
      write_text_atomic(output_path(cfg, cfg.paths.params_file),
                        params_to_json(result.params, cfg.train.model).dump() + "\n");
      const MetricsReport m = evaluate(result.params, cfg.train, scenes.evaluation, cache);
      const std::vector<VariantResult> rows = {{"train", cfg.train.method, m}};
      write_text_atomic(output_path(cfg, cfg.paths.metrics_file), metrics_csv(rows));
      std::cout << metrics_table(rows);
    } else if (eval_cmd->parsed()) {
      const RunConfig cfg = run_config(eval_config, eval_seed, std::nullopt);
      const ModelParams params =
          params_from_json(nlohmann::json::parse(read_text(eval_params)), cfg.train.model);
      const SceneSet scenes = load_scenes(cfg);
      SceneCache cache = SceneCache::from_environment();
      const MetricsReport m = evaluate(params, cfg.train, scenes.evaluation, cache);
      const std::string csv = metrics_csv({{"eval", cfg.train.method, m}});
      if (eval_out) {
        write_text_atomic(*eval_out, csv);
      } else {
        std::cout << csv;
      }
    } else if (ablate_cmd->parsed()) {
      const RunConfig cfg = run_config(ablate_config, ablate_seed, std::nullopt);
      const SceneSet scenes = load_scenes(cfg);
      SceneCache cache = SceneCache::from_environment();
      const auto rows = ablation_suite(cfg.train, scenes, cache);
      if (ablate_out) write_text_atomic(*ablate_out, metrics_csv(rows));
      std::cout << metrics_table(rows);
    } else if (ply_cmd->parsed()) {
      const RunConfig cfg = ply_run_config ? read_run_config(*ply_run_config) : RunConfig{};
      const CloudFile cf = read_cloud(ply_in);
      std::vector<Rgb8> colors;
      if (ply_coloring == "superpoint" || ply_coloring == "edge") {
        const SceneGeometry geo = compute_scene_geometry(cf.cloud, cfg.train.geometry);
        colors = ply_coloring == "edge" ? edge_coloring(geo.edges) : superpoint_coloring(geo.merged);
      } else if (ply_coloring == "label") {
        if (ply_labels) {
          std::ifstream in(*ply_labels);
          if (!in) throw IoError("cannot open " + ply_labels->string());
          const LabelSet labels = parse_labels(in, ply_labels->string(), class_count(ply_classes, cf));
          require(labels.size() == cf.cloud.size(), "label file and cloud differ in length");
          colors = label_coloring(labels.class_of);
        } else {
          require(cf.labels.has_value(), "the cloud has no labels; pass --labels");
          colors = label_coloring(cf.labels->class_of);
        }
      } else if (ply_coloring == "prediction") {
        if (!ply_params) throw CLI::ValidationError("--params", "prediction coloring needs a checkpoint");
        const ModelParams params = params_from_json(nlohmann::json::parse(read_text(*ply_params)), cfg.train.model);
        const SceneGeometry geo = compute_scene_geometry(cf.cloud, cfg.train.geometry);
        colors = label_coloring(predict_classes(params, cf.cloud, geo, cfg.train.model, cfg.train.method.spfa,
                                                cfg.train.samples_k, cfg.train.seed));
      } else {
        throw CLI::ValidationError("--coloring", "expected superpoint, label, edge or prediction");
      }
      write_ply(ply_out, cf.cloud, colors);
    } else if (sweep_cmd->parsed()) {
      const RunConfig cfg = run_config(sweep_config, sweep_seed, std::nullopt);
      const SceneSet scenes = load_scenes(cfg);
      SceneCache cache = SceneCache::from_environment();
      const std::string csv = sweep_csv(sweep_tplo(cfg.train, scenes, cache));
      if (sweep_out) {
        write_text_atomic(*sweep_out, csv);
      } else {
        std::cout << csv;
      }
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
