#include "spgseg/config.hpp"

#include <numbers>
#include <set>

#include "spgseg/error.hpp"
#include "spgseg/io.hpp"

namespace spgseg {

namespace {

/// Reads optional keys of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const nlohmann::json& parent, std::string name) : name_(std::move(name)) {
    if (!parent.contains(name_)) return;
    node_ = &parent.at(name_);
    if (!node_->is_object()) throw InputError("config: '" + name_ + "' must be an object");
  }
  Section(const nlohmann::json* node, std::string name) : node_(node), name_(std::move(name)) {
    if (node_ && !node_->is_object()) throw InputError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    known_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InputError("config: '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const nlohmann::json* child(const std::string& key) {
    known_.insert(key);
    return node_ && node_->contains(key) ? &node_->at(key) : nullptr;
  }

  void finish() const {
    if (!node_) return;
    for (const auto& item : node_->items()) {
      if (!known_.count(item.key())) throw InputError("config: unknown key '" + name_ + "." + item.key() + "'");
    }
  }

 private:
  const nlohmann::json* node_ = nullptr;
  std::string name_;
  std::set<std::string> known_;
};

constexpr double kDegrees = 180.0 / std::numbers::pi;

void read_paths(Section& s, const std::string& key, std::vector<std::filesystem::path>& out) {
  std::vector<std::string> raw;
  s.read(key, raw);
  if (!raw.empty()) out.assign(raw.begin(), raw.end());
}

std::vector<std::string> strings(const std::vector<std::filesystem::path>& paths) {
  return {paths.begin(), paths.end()};
}

std::vector<Scene> load_files(const std::vector<std::filesystem::path>& files, std::size_t num_classes,
                              bool keep_truth) {
  std::vector<Scene> out;
  for (const auto& f : files) {
    CloudFile cf = read_cloud(f, num_classes);
    Scene s;
    s.id = f.string();
    s.cloud = std::move(cf.cloud);
    if (keep_truth) s.truth = std::move(cf.labels);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (!data.uses_files()) {
    data.synthetic.validate();
    require(train.model.num_classes == kRoomClasses,
            "the synthetic benchmark has " + std::to_string(kRoomClasses) + " classes");
  } else {
    require(!data.labeled_files.empty(), "config: data.labeled_files is empty");
    require(!data.evaluation_files.empty(), "config: data.evaluation_files is empty");
  }
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("config: top level must be an object");
  RunConfig cfg;
  TrainConfig& t = cfg.train;

  Section growing(j, "growing");
  double t_ang_deg = t.geometry.growing.t_ang * kDegrees;
  growing.read("t_ang_deg", t_ang_deg);
  t.geometry.growing.t_ang = t_ang_deg / kDegrees;
  growing.read("t_cvt", t.geometry.growing.t_cvt);
  growing.read("t_clr", t.geometry.growing.t_clr);
  growing.read("t_merge", t.geometry.growing.t_merge);
  growing.read("k_grow", t.geometry.growing.k_grow);
  growing.read("min_cluster", t.geometry.growing.min_cluster);
  growing.finish();

  Section geometry(j, "geometry");
  geometry.read("k_normal", t.geometry.k_normal);
  geometry.read("k_edge", t.geometry.k_edge);
  geometry.finish();

  Section model(j, "model");
  model.read("hidden", t.model.hidden);
  model.read("feature_dim", t.model.feature_dim);
  model.read("num_classes", t.model.num_classes);
  model.read("edge_hidden", t.model.edge_hidden);
  model.read("k_feat", t.model.k_feat);
  model.read("samples_k", t.samples_k);
  model.finish();

  Section train(j, "train");
  train.read("epochs_total", t.epochs_total);
  train.read("epochs_labeled_only", t.epochs_labeled_only);
  train.read("learning_rate", t.learning_rate);
  train.read("lr_decay", t.lr_decay);
  train.read("chunk_size", t.chunk_size);
  train.read("steps_per_epoch", t.steps_per_epoch);
  train.read("beta1", t.adam.beta1);
  train.read("beta2", t.adam.beta2);
  train.read("epsilon", t.adam.epsilon);
  double t_plo = t.t_plo.value();
  train.read("t_plo", t_plo);
  require(t_plo > 0.0 && t_plo < 1.0, "config: train.t_plo must lie strictly between 0 and 1");
  t.t_plo = Ratio::from_double(t_plo);
  train.read("seed", t.seed);
  Section method(train.child("method"), "train.method");
  method.read("spfa", t.method.spfa);
  method.read("pseudo_labels", t.method.pseudo_labels);
  method.read("plo", t.method.plo);
  method.read("edge", t.method.edge);
  method.read("sp_loss", t.method.sp_loss);
  method.finish();
  train.finish();

  Section data(j, "data");
  data.read("scenes", cfg.data.synthetic.scenes);
  data.read("labeled", cfg.data.synthetic.labeled);
  data.read("evaluation", cfg.data.synthetic.evaluation);
  data.read("target_points", cfg.data.synthetic.target_points);
  data.read("seed", cfg.data.synthetic.seed);
  read_paths(data, "labeled_files", cfg.data.labeled_files);
  read_paths(data, "unlabeled_files", cfg.data.unlabeled_files);
  read_paths(data, "evaluation_files", cfg.data.evaluation_files);
  data.finish();

  Section paths(j, "paths");
  std::string output_dir = cfg.paths.output_dir.string();
  paths.read("output_dir", output_dir);
  cfg.paths.output_dir = output_dir;
  paths.read("log_file", cfg.paths.log_file);
  paths.read("metrics_file", cfg.paths.metrics_file);
  paths.read("params_file", cfg.paths.params_file);
  paths.finish();

  static const std::set<std::string> kSections = {"growing", "geometry", "model", "train", "data", "paths"};
  for (const auto& item : j.items()) {
    if (!kSections.count(item.key())) throw InputError("config: unknown key '" + item.key() + "'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  const GrowingConfig& g = t.geometry.growing;
  nlohmann::ordered_json j;
  j["growing"] = {{"t_ang_deg", g.t_ang * kDegrees}, {"t_cvt", g.t_cvt},       {"t_clr", g.t_clr},
                  {"t_merge", g.t_merge},            {"k_grow", g.k_grow},     {"min_cluster", g.min_cluster}};
  j["geometry"] = {{"k_normal", t.geometry.k_normal}, {"k_edge", t.geometry.k_edge}};
  j["model"] = {{"hidden", t.model.hidden},           {"feature_dim", t.model.feature_dim},
                {"num_classes", t.model.num_classes}, {"edge_hidden", t.model.edge_hidden},
                {"k_feat", t.model.k_feat},           {"samples_k", t.samples_k}};
  j["train"] = {{"epochs_total", t.epochs_total},
                {"epochs_labeled_only", t.epochs_labeled_only},
                {"learning_rate", t.learning_rate},
                {"lr_decay", t.lr_decay},
                {"chunk_size", t.chunk_size},
                {"steps_per_epoch", t.steps_per_epoch},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"epsilon", t.adam.epsilon},
                {"t_plo", t.t_plo.value()},
                {"seed", t.seed},
                {"method",
                 {{"spfa", t.method.spfa},
                  {"pseudo_labels", t.method.pseudo_labels},
                  {"plo", t.method.plo},
                  {"edge", t.method.edge},
                  {"sp_loss", t.method.sp_loss}}}};
  j["data"] = {{"scenes", cfg.data.synthetic.scenes},
               {"labeled", cfg.data.synthetic.labeled},
               {"evaluation", cfg.data.synthetic.evaluation},
               {"target_points", cfg.data.synthetic.target_points},
               {"seed", cfg.data.synthetic.seed},
               {"labeled_files", strings(cfg.data.labeled_files)},
               {"unlabeled_files", strings(cfg.data.unlabeled_files)},
               {"evaluation_files", strings(cfg.data.evaluation_files)}};
  j["paths"] = {{"output_dir", cfg.paths.output_dir.string()},
                {"log_file", cfg.paths.log_file},
                {"metrics_file", cfg.paths.metrics_file},
                {"params_file", cfg.paths.params_file}};
  return j;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

SceneSet load_scenes(const RunConfig& cfg) {
  if (!cfg.data.uses_files()) return make_benchmark(cfg.data.synthetic);
  const std::size_t c = cfg.train.model.num_classes;
  SceneSet set;
  set.labeled = load_files(cfg.data.labeled_files, c, true);
  set.unlabeled = load_files(cfg.data.unlabeled_files, c, false);
  set.evaluation = load_files(cfg.data.evaluation_files, c, true);
  return set;
}

}  // namespace spgseg
