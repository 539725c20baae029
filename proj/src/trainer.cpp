#include "spgseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "spgseg/error.hpp"
#include "spgseg/parallel.hpp"
#include "spgseg/rng.hpp"

namespace spgseg {

namespace {

// Stream tags for derive_seed.
enum : std::uint64_t {
  kTagInit = 1,
  kTagOrder = 2,
  kTagChunk = 3,
  kTagSamples = 4,
  kTagPseudo = 5,
  kTagEval = 6,
};

/// A training crop: the points around a random center with every per-point
/// annotation restricted to them.
struct Chunk {
  PointCloud cloud;
  NeighborTable neighbors;
  SuperpointPartition superpoints;
  EdgeLabels edges;
  LabelSet labels;
};

Chunk make_chunk(const PointCloud& cloud, const SceneGeometry& geo, const LabelSet& labels, std::size_t chunk_size,
                 std::size_t k_feat, std::uint64_t hash) {
  const std::size_t n = cloud.size();
  std::vector<PointId> ids;
  if (chunk_size >= n) {
    ids.resize(n);
    std::iota(ids.begin(), ids.end(), PointId{0});
  } else {
    const auto center = static_cast<PointId>(bounded_index(hash, n));
    ids = geo.index.knn(center, chunk_size);
    std::sort(ids.begin(), ids.end());
  }
  Chunk c;
  c.cloud = cloud.subset(ids);
  c.neighbors = knn_table(build_index(c.cloud), std::min(k_feat, ids.size()));
  c.superpoints = geo.merged.restrict_to(ids);
  c.edges = geo.edges.restrict_to(ids);
  c.labels = labels.restrict_to(ids);
  return c;
}

LossTerm zero_term(Eigen::Index rows, Eigen::Index cols) {
  LossTerm t;
  t.grad = Matrix::Zero(rows, cols);
  t.empty = true;
  return t;
}

struct BranchResult {
  LossTerm seg, edge, sp;
  ModelParams grads;
};

BranchResult run_branch(const Chunk& chunk, const ModelParams& params, const TrainConfig& cfg, bool labeled,
                        std::uint64_t sample_seed, bool with_grads) {
  const MethodFlags& m = cfg.method;
  SampleTable samples;
  if (m.spfa || m.sp_loss) samples = draw_superpoint_samples(chunk.superpoints, cfg.samples_k, sample_seed);
  const ForwardPass pass = forward(chunk.cloud, chunk.neighbors, params, m.spfa ? &samples : nullptr);

  BranchResult r;
  r.seg = labeled ? loss_seg_labeled(pass.x, chunk.labels) : loss_seg_unlabeled(pass.x, chunk.labels);
  r.edge = m.edge ? loss_edge(pass.e, chunk.edges) : zero_term(pass.e.rows(), pass.e.cols());
  r.sp = m.sp_loss ? loss_sp(pass.x, samples) : zero_term(pass.x.rows(), pass.x.cols());
  if (with_grads) r.grads = backward(pass, params, r.seg.grad + r.sp.grad, r.edge.grad);
  return r;
}

void accumulate(ModelParams& into, const ModelParams& add) {
  std::vector<const Matrix*> src;
  add.for_each([&](std::string_view, const Matrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  into.for_each([&](std::string_view, Matrix& m) { m += *src[i++]; });
}

void check_finite(const LossReport& r, std::size_t epoch, std::size_t step) {
  const std::pair<const char*, double> terms[] = {{"seg_l", r.seg_l},   {"seg_u", r.seg_u}, {"edge_l", r.edge_l},
                                                   {"edge_u", r.edge_u}, {"sp_l", r.sp_l},   {"sp_u", r.sp_u}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw NumericalError("training diverged: loss term " + std::string(name) + " is " + std::to_string(value) +
                           " at epoch " + std::to_string(epoch) + ", step " + std::to_string(step));
    }
  }
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::int32_t> predict_with_table(const ModelParams& params, const PointCloud& cloud,
                                             const NeighborTable& neighbors, const SceneGeometry& geometry,
                                             bool use_spfa, std::size_t samples_k, std::uint64_t sample_seed) {
  SampleTable samples;
  if (use_spfa) samples = draw_superpoint_samples(geometry.merged, samples_k, sample_seed);
  const ForwardPass pass = forward(cloud, neighbors, params, use_spfa ? &samples : nullptr);
  return argmax_rows(pass.x);
}

std::vector<std::shared_ptr<const SceneGeometry>> precompute(const std::vector<const Scene*>& scenes,
                                                             const GeometryConfig& cfg, SceneCache& cache) {
  std::vector<std::shared_ptr<const SceneGeometry>> out(scenes.size());
  parallel_for(
      scenes.size(), [&](std::size_t i) { out[i] = cache.get(scenes[i]->cloud, cfg); }, 1);
  return out;
}

std::vector<const Scene*> pointers(const std::vector<Scene>& scenes) {
  std::vector<const Scene*> out;
  for (const auto& s : scenes) out.push_back(&s);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs_total >= 1, "epochs_total must be at least 1");
  require(epochs_labeled_only <= epochs_total, "epochs_labeled_only exceeds epochs_total");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "lr_decay must lie in (0, 1]");
  require(chunk_size >= 16, "chunk_size must be at least 16");
  require(samples_k >= 1, "samples_k must be at least 1");
  require(t_plo.num > 0 && t_plo.num < t_plo.den, "t_plo must lie strictly between 0 and 1");
  adam.validate();
  geometry.validate();
  model.validate();
}

void SceneSet::validate(std::size_t num_classes) const {
  require(!labeled.empty(), "at least one labeled scene is required");
  std::set<std::string> ids;
  auto check = [&](const Scene& s, bool needs_truth) {
    require(ids.insert(s.id).second, "duplicate scene id '" + s.id + "'");
    s.cloud.validate();
    if (needs_truth) require(s.truth.has_value(), "scene '" + s.id + "' has no ground truth");
    if (s.truth) {
      require(s.truth->size() == s.cloud.size(), "scene '" + s.id + "' truth size differs from its cloud");
      require(s.truth->num_classes == num_classes, "scene '" + s.id + "' uses a different class count");
      s.truth->validate();
    }
  };
  for (const auto& s : labeled) check(s, true);
  for (const auto& s : unlabeled) check(s, false);
  for (const auto& s : evaluation) check(s, true);
}

std::string StepLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["step"] = step;
  j["lr"] = learning_rate;
  j["losses"] = nlohmann::ordered_json::parse(losses.to_json());
  return j.dump();
}

TrainResult train(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache, const StepObserver& observer) {
  cfg.validate();
  scenes.validate(cfg.model.num_classes);
  const MethodFlags& method = cfg.method;
  const bool use_unlabeled = method.pseudo_labels && !scenes.unlabeled.empty();

  const auto labeled_geo = precompute(pointers(scenes.labeled), cfg.geometry, cache);
  std::vector<std::shared_ptr<const SceneGeometry>> unlabeled_geo;
  std::vector<NeighborTable> unlabeled_tables;
  if (use_unlabeled) {
    unlabeled_geo = precompute(pointers(scenes.unlabeled), cfg.geometry, cache);
    unlabeled_tables.resize(scenes.unlabeled.size());
    parallel_for(
        scenes.unlabeled.size(),
        [&](std::size_t u) {
          unlabeled_tables[u] =
              knn_table(unlabeled_geo[u]->index, std::min(cfg.model.k_feat, scenes.unlabeled[u].cloud.size()));
        },
        1);
  }

  TrainResult result;
  result.params = ModelParams::glorot(cfg.model, derive_seed(cfg.seed, {kTagInit}));
  Adam adam(result.params, cfg.adam);

  const std::size_t num_labeled = scenes.labeled.size();
  const std::size_t num_unlabeled = scenes.unlabeled.size();
  const std::size_t steps =
      cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : std::max(num_labeled, num_unlabeled);

  std::vector<LabelSet> pseudo(num_unlabeled);
  for (std::size_t u = 0; u < num_unlabeled; ++u) {
    pseudo[u] = LabelSet::unlabeled(scenes.unlabeled[u].cloud.size(), cfg.model.num_classes);
  }

  for (std::size_t epoch = 1; epoch <= cfg.epochs_total; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch - 1));
    const bool self_training = use_unlabeled && epoch > cfg.epochs_labeled_only;

    if (self_training) {
      parallel_for(
          num_unlabeled,
          [&](std::size_t u) {
            const Scene& s = scenes.unlabeled[u];
            const auto predicted = predict_with_table(result.params, s.cloud, unlabeled_tables[u], *unlabeled_geo[u],
                                                      method.spfa, cfg.samples_k,
                                                      derive_seed(cfg.seed, {kTagPseudo, epoch, u}));
            LabelSet labels(predicted, cfg.model.num_classes);
            pseudo[u] = method.plo ? optimize_pseudo_labels(unlabeled_geo[u]->merged, labels, cfg.t_plo) : labels;
          },
          1);
      result.refresh_epochs.push_back(epoch);
    }

    const auto labeled_order = shuffled(num_labeled, derive_seed(cfg.seed, {kTagOrder, epoch, 0}));
    const auto unlabeled_order = shuffled(num_unlabeled, derive_seed(cfg.seed, {kTagOrder, epoch, 1}));

    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t li = labeled_order[step % num_labeled];
      const Scene& ls = scenes.labeled[li];
      const Chunk lc = make_chunk(ls.cloud, *labeled_geo[li], *ls.truth, cfg.chunk_size, cfg.model.k_feat,
                                  derive_seed(cfg.seed, {kTagChunk, epoch, step, 0}));
      BranchResult lab =
          run_branch(lc, result.params, cfg, true, derive_seed(cfg.seed, {kTagSamples, epoch, step, 0}), true);

      LossTerm seg_u, edge_u, sp_u;
      double unlabeled_weight = 1.0;
      if (use_unlabeled) {
        // Before self-training starts the unlabeled branch is evaluated for the
        // log but carries zero weight.
        const std::size_t ui = unlabeled_order[step % num_unlabeled];
        const Scene& us = scenes.unlabeled[ui];
        const Chunk uc = make_chunk(us.cloud, *unlabeled_geo[ui], pseudo[ui], cfg.chunk_size, cfg.model.k_feat,
                                    derive_seed(cfg.seed, {kTagChunk, epoch, step, 1}));
        BranchResult unl = run_branch(uc, result.params, cfg, false,
                                      derive_seed(cfg.seed, {kTagSamples, epoch, step, 1}), self_training);
        if (self_training) accumulate(lab.grads, unl.grads);
        unlabeled_weight = self_training ? 1.0 : 0.0;
        seg_u = std::move(unl.seg);
        edge_u = std::move(unl.edge);
        sp_u = std::move(unl.sp);
      }

      StepLog entry;
      entry.epoch = epoch;
      entry.step = step;
      entry.learning_rate = lr;
      entry.losses = total_loss(lab.seg, seg_u, lab.edge, edge_u, lab.sp, sp_u, unlabeled_weight);
      check_finite(entry.losses, epoch, step);
      adam.step(result.params, lab.grads, lr);
      if (observer) observer(entry);
      result.log.push_back(std::move(entry));
    }
  }
  return result;
}

std::vector<std::int32_t> predict_classes(const ModelParams& params, const PointCloud& cloud,
                                          const SceneGeometry& geometry, const ModelConfig& model, bool use_spfa,
                                          std::size_t samples_k, std::uint64_t sample_seed) {
  params.validate(model);
  const NeighborTable table = knn_table(geometry.index, std::min(model.k_feat, cloud.size()));
  return predict_with_table(params, cloud, table, geometry, use_spfa, samples_k, sample_seed);
}

LabelSet predict_pseudo_labels(const ModelParams& params, const PointCloud& cloud, const SceneGeometry& geometry,
                               const ModelConfig& model, bool use_spfa, std::size_t samples_k,
                               std::uint64_t sample_seed) {
  return {predict_classes(params, cloud, geometry, model, use_spfa, samples_k, sample_seed), model.num_classes};
}

MetricsReport evaluate(const ModelParams& params, const TrainConfig& cfg, const std::vector<Scene>& scenes,
                       SceneCache& cache) {
  require(!scenes.empty(), "evaluation needs at least one scene");
  for (const auto& s : scenes) require(s.truth.has_value(), "evaluation scene '" + s.id + "' has no ground truth");
  const auto geo = precompute(pointers(scenes), cfg.geometry, cache);
  std::vector<std::vector<std::int32_t>> predictions(scenes.size());
  parallel_for(
      scenes.size(),
      [&](std::size_t s) {
        predictions[s] = predict_classes(params, scenes[s].cloud, *geo[s], cfg.model, cfg.method.spfa, cfg.samples_k,
                                         derive_seed(cfg.seed, {kTagEval, s}));
      },
      1);
  ConfusionMatrix confusion(cfg.model.num_classes);
  for (std::size_t s = 0; s < scenes.size(); ++s) confusion.add(*scenes[s].truth, predictions[s]);
  return confusion.report();
}

std::vector<Variant> ablation_variants() {
  MethodFlags none{false, false, false, false, false};
  std::vector<Variant> v;
  v.push_back({"Baseline", none});
  none.spfa = true;
  v.push_back({"Baseline+SPFA", none});
  none.pseudo_labels = true;
  v.push_back({"Baseline+SPFA+PL", none});
  none.plo = true;
  v.push_back({"Baseline+SPFA+PLO", none});
  none.edge = true;
  v.push_back({"Baseline+SPFA+PLO+EP", none});
  none.sp_loss = true;
  v.push_back({"Ours", none});
  return v;
}

std::vector<VariantResult> ablation_suite(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache,
                                          const std::vector<Variant>& variants) {
  std::vector<VariantResult> rows;
  for (const auto& v : variants) {
    TrainConfig c = cfg;
    c.method = v.flags;
    const TrainResult r = train(c, scenes, cache);
    rows.push_back({v.name, v.flags, evaluate(r.params, c, scenes.evaluation, cache)});
  }
  return rows;
}

std::vector<SweepRow> sweep_tplo(const TrainConfig& cfg, const SceneSet& scenes, SceneCache& cache,
                                 std::span<const Ratio> values) {
  std::vector<SweepRow> rows;
  for (const Ratio& t : values) {
    TrainConfig c = cfg;
    c.method = MethodFlags{};
    c.t_plo = t;
    const TrainResult r = train(c, scenes, cache);
    rows.push_back({t, evaluate(r.params, c, scenes.evaluation, cache)});
  }
  return rows;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string metrics_csv(const std::vector<VariantResult>& rows) {
  std::string out = "variant,miou,macc,oa\n";
  for (const auto& r : rows) {
    out += r.name + ',' + fixed(r.metrics.miou, 4) + ',' + fixed(r.metrics.macc, 4) + ',' + fixed(r.metrics.oa, 4) +
           '\n';
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "t_plo,miou,macc,oa\n";
  for (const auto& r : rows) {
    out += fixed(r.t_plo.value(), 2) + ',' + fixed(r.metrics.miou, 4) + ',' + fixed(r.metrics.macc, 4) + ',' +
           fixed(r.metrics.oa, 4) + '\n';
  }
  return out;
}

std::string metrics_table(const std::vector<VariantResult>& rows) {
  std::size_t width = 7;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  auto lpad = [](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
  std::string out = pad("Variant", width) + "  " + lpad("mIoU", 7) + "  " + lpad("mAcc", 7) + "  " + lpad("OA", 7) + '\n';
  out += std::string(width + 27, '-') + '\n';
  for (const auto& r : rows) {
    out += pad(r.name, width) + "  " + lpad(fixed(r.metrics.miou, 2), 7) + "  " + lpad(fixed(r.metrics.macc, 2), 7) +
           "  " + lpad(fixed(r.metrics.oa, 2), 7) + '\n';
  }
  return out;
}

void BenchmarkConfig::validate() const {
  require(labeled >= 1 && labeled <= scenes, "labeled scene count must lie in [1, scenes]");
  require(evaluation >= 1, "at least one evaluation scene is required");
  require(target_points >= 5000 && target_points <= 50000, "target_points must lie in [5000, 50000]");
}

SceneSet make_benchmark(const BenchmarkConfig& cfg) {
  cfg.validate();
  SceneSet set;
  const std::size_t total = cfg.scenes + cfg.evaluation;
  std::vector<Scene> generated(total);
  parallel_for(
      total,
      [&](std::size_t i) {
        const std::uint64_t scene_seed = derive_seed(cfg.seed, {i});
        SceneSpec spec = random_room_spec(scene_seed);
        spec.target_points = cfg.target_points;
        generated[i] = generate_synthetic_scene(scene_seed, spec);
        char id[32];
        std::snprintf(id, sizeof id, "room-%03zu", i);
        generated[i].id = id;
      },
      1);
  for (std::size_t i = 0; i < total; ++i) {
    if (i < cfg.labeled) {
      set.labeled.push_back(std::move(generated[i]));
    } else if (i < cfg.scenes) {
      generated[i].truth.reset();
      set.unlabeled.push_back(std::move(generated[i]));
    } else {
      set.evaluation.push_back(std::move(generated[i]));
    }
  }
  return set;
}

}  // namespace spgseg
