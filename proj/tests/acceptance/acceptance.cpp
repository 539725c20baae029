// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned here.
// Usage: spgseg_acceptance [criterion numbers...]   (default: all)

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "spgseg/io.hpp"
#include "spgseg/labels.hpp"
#include "spgseg/losses.hpp"
#include "spgseg/region_growing.hpp"
#include "spgseg/scene_cache.hpp"
#include "spgseg/synthetic.hpp"
#include "spgseg/trainer.hpp"

using namespace spgseg;
namespace fs = std::filesystem;

namespace {

constexpr double kOracleBudgetSeconds = 60.0;
constexpr double kGradientBudgetSeconds = 120.0;
constexpr double kGradientTolerance = 1e-4;
constexpr double kReferenceGap = 1e-12;
constexpr double kAnalyticTolerance = 1e-9;
constexpr double kExperimentMarginMiou = 1.0;
constexpr double kExperimentBudgetSeconds = 15.0 * 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

GrowingConfig randomized_growing(std::uint64_t i) {
  GrowingConfig g;
  g.t_ang = (2.0 + static_cast<double>(i % 5)) * std::numbers::pi / 180.0;
  g.t_cvt = 0.02 + 0.01 * static_cast<double>(i % 4);
  g.t_clr = 5.0 + 3.0 * static_cast<double>(i % 3);
  g.t_merge = 4.0 + 4.0 * static_cast<double>(i % 4);
  g.k_grow = 8 + 4 * (i % 3);
  g.min_cluster = 5 + i % 10;
  return g;
}

// 1. k-NN, both region growers, the merge and PLO against brute-force oracles.
Outcome oracle_equivalence() {
  constexpr std::size_t kInstances = 50;
  const Stopwatch clock;
  std::map<std::string, std::size_t> mismatches;
  std::size_t largest = 0;
  for (std::uint64_t i = 0; i < kInstances; ++i) {
    const std::size_t n = 150 + (i * 1850) / (kInstances - 1);  // 150 .. 2000
    largest = std::max(largest, n);
    const PointCloud cloud = fixtures::piecewise_cloud(n, 9000 + i);
    const GrowingConfig cfg = randomized_growing(i);
    const SpatialIndex index(cloud);

    for (PointId q = 0; q < n; q += 3) {
      const std::size_t k = 1 + (q + i) % 24;
      if (index.knn(q, k) != oracle::knn(cloud, q, k)) ++mismatches["knn"];
    }

    const SurfaceEstimate surface = estimate_surface(cloud, index, 16);
    const auto geo_labels = oracle::grow_geometric(cloud, surface.normals, surface.curvatures, cfg);
    const SuperpointPartition geo = grow_geometric(cloud, surface, index, cfg);
    if (geo != SuperpointPartition::from_labels(geo_labels)) ++mismatches["geometric growth"];

    const auto color_labels = oracle::grow_color(cloud, cfg);
    const SuperpointPartition color = grow_color(cloud, index, cfg);
    if (color != SuperpointPartition::from_labels(color_labels)) ++mismatches["color growth"];

    const auto merged_labels = oracle::merge(geo_labels, color_labels);
    const SuperpointPartition merged = merge_partitions(geo, color);
    if (merged != SuperpointPartition::from_labels(merged_labels)) ++mismatches["merge"];

    const LabelSet pseudo = fixtures::biased_labels(merged_labels, 2 + i % 4, i);
    for (const Ratio& t : kPloSweep) {
      if (optimize_pseudo_labels(merged, pseudo, t) != oracle::plo(merged_labels, pseudo, t.num, t.den)) {
        ++mismatches["plo"];
      }
    }
  }
  const double seconds = clock.seconds();
  Outcome o;
  o.pass = mismatches.empty() && seconds < kOracleBudgetSeconds;
  o.detail = format("%zu instances, N <= %zu, %.1f s (budget %.0f s)", kInstances, largest, seconds,
                    kOracleBudgetSeconds);
  for (const auto& [what, count] : mismatches) o.detail += format("; %s mismatches: %zu", what.c_str(), count);
  return o;
}

// 2. Finite differences for every parameter and every loss term.
Outcome gradient_suite() {
  using gradcheck::Term;
  const Stopwatch clock;
  double worst = 0.0, value_gap = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (bool aggregate : {true, false}) {
      gradcheck::Instance inst = gradcheck::make_instance(seed);
      inst.aggregate = aggregate;
      for (Term t : {Term::SegLabeled, Term::SegUnlabeled, Term::Edge, Term::Consistency, Term::Total}) {
        const gradcheck::Worst w = gradcheck::check(inst, t);
        entries += w.entries;
        value_gap = std::max(value_gap, w.value_gap);
        if (w.relative_error > worst) {
          worst = w.relative_error;
          where = std::string(gradcheck::term_name(t)) + " " + w.where;
        }
      }
    }
  }
  const double seconds = clock.seconds();
  Outcome o;
  o.pass = worst < kGradientTolerance && value_gap < kReferenceGap && seconds < kGradientBudgetSeconds;
  o.detail = format("%zu checks, worst relative error %.2e at %s (tolerance %.0e), loss gap to reference %.1e, %.1f s",
                    entries, worst, where.empty() ? "-" : where.c_str(), kGradientTolerance, value_gap, seconds);
  return o;
}

// 3. Retention shrinks as the threshold grows; PLO is idempotent and leaves pure groups.
Outcome plo_properties() {
  std::size_t monotone_fail = 0, idempotent_fail = 0, purity_fail = 0;
  constexpr int kDraws = 100;
  for (std::uint64_t d = 0; d < kDraws; ++d) {
    const std::size_t n = 100 + d * 7;
    const auto members = fixtures::random_membership(n, 3 + d % 20, 0.1, 500 + d);
    const SuperpointPartition sp = SuperpointPartition::from_labels(members);
    const LabelSet pseudo = fixtures::biased_labels(members, 2 + d % 5, 700 + d);
    std::size_t previous = n + 1;
    for (const Ratio& t : kPloSweep) {
      const LabelSet out = optimize_pseudo_labels(sp, pseudo, t);
      if (out.labeled_count() > previous) ++monotone_fail;
      previous = out.labeled_count();
      if (optimize_pseudo_labels(sp, out, t) != out) ++idempotent_fail;
      for (const auto& g : sp.groups()) {
        for (PointId id : g) {
          if (out.class_of[id] != out.class_of[g.front()]) {
            ++purity_fail;
            break;
          }
        }
      }
      for (PointId id : sp.unclustered()) {
        if (out.has_label(id)) ++purity_fail;
      }
    }
  }
  Outcome o;
  o.pass = monotone_fail + idempotent_fail + purity_fail == 0;
  o.detail = format("%d draws x 5 thresholds; violations: monotone %zu, idempotent %zu, purity %zu", kDraws,
                    monotone_fail, idempotent_fail, purity_fail);
  return o;
}

// 4. Strict inequality at the boundary, in integers.
Outcome plo_boundary() {
  const SuperpointPartition one = SuperpointPartition::single_group(10);
  auto vote = [&](int agreeing) {
    LabelSet l = LabelSet::unlabeled(10, 3);
    for (int i = 0; i < 10; ++i) l.class_of[static_cast<std::size_t>(i)] = i < agreeing ? 1 : 2;
    return optimize_pseudo_labels(one, l, Ratio{4, 5});
  };
  const LabelSet nine = vote(9);
  const LabelSet eight = vote(8);
  const bool modified = nine.class_of == std::vector<std::int32_t>(10, 1);
  const bool deleted = eight.labeled_count() == 0;
  Outcome o;
  o.pass = modified && deleted;
  o.detail = format("9/10 at 4/5 -> %s, 8/10 at 4/5 -> %s", modified ? "modify" : "NOT modified",
                    deleted ? "delete" : "NOT deleted");
  return o;
}

// 5. Closed-form loss values.
Outcome analytic_losses() {
  double worst = 0.0;
  for (std::size_t c : {2u, 4u, 7u}) {
    const Matrix x = Matrix::Constant(32, static_cast<Eigen::Index>(c), -0.3);
    LabelSet l = LabelSet::unlabeled(32, c);
    for (std::size_t i = 0; i < 32; ++i) l.class_of[i] = static_cast<std::int32_t>(i % c);
    worst = std::max(worst, std::abs(loss_seg_labeled(x, l).value / 32.0 - std::log(static_cast<double>(c))));
  }
  const double ce = worst;

  EdgeLabels edges;
  for (int i = 0; i < 32; ++i) edges.is_edge.push_back(i % 4 == 0);
  const double edge = std::abs(loss_edge(Matrix::Constant(32, 2, 0.5), edges).value / 32.0 - 2.0 * std::numbers::ln2);

  const auto members = fixtures::random_membership(40, 4, 0.2, 1);
  Matrix constant(40, 3);
  for (Eigen::Index i = 0; i < 40; ++i) constant.row(i).setConstant(0.5 * members[static_cast<std::size_t>(i)]);
  const double sp = std::abs(loss_sp(constant, SuperpointPartition::from_labels(members), 8, 3).value);

  Outcome o;
  o.pass = ce < kAnalyticTolerance && edge < kAnalyticTolerance && sp < kAnalyticTolerance;
  o.detail = format("|CE - ln C| %.1e, |edge - 2 ln 2| %.1e, consistency %.1e (tolerance %.0e)", ce, edge, sp,
                    kAnalyticTolerance);
  return o;
}

/// Benchmark and training seeds for the end-to-end experiments. Twenty
/// training scenes with two labeled; 24 held-out scenes and two training seeds
/// keep per-scene all-or-nothing class outcomes from dominating the mean.
struct Experiment {
  BenchmarkConfig benchmark;
  std::vector<std::uint64_t> train_seeds = {1, 2};
};

Experiment experiment_protocol() {
  Experiment e;
  e.benchmark.scenes = 20;
  e.benchmark.labeled = 2;
  e.benchmark.evaluation = 24;
  e.benchmark.seed = 2024;
  return e;
}

/// mIoU of one configuration, one entry per training seed.
struct SeedRuns {
  std::vector<double> miou;

  double mean() const { return std::accumulate(miou.begin(), miou.end(), 0.0) / static_cast<double>(miou.size()); }
  std::string describe() const {
    std::string out = format("%.2f (", mean());
    for (std::size_t i = 0; i < miou.size(); ++i) out += format("%s%.2f", i ? "/" : "", miou[i]);
    return out + ")";
  }
};

struct ExperimentRuns {
  std::map<std::string, SeedRuns> variants;
  std::map<double, SeedRuns> sweep;  // keyed by t_plo value
  double variant_seconds = 0.0;
};

/// Shared by 6 and 7: the full method at 4/5 doubles as the sweep's middle point.
const ExperimentRuns& experiment_runs(bool need_sweep) {
  static ExperimentRuns runs;
  static bool have_variants = false, have_sweep = false;
  const Stopwatch clock;
  const Experiment protocol = experiment_protocol();
  static const SceneSet scenes = make_benchmark(protocol.benchmark);
  static SceneCache cache;
  auto run = [&](const MethodFlags& flags, Ratio t_plo) {
    SeedRuns out;
    for (std::uint64_t seed : protocol.train_seeds) {
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.method = flags;
      cfg.t_plo = t_plo;
      const TrainResult r = train(cfg, scenes, cache);
      out.miou.push_back(evaluate(r.params, cfg, scenes.evaluation, cache).miou);
    }
    return out;
  };
  if (!have_variants) {
    const auto variants = ablation_variants();
    for (const Variant& v : {variants[0], variants[2], variants[5]}) runs.variants[v.name] = run(v.flags, Ratio{4, 5});
    runs.sweep[Ratio{4, 5}.value()] = runs.variants.at("Ours");
    runs.variant_seconds = clock.seconds();
    have_variants = true;
  }
  if (need_sweep && !have_sweep) {
    for (const Ratio& t : kPloSweep) {
      if (!runs.sweep.count(t.value())) runs.sweep[t.value()] = run(MethodFlags{}, t);
    }
    have_sweep = true;
  }
  return runs;
}

// 6. Full method beats the labeled-only baseline and raw pseudo labels.
Outcome end_to_end() {
  const ExperimentRuns& r = experiment_runs(false);
  const SeedRuns& ours = r.variants.at("Ours");
  const SeedRuns& baseline = r.variants.at("Baseline");
  const SeedRuns& pl = r.variants.at("Baseline+SPFA+PL");
  Outcome o;
  o.pass = ours.mean() >= baseline.mean() + kExperimentMarginMiou && ours.mean() >= pl.mean() + kExperimentMarginMiou &&
           r.variant_seconds < kExperimentBudgetSeconds;
  o.detail = format("mean mIoU over training seeds (per seed): Baseline %s, +PL %s, Ours %s; margin %.1f; %.0f s",
                    baseline.describe().c_str(), pl.describe().c_str(), ours.describe().c_str(),
                    kExperimentMarginMiou, r.variant_seconds);
  return o;
}

// 7. Neither sweep extreme strictly dominates the interior.
Outcome tplo_sweep() {
  const ExperimentRuns& r = experiment_runs(true);
  const double low = kPloSweep.front().value(), high = kPloSweep.back().value();
  double interior_best = -1.0;
  std::string curve;
  for (const auto& [t, runs] : r.sweep) {
    curve += format("%s%.2f:%.2f", curve.empty() ? "" : " ", t, runs.mean());
    if (t != low && t != high) interior_best = std::max(interior_best, runs.mean());
  }
  Outcome o;
  o.pass = interior_best >= r.sweep.at(low).mean() && interior_best >= r.sweep.at(high).mean();
  o.detail = "t_plo:mean mIoU " + curve;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPGSEG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 8. Two identical `train` invocations write identical metric CSVs.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "spgseg-acceptance-determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({
    "model": {"hidden": 16, "feature_dim": 16},
    "train": {"epochs_total": 4, "epochs_labeled_only": 2, "chunk_size": 1024, "steps_per_epoch": 3},
    "data": {"scenes": 4, "labeled": 1, "evaluation": 2, "target_points": 5000}
  })";
  Outcome o;
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir / (i == 0 ? "first" : "second");
    const int code = run_cli("train --config " + (dir / "c.json").string() + " --seed 7 --out-dir " + out.string());
    if (code != 0) {
      o.pass = false;
      o.detail = format("train run %d exited with %d", i + 1, code);
      fs::remove_all(dir);
      return o;
    }
    csv[i] = read_text(out / "metrics.csv");
  }
  fs::remove_all(dir);
  o.pass = !csv[0].empty() && csv[0] == csv[1];
  o.detail = format("metrics.csv %zu bytes, %s", csv[0].size(), o.pass ? "byte-identical" : "DIFFERENT");
  return o;
}

/// Largest share of a group's points outside its majority class, over all groups.
std::size_t mixed_groups(const SuperpointPartition& sp, const LabelSet& truth, std::int32_t a, std::int32_t b) {
  std::size_t mixed = 0;
  for (const auto& g : sp.groups()) {
    bool has_a = false, has_b = false;
    for (PointId id : g) {
      has_a |= truth.class_of[id] == a;
      has_b |= truth.class_of[id] == b;
    }
    mixed += has_a && has_b;
  }
  return mixed;
}

// 9. Color-only and geometry-only boundaries: each single-modality partition misses one.
Outcome spg_structure() {
  const GeometryConfig g;
  const Scene board = generate_synthetic_scene(1, floor_with_board_spec());
  const Scene beam = generate_synthetic_scene(1, wall_with_beam_spec());
  const SceneGeometry gb = compute_scene_geometry(board.cloud, g);
  const SceneGeometry gm = compute_scene_geometry(beam.cloud, g);

  const bool board_geo_misses = gb.geometric.num_groups() == 1 && mixed_groups(gb.geometric, *board.truth, kFloor, kBoard) > 0;
  const bool board_color_splits = gb.color.num_groups() >= 2 && mixed_groups(gb.color, *board.truth, kFloor, kBoard) == 0;
  const bool beam_color_misses = gm.color.num_groups() == 1 && mixed_groups(gm.color, *beam.truth, kWall, kBeam) > 0;
  const bool beam_geo_splits = gm.geometric.num_groups() >= 2 && mixed_groups(gm.geometric, *beam.truth, kWall, kBeam) == 0;
  const bool merged_pure = mixed_groups(gb.merged, *board.truth, kFloor, kBoard) == 0 &&
                           mixed_groups(gm.merged, *beam.truth, kWall, kBeam) == 0;
  Outcome o;
  o.pass = board_geo_misses && board_color_splits && beam_color_misses && beam_geo_splits && merged_pure;
  o.detail = format(
      "board scene: geometric %zu group(s), color %zu; beam scene: geometric %zu, color %zu; merged pure: %s",
      gb.geometric.num_groups(), gb.color.num_groups(), gm.geometric.num_groups(), gm.color.num_groups(),
      merged_pure ? "yes" : "no");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence (k-NN, region growing, merge, PLO)", oracle_equivalence},
      {"gradient suite", gradient_suite},
      {"PLO properties", plo_properties},
      {"PLO boundary semantics", plo_boundary},
      {"analytic loss values", analytic_losses},
      {"end-to-end synthetic experiment", end_to_end},
      {"t_plo sweep shape", tplo_sweep},
      {"determinism of train", determinism},
      {"superpoint structure on board/beam scenes", spg_structure},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    failures += !o.pass;
    std::printf("[%s] %d. %s: %s\n", o.pass ? "PASS" : "FAIL", number, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
