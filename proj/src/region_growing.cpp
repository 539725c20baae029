#include "spgseg/region_growing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>

#include "spgseg/error.hpp"

namespace spgseg {

void GrowingConfig::validate() const {
  require(t_ang > 0.0 && std::isfinite(t_ang), "t_ang must be positive");
  require(t_cvt > 0.0 && std::isfinite(t_cvt), "t_cvt must be positive");
  require(t_clr > 0.0 && std::isfinite(t_clr), "t_clr must be positive");
  require(t_merge > 0.0 && std::isfinite(t_merge), "t_merge must be positive");
  require(k_grow >= 2, "k_grow must be at least 2");
  require(min_cluster >= 1, "min_cluster must be at least 1");
}

double normal_alignment(const Vec3& a, const Vec3& b) {
  return std::abs(a.x() * b.x() + a.y() * b.y() + a.z() * b.z());
}

double color_distance(const Vec3& a, const Vec3& b) {
  const double dr = 255.0 * (a.x() - b.x());
  const double dg = 255.0 * (a.y() - b.y());
  const double db = 255.0 * (a.z() - b.z());
  return std::sqrt(dr * dr + dg * dg + db * db);
}

std::int64_t color_to_fixed(double channel) { return std::llround(channel * 255.0 * kColorFixedScale); }

namespace {

// Neighborhoods include the point itself, as knn() returns it first.
std::size_t neighbor_count(const GrowingConfig& cfg, std::size_t n) { return std::min(cfg.k_grow, n); }

}  // namespace

SuperpointPartition grow_geometric(const PointCloud& cloud, const SurfaceEstimate& surface, const SpatialIndex& index,
                                   const GrowingConfig& cfg, GrowthTrace* trace) {
  cfg.validate();
  const std::size_t n = cloud.size();
  require(surface.normals.size() == n && surface.curvatures.size() == n,
          "surface estimate has " + std::to_string(surface.normals.size()) + " points, cloud has " +
              std::to_string(n));
  require(index.size() == n, "index and cloud sizes differ");

  std::vector<PointId> order(n);
  std::iota(order.begin(), order.end(), PointId{0});
  const auto& curv = surface.curvatures;
  std::sort(order.begin(), order.end(),
            [&](PointId a, PointId b) { return curv[a] < curv[b] || (curv[a] == curv[b] && a < b); });

  const std::size_t k = neighbor_count(cfg, n);
  std::vector<std::int32_t> label(n, kNoGroup);
  std::vector<PointId> nbrs;
  std::deque<PointId> seeds;
  std::int32_t next_label = 0;

  for (PointId start : order) {
    if (!(curv[start] < cfg.t_cvt)) break;
    if (label[start] != kNoGroup) continue;
    const std::int32_t region = next_label++;
    label[start] = region;
    seeds.push_back(start);
    if (trace) trace->region_seeds.push_back(start);
    while (!seeds.empty()) {
      const PointId s = seeds.front();
      seeds.pop_front();
      index.knn(s, k, nbrs);
      for (std::size_t j = 1; j < nbrs.size(); ++j) {
        const PointId q = nbrs[j];
        if (label[q] != kNoGroup) continue;
        const double angle = std::acos(std::min(1.0, normal_alignment(surface.normals[s], surface.normals[q])));
        if (!(angle < cfg.t_ang)) continue;
        label[q] = region;
        if (trace) trace->admissions.push_back({s, q});
        if (curv[q] < cfg.t_cvt) seeds.push_back(q);
      }
    }
  }
  return SuperpointPartition::from_labels(label).dissolve_smaller_than(cfg.min_cluster);
}

namespace {

/// Clusters of the color grower during merging, addressed by their index
/// right after growth. A merged cluster keeps one of the two indices.
class ClusterMerger {
 public:
  ClusterMerger(const PointCloud& cloud, const std::vector<std::int32_t>& grown, std::size_t num_clusters,
                const SpatialIndex& index, std::size_t k)
      : parent_(num_clusters), clusters_(num_clusters) {
    std::iota(parent_.begin(), parent_.end(), 0u);
    for (std::size_t i = 0; i < grown.size(); ++i) {
      Cluster& c = clusters_[static_cast<std::size_t>(grown[i])];
      if (c.count == 0) c.label = static_cast<PointId>(i);
      for (int ch = 0; ch < 3; ++ch) c.sum[ch] += color_to_fixed(cloud.colors[i][ch]);
      ++c.count;
    }
    std::vector<PointId> nbrs;
    for (std::size_t i = 0; i < grown.size(); ++i) {
      index.knn(static_cast<PointId>(i), k, nbrs);
      const auto ci = static_cast<std::uint32_t>(grown[i]);
      for (std::size_t j = 1; j < nbrs.size(); ++j) {
        const auto cj = static_cast<std::uint32_t>(grown[nbrs[j]]);
        if (ci == cj) continue;
        clusters_[ci].adj.insert(cj);
        clusters_[cj].adj.insert(ci);
      }
    }
  }

  void merge_similar(double t_merge) {
    using Entry = std::tuple<double, PointId, PointId, std::uint32_t, std::uint32_t, std::uint64_t, std::uint64_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    auto push_pairs = [&](std::uint32_t a) {
      for (std::uint32_t b : clusters_[a].adj) {
        const double d = mean_distance(a, b);
        if (!(d < t_merge)) continue;
        const PointId la = clusters_[a].label;
        const PointId lb = clusters_[b].label;
        heap.emplace(d, std::min(la, lb), std::max(la, lb), a, b, clusters_[a].version, clusters_[b].version);
      }
    };
    for (std::uint32_t a = 0; a < clusters_.size(); ++a) push_pairs(a);
    while (!heap.empty()) {
      const auto [d, lo, hi, a, b, va, vb] = heap.top();
      heap.pop();
      if (!clusters_[a].alive || !clusters_[b].alive || clusters_[a].version != va || clusters_[b].version != vb) {
        continue;
      }
      push_pairs(absorb(a, b));
    }
  }

  void absorb_small(std::size_t min_cluster) {
    std::set<std::tuple<std::size_t, PointId, std::uint32_t>> small;
    auto consider = [&](std::uint32_t c) {
      const Cluster& cl = clusters_[c];
      if (cl.alive && cl.count < min_cluster && !cl.adj.empty()) small.emplace(cl.count, cl.label, c);
    };
    for (std::uint32_t c = 0; c < clusters_.size(); ++c) consider(c);
    while (!small.empty()) {
      const std::uint32_t s = std::get<2>(*small.begin());
      small.erase(small.begin());
      std::uint32_t target = 0;
      double best = 0.0;
      PointId best_label = 0;
      bool found = false;
      for (std::uint32_t t : clusters_[s].adj) {
        const double d = mean_distance(s, t);
        const PointId lt = clusters_[t].label;
        if (!found || d < best || (d == best && lt < best_label)) {
          found = true;
          best = d;
          best_label = lt;
          target = t;
        }
      }
      small.erase({clusters_[target].count, clusters_[target].label, target});
      consider(absorb(target, s));
    }
  }

  std::uint32_t find(std::uint32_t c) {
    while (parent_[c] != c) c = parent_[c] = parent_[parent_[c]];
    return c;
  }

 private:
  struct Cluster {
    std::array<std::int64_t, 3> sum{0, 0, 0};
    std::size_t count = 0;
    PointId label = 0;  // smallest member id
    std::set<std::uint32_t> adj;
    std::uint64_t version = 0;
    bool alive = true;
  };

  double mean_distance(std::uint32_t a, std::uint32_t b) const {
    const Cluster& ca = clusters_[a];
    const Cluster& cb = clusters_[b];
    double acc = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double ma = static_cast<double>(ca.sum[ch]) / (static_cast<double>(ca.count) * kColorFixedScale);
      const double mb = static_cast<double>(cb.sum[ch]) / (static_cast<double>(cb.count) * kColorFixedScale);
      acc += (ma - mb) * (ma - mb);
    }
    return std::sqrt(acc);
  }

  /// Merges b into a and returns a.
  std::uint32_t absorb(std::uint32_t a, std::uint32_t b) {
    Cluster& ca = clusters_[a];
    Cluster& cb = clusters_[b];
    for (int ch = 0; ch < 3; ++ch) ca.sum[ch] += cb.sum[ch];
    ca.count += cb.count;
    ca.label = std::min(ca.label, cb.label);
    ca.adj.erase(b);
    for (std::uint32_t c : cb.adj) {
      if (c == a) continue;
      ca.adj.insert(c);
      clusters_[c].adj.erase(b);
      clusters_[c].adj.insert(a);
    }
    cb.adj.clear();
    cb.alive = false;
    ++ca.version;
    parent_[b] = a;
    return a;
  }

  std::vector<std::uint32_t> parent_;
  std::vector<Cluster> clusters_;
};

}  // namespace

SuperpointPartition grow_color(const PointCloud& cloud, const SpatialIndex& index, const GrowingConfig& cfg,
                               GrowthTrace* trace) {
  cfg.validate();
  cloud.validate();
  const std::size_t n = cloud.size();
  require(index.size() == n, "index and cloud sizes differ");

  const std::size_t k = neighbor_count(cfg, n);
  std::vector<std::int32_t> label(n, kNoGroup);
  std::vector<PointId> nbrs;
  std::deque<PointId> seeds;
  std::int32_t next_label = 0;

  for (PointId start = 0; start < n; ++start) {
    if (label[start] != kNoGroup) continue;
    const std::int32_t region = next_label++;
    label[start] = region;
    seeds.push_back(start);
    if (trace) trace->region_seeds.push_back(start);
    while (!seeds.empty()) {
      const PointId s = seeds.front();
      seeds.pop_front();
      index.knn(s, k, nbrs);
      for (std::size_t j = 1; j < nbrs.size(); ++j) {
        const PointId q = nbrs[j];
        if (label[q] != kNoGroup) continue;
        if (!(color_distance(cloud.colors[s], cloud.colors[q]) < cfg.t_clr)) continue;
        label[q] = region;
        if (trace) trace->admissions.push_back({s, q});
        seeds.push_back(q);
      }
    }
  }
  if (trace) trace->before_merge = SuperpointPartition::from_labels(label);

  ClusterMerger merger(cloud, label, static_cast<std::size_t>(next_label), index, k);
  merger.merge_similar(cfg.t_merge);
  merger.absorb_small(cfg.min_cluster);
  for (auto& l : label) l = static_cast<std::int32_t>(merger.find(static_cast<std::uint32_t>(l)));
  return SuperpointPartition::from_labels(label);
}

SuperpointPartition merge_partitions(const SuperpointPartition& geo, const SuperpointPartition& color) {
  require(geo.num_points() == color.num_points(),
          "partitions cover " + std::to_string(geo.num_points()) + " and " + std::to_string(color.num_points()) +
              " points");
  require(color.unclustered().empty(), "color partition must cluster every point");
  const std::size_t n = geo.num_points();
  std::unordered_map<std::int64_t, std::int32_t> cell;
  std::vector<std::int32_t> label(n, kNoGroup);
  const auto stride = static_cast<std::int64_t>(color.num_groups());
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<PointId>(i);
    if (!geo.is_clustered(id)) continue;
    const std::int64_t key = geo.group_of(id) * stride + color.group_of(id);
    label[i] = cell.try_emplace(key, static_cast<std::int32_t>(cell.size())).first->second;
  }
  return SuperpointPartition::from_labels(label);
}

}  // namespace spgseg
