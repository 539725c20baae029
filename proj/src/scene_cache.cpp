#include "spgseg/scene_cache.hpp"

#include <cstdlib>

#include "spgseg/error.hpp"
#include "spgseg/io.hpp"

namespace spgseg {

void GeometryConfig::validate() const {
  growing.validate();
  require(k_normal >= 3, "k_normal must be at least 3");
  require(k_edge >= 1, "k_edge must be at least 1");
}

SceneGeometry compute_scene_geometry(const PointCloud& cloud, const GeometryConfig& cfg) {
  cfg.validate();
  SceneGeometry g{build_index(cloud), {}, {}, {}, {}, {}};
  g.surface = estimate_surface(cloud, g.index, std::min(cfg.k_normal, cloud.size()));
  g.geometric = grow_geometric(cloud, g.surface, g.index, cfg.growing, nullptr);
  g.color = grow_color(cloud, g.index, cfg.growing, nullptr);
  g.merged = merge_partitions(g.geometric, g.color);
  g.edges = compute_edge_labels(g.geometric, g.color, g.index, std::min(cfg.k_edge, cloud.size()));
  return g;
}

std::uint64_t geometry_key(const PointCloud& cloud, const GeometryConfig& cfg) {
  std::uint64_t h = content_hash(cloud);
  const GrowingConfig& gr = cfg.growing;
  const double reals[] = {gr.t_ang, gr.t_cvt, gr.t_clr, gr.t_merge};
  const std::uint64_t counts[] = {gr.k_grow, gr.min_cluster, cfg.k_normal, cfg.k_edge};
  h = hash_bytes(h, reals, sizeof reals);
  return hash_bytes(h, counts, sizeof counts);
}

SceneCache::SceneCache(std::optional<std::filesystem::path> directory) : directory_(std::move(directory)) {
  if (directory_) {
    std::error_code ec;
    std::filesystem::create_directories(*directory_, ec);
    if (ec) throw IoError("cannot create cache directory " + directory_->string());
  }
}

SceneCache SceneCache::from_environment() {
  const char* dir = std::getenv("SPGSEG_CACHE_DIR");
  if (dir && *dir) return SceneCache(std::filesystem::path(dir));
  return SceneCache();
}

std::shared_ptr<const SceneGeometry> SceneCache::get(const PointCloud& cloud, const GeometryConfig& cfg) {
  const std::uint64_t key = geometry_key(cloud, cfg);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++memory_hits_;
      return it->second;
    }
  }
  std::optional<SceneGeometry> geo;
  std::filesystem::path file;
  bool from_disk = false;
  if (directory_) {
    file = *directory_ / ("geometry-" + hex64(key) + ".json");
    geo = load(file, cloud, key);
    from_disk = geo.has_value();
  }
  if (!geo) {
    geo = compute_scene_geometry(cloud, cfg);
    if (directory_) store(file, *geo, key);
  }
  auto shared = std::make_shared<const SceneGeometry>(std::move(*geo));
  std::lock_guard lock(mutex_);
  (from_disk ? disk_hits_ : misses_)++;
  return entries_.try_emplace(key, std::move(shared)).first->second;
}

std::optional<SceneGeometry> SceneCache::load(const std::filesystem::path& file, const PointCloud& cloud,
                                              std::uint64_t key) const {
  if (!std::filesystem::exists(file)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(read_text(file));
    require(j.at("format").get<std::string>() == "spgseg.geometry", "not a geometry entry");
    require(parse_hex64(j.at("key").get<std::string>()) == key, "key mismatch");
    const std::size_t n = cloud.size();
    SceneGeometry g{build_index(cloud), {}, {}, {}, {}, {}};
    const auto normals = j.at("normals").get<std::vector<double>>();
    g.surface.curvatures = j.at("curvatures").get<std::vector<double>>();
    g.surface.degenerate_count = j.at("degenerate_count").get<std::size_t>();
    require(normals.size() == 3 * n && g.surface.curvatures.size() == n, "surface size mismatch");
    g.surface.normals.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.surface.normals[i] = Vec3(normals[3 * i], normals[3 * i + 1], normals[3 * i + 2]);
    g.geometric = partition_from_json(j.at("geometric")).partition;
    g.color = partition_from_json(j.at("color")).partition;
    g.merged = partition_from_json(j.at("merged")).partition;
    g.edges.is_edge = j.at("edges").get<std::vector<std::uint8_t>>();
    require(g.geometric.num_points() == n && g.color.num_points() == n && g.merged.num_points() == n &&
                g.edges.size() == n,
            "partition size mismatch");
    return g;
  } catch (const std::exception&) {
    std::lock_guard lock(mutex_);
    ++disk_rejects_;
    return std::nullopt;
  }
}

void SceneCache::store(const std::filesystem::path& file, const SceneGeometry& g, std::uint64_t key) const {
  nlohmann::ordered_json j;
  j["format"] = "spgseg.geometry";
  j["key"] = hex64(key);
  std::vector<double> normals;
  normals.reserve(3 * g.surface.normals.size());
  for (const Vec3& v : g.surface.normals) normals.insert(normals.end(), {v.x(), v.y(), v.z()});
  j["normals"] = normals;
  j["curvatures"] = g.surface.curvatures;
  j["degenerate_count"] = g.surface.degenerate_count;
  j["geometric"] = partition_to_json(g.geometric, key);
  j["color"] = partition_to_json(g.color, key);
  j["merged"] = partition_to_json(g.merged, key);
  j["edges"] = g.edges.is_edge;
  // A failed write only costs a recomputation next time.
  try {
    write_text_atomic(file, j.dump());
  } catch (const IoError&) {
  }
}

std::size_t SceneCache::memory_hits() const {
  std::lock_guard lock(mutex_);
  return memory_hits_;
}
std::size_t SceneCache::disk_hits() const {
  std::lock_guard lock(mutex_);
  return disk_hits_;
}
std::size_t SceneCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}
std::size_t SceneCache::disk_rejects() const {
  std::lock_guard lock(mutex_);
  return disk_rejects_;
}

}  // namespace spgseg
