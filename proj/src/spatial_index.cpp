#include "spgseg/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "spgseg/error.hpp"
#include "spgseg/parallel.hpp"

namespace spgseg {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) : points_(cloud.positions) {
  require(!points_.empty(), "cannot index an empty cloud");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), PointId{0});
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](PointId a, PointId b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SpatialIndex::search(std::int32_t node_id, const Vec3& q, PointId query, std::size_t k,
                          std::vector<Candidate>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const PointId id = order_[i];
      // The query itself ranks ahead of everything, including coincident points.
      const Candidate c{id == query ? -1.0 : squared_distance(q, points_[id]), id};
      if (heap.size() < k) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end());
      } else if (c < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = c;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, query, k, heap);
  // Equal distances may still hide a smaller id on the far side, so prune strictly.
  if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, q, query, k, heap);
}

void SpatialIndex::knn(PointId query, std::size_t k, std::vector<PointId>& out) const {
  require(query < points_.size(), "query id " + std::to_string(query) + " out of range");
  require(k >= 1 && k <= points_.size(),
          "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(points_.size()) + "]");
  std::vector<Candidate> heap;
  heap.reserve(k);
  search(0, points_[query], query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = heap[i].id;
}

std::vector<PointId> SpatialIndex::knn(PointId query, std::size_t k) const {
  std::vector<PointId> out;
  knn(query, k, out);
  return out;
}

SpatialIndex build_index(const PointCloud& cloud) {
  cloud.validate();
  return SpatialIndex(cloud);
}

NeighborTable knn_table(const SpatialIndex& index, std::size_t k) {
  require(k >= 1 && k <= index.size(),
          "neighbor count " + std::to_string(k) + " exceeds cloud size " + std::to_string(index.size()));
  NeighborTable table{k, std::vector<PointId>(index.size() * k)};
  parallel_for(index.size(), [&](std::size_t i) {
    std::vector<PointId> row;
    index.knn(static_cast<PointId>(i), k, row);
    std::copy(row.begin(), row.end(), table.ids.begin() + static_cast<std::ptrdiff_t>(i * k));
  }, 256);
  return table;
}

}  // namespace spgseg
