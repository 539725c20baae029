#include "spgseg/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spgseg/error.hpp"

namespace spgseg {

std::size_t LabelSet::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(class_of.begin(), class_of.end(), [](std::int32_t c) { return c != kNoLabel; }));
}

void LabelSet::validate() const {
  require(num_classes >= 2, "a label set needs at least 2 classes");
  for (std::size_t i = 0; i < class_of.size(); ++i) {
    const std::int32_t c = class_of[i];
    require(c == kNoLabel || (c >= 0 && static_cast<std::size_t>(c) < num_classes),
            "point " + std::to_string(i) + " has class " + std::to_string(c) + " outside [0, " +
                std::to_string(num_classes) + ")");
  }
}

LabelSet LabelSet::restrict_to(std::span<const PointId> ids) const {
  LabelSet out = unlabeled(ids.size(), num_classes);
  for (std::size_t i = 0; i < ids.size(); ++i) out.class_of[i] = class_of.at(ids[i]);
  return out;
}

std::size_t EdgeLabels::edge_count() const {
  return static_cast<std::size_t>(std::count(is_edge.begin(), is_edge.end(), std::uint8_t{1}));
}

EdgeLabels EdgeLabels::restrict_to(std::span<const PointId> ids) const {
  EdgeLabels out;
  out.is_edge.resize(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out.is_edge[i] = is_edge.at(ids[i]);
  return out;
}

Ratio Ratio::from_double(double value) {
  require(std::isfinite(value) && value > 0.0 && value < 1.0, "ratio must lie strictly between 0 and 1");
  for (std::int64_t den = 1; den <= 1'000'000; ++den) {
    const auto num = static_cast<std::int64_t>(std::llround(value * static_cast<double>(den)));
    if (num > 0 && num < den && std::abs(static_cast<double>(num) / static_cast<double>(den) - value) < 1e-12) {
      const std::int64_t g = std::gcd(num, den);
      return {num / g, den / g};
    }
  }
  throw InputError("ratio " + std::to_string(value) + " has no exact fraction with denominator <= 1e6");
}

std::string Ratio::to_string() const { return std::to_string(num) + "/" + std::to_string(den); }

LabelSet optimize_pseudo_labels(const SuperpointPartition& sp, const LabelSet& pseudo, Ratio t_plo) {
  require(t_plo.den > 0 && t_plo.num > 0 && t_plo.num < t_plo.den, "t_plo must lie strictly between 0 and 1");
  require(pseudo.size() == sp.num_points(), "pseudo labels cover " + std::to_string(pseudo.size()) +
                                                " points, superpoints cover " + std::to_string(sp.num_points()));
  pseudo.validate();

  LabelSet out = LabelSet::unlabeled(pseudo.size(), pseudo.num_classes);
  std::vector<std::int64_t> counts(pseudo.num_classes);
  for (const auto& group : sp.groups()) {
    std::fill(counts.begin(), counts.end(), 0);
    for (PointId id : group) {
      if (pseudo.has_label(id)) ++counts[static_cast<std::size_t>(pseudo.class_of[id])];
    }
    // max_element returns the first maximum, i.e. the smallest class index.
    const auto winner = std::max_element(counts.begin(), counts.end());
    const auto n = static_cast<std::int64_t>(group.size());
    if (*winner * t_plo.den > t_plo.num * n) {
      const auto cls = static_cast<std::int32_t>(winner - counts.begin());
      for (PointId id : group) out.class_of[id] = cls;
    }
  }
  return out;
}

EdgeLabels compute_edge_labels(const SuperpointPartition& geo, const SuperpointPartition& color,
                               const SpatialIndex& index, std::size_t k_edge) {
  const std::size_t n = geo.num_points();
  require(color.num_points() == n && index.size() == n, "edge inputs cover different point counts");
  require(color.unclustered().empty(), "color partition must cluster every point");
  require(k_edge >= 1 && k_edge <= n,
          "k_edge=" + std::to_string(k_edge) + " must lie in [1, " + std::to_string(n) + "]");
  EdgeLabels out;
  out.is_edge.assign(n, 0);
  std::vector<PointId> nbrs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<PointId>(i);
    if (!geo.is_clustered(id)) {
      out.is_edge[i] = 1;
      continue;
    }
    index.knn(id, k_edge, nbrs);
    const std::int32_t own = color.group_of(id);
    out.is_edge[i] = std::any_of(nbrs.begin(), nbrs.end(), [&](PointId q) { return color.group_of(q) != own; });
  }
  return out;
}

}  // namespace spgseg
