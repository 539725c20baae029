#pragma once

// Random inputs shared by the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spgseg/labels.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"

namespace fixtures {

using spgseg::PointCloud;
using spgseg::Vec3;

/// Points uniform in the unit cube with uniform colors.
inline PointCloud uniform_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.add(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)));
  return c;
}

/// Integer lattice: many exactly tied distances.
inline PointCloud lattice_cloud(int nx, int ny, int nz) {
  PointCloud c;
  for (int z = 0; z < nz; ++z) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) c.add(Vec3(x, y, z), Vec3::Constant(0.5));
    }
  }
  return c;
}

/// A few planar rectangles (random orientation, some axis aligned) with
/// patch colors from a small palette, color splits inside patches, position
/// and color noise, and a sprinkle of scattered outliers. Exercises both
/// region growers non-trivially.
inline PointCloud piecewise_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::vector<Vec3> palette = {{0.8, 0.2, 0.2}, {0.2, 0.7, 0.3}, {0.25, 0.3, 0.8}, {0.6, 0.6, 0.55}};

  struct Patch {
    Vec3 origin, du, dv;
    Vec3 color_a, color_b;
    double split;  // fraction along u where the color switches
  };
  const int patches = 2 + static_cast<int>(u(rng) * 3.0);
  std::vector<Patch> ps;
  for (int p = 0; p < patches; ++p) {
    Patch q;
    q.origin = Vec3(u(rng), u(rng), u(rng)) * 2.0;
    if (u(rng) < 0.6) {
      const int axis = static_cast<int>(u(rng) * 3.0) % 3;
      q.du = Vec3::Unit((axis + 1) % 3);
      q.dv = Vec3::Unit((axis + 2) % 3);
    } else {
      const Vec3 a = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
      Vec3 b = Vec3(gauss(rng), gauss(rng), gauss(rng));
      b = (b - b.dot(a) * a).normalized();
      q.du = a;
      q.dv = b;
    }
    const double su = 0.6 + u(rng), sv = 0.6 + u(rng);
    q.du *= su;
    q.dv *= sv;
    q.color_a = palette[static_cast<std::size_t>(u(rng) * palette.size()) % palette.size()];
    q.color_b = u(rng) < 0.5 ? q.color_a : palette[static_cast<std::size_t>(u(rng) * palette.size()) % palette.size()];
    q.split = 0.3 + 0.4 * u(rng);
    ps.push_back(q);
  }
  const double pos_noise = 0.002 * u(rng);
  const double color_noise = (1.0 + 2.0 * u(rng)) / 255.0;
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    if (u(rng) < 0.03) {
      c.add(Vec3(u(rng), u(rng), u(rng)) * 3.0, Vec3(u(rng), u(rng), u(rng)));
      continue;
    }
    const Patch& q = ps[static_cast<std::size_t>(u(rng) * ps.size()) % ps.size()];
    const double a = u(rng), b = u(rng);
    Vec3 pos = q.origin + a * q.du + b * q.dv;
    for (int k = 0; k < 3; ++k) pos[k] += pos_noise * gauss(rng);
    Vec3 col = a < q.split ? q.color_a : q.color_b;
    for (int k = 0; k < 3; ++k) col[k] = std::clamp(col[k] + color_noise * gauss(rng), 0.0, 1.0);
    c.add(pos, col);
  }
  return c;
}

/// Random membership: `groups` groups plus roughly `unclustered_share` residue.
inline std::vector<std::int32_t> random_membership(std::size_t n, std::size_t groups, double unclustered_share,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::int32_t> m(n);
  for (auto& v : m) {
    v = u(rng) < unclustered_share ? spgseg::kNoGroup
                                   : static_cast<std::int32_t>(static_cast<std::size_t>(u(rng) * groups) % groups);
  }
  return m;
}

/// Pseudo labels biased toward one class per group so that some groups are
/// nearly pure and others mixed.
inline spgseg::LabelSet biased_labels(const std::vector<std::int32_t>& membership, std::size_t classes,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> purity(membership.size() + 1), favored(membership.size() + 1);
  for (std::size_t g = 0; g < purity.size(); ++g) {
    purity[g] = 0.5 + 0.5 * u(rng);
    favored[g] = static_cast<double>(static_cast<std::size_t>(u(rng) * classes) % classes);
  }
  spgseg::LabelSet l = spgseg::LabelSet::unlabeled(membership.size(), classes);
  for (std::size_t i = 0; i < membership.size(); ++i) {
    const auto g = static_cast<std::size_t>(membership[i] + 1);
    l.class_of[i] = u(rng) < purity[g] ? static_cast<std::int32_t>(favored[g])
                                       : static_cast<std::int32_t>(static_cast<std::size_t>(u(rng) * classes) % classes);
  }
  return l;
}

}  // namespace fixtures
