#include "spgseg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "spgseg/error.hpp"
#include "spgseg/rng.hpp"

namespace spgseg {

namespace {

struct Rect {
  double u0, u1, v0, v1;
  bool contains(double u, double v) const { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
};

/// Oriented rectangle: origin + u * u_axis + v * v_axis, u in [0, lu], v in [0, lv].
struct Patch {
  Vec3 origin, u_axis, v_axis;
  double lu, lv;
  std::int32_t class_id;
  Vec3 color;
  int host = -1;  // side index when this is a wall or floor surface
};

struct Frame {
  Vec3 origin, u_axis, v_axis, inward;
  double lu, lv;
};

Frame host_frame(const SceneSpec& spec, Side side) {
  const double lx = spec.size_x, ly = spec.size_y, h = spec.height;
  switch (side) {
    case Side::South: return {{0, 0, 0}, Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY(), lx, h};
    case Side::East: return {{lx, 0, 0}, Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitX(), ly, h};
    case Side::North: return {{0, ly, 0}, Vec3::UnitX(), Vec3::UnitZ(), -Vec3::UnitY(), lx, h};
    case Side::West: return {{0, 0, 0}, Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX(), ly, h};
    case Side::Floor: return {{0, 0, 0}, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), lx, ly};
  }
  throw InputError("unknown side");
}

struct Overlay {
  Rect rect;
  std::int32_t class_id;
  Vec3 color;
};

}  // namespace

void SceneSpec::validate() const {
  require(size_x > 0 && size_y > 0 && height > 0, "room dimensions must be positive");
  require(!primitives.empty(), "scene spec lists no primitives");
  require(target_points >= 5000 && target_points <= 50000, "target_points must lie in [5000, 50000]");
  require(position_noise >= 0 && color_noise >= 0, "noise levels must be non-negative");
  require(num_classes >= 2, "scene needs at least 2 classes");
  for (const auto& p : primitives) {
    require(p.class_id >= 0 && static_cast<std::size_t>(p.class_id) < num_classes, "primitive class out of range");
    require((p.color.array() >= 0.0).all() && (p.color.array() <= 1.0).all(), "primitive color outside [0, 1]");
    if (p.kind == PrimitiveKind::Board || p.kind == PrimitiveKind::Beam) {
      require(p.u1 > p.u0 && p.v1 > p.v0, "board/beam rectangle is empty");
    }
    if (p.kind == PrimitiveKind::Beam) require(p.depth > 0 && p.side != Side::Floor, "beam needs a wall and depth");
    if (p.kind == PrimitiveKind::Box) require(p.x1 > p.x0 && p.y1 > p.y0 && p.depth > 0, "box is empty");
    if (p.kind == PrimitiveKind::Wall) require(p.side != Side::Floor, "walls cannot sit on the floor side");
  }
}

Scene generate_synthetic_scene(std::uint64_t seed, const SceneSpec& spec) {
  spec.validate();
  std::array<std::vector<Rect>, 5> cutouts;
  std::array<std::vector<Overlay>, 5> overlays;
  std::vector<Patch> patches;

  for (const auto& p : spec.primitives) {
    switch (p.kind) {
      case PrimitiveKind::Floor:
      case PrimitiveKind::Wall: {
        const Side side = p.kind == PrimitiveKind::Floor ? Side::Floor : p.side;
        const Frame f = host_frame(spec, side);
        patches.push_back({f.origin, f.u_axis, f.v_axis, f.lu, f.lv, p.class_id, p.color, static_cast<int>(side)});
        break;
      }
      case PrimitiveKind::Board:
        overlays[static_cast<int>(p.side)].push_back({{p.u0, p.u1, p.v0, p.v1}, p.class_id, p.color});
        break;
      case PrimitiveKind::Beam: {
        const Frame f = host_frame(spec, p.side);
        cutouts[static_cast<int>(p.side)].push_back({p.u0, p.u1, p.v0, p.v1});
        const Vec3 base = f.origin + p.u0 * f.u_axis + p.v0 * f.v_axis;
        const double du = p.u1 - p.u0, dv = p.v1 - p.v0, d = p.depth;
        patches.push_back({base + d * f.inward, f.u_axis, f.v_axis, du, dv, p.class_id, p.color});
        patches.push_back({base, f.u_axis, f.inward, du, d, p.class_id, p.color});
        patches.push_back({base + dv * f.v_axis, f.u_axis, f.inward, du, d, p.class_id, p.color});
        patches.push_back({base, f.inward, f.v_axis, d, dv, p.class_id, p.color});
        patches.push_back({base + du * f.u_axis, f.inward, f.v_axis, d, dv, p.class_id, p.color});
        break;
      }
      case PrimitiveKind::Box: {
        cutouts[static_cast<int>(Side::Floor)].push_back({p.x0, p.x1, p.y0, p.y1});
        const double sx = p.x1 - p.x0, sy = p.y1 - p.y0, h = p.depth;
        const Vec3 o(p.x0, p.y0, 0.0);
        patches.push_back({o + h * Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY(), sx, sy, p.class_id, p.color});
        patches.push_back({o, Vec3::UnitX(), Vec3::UnitZ(), sx, h, p.class_id, p.color});
        patches.push_back({o + sy * Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ(), sx, h, p.class_id, p.color});
        patches.push_back({o, Vec3::UnitY(), Vec3::UnitZ(), sy, h, p.class_id, p.color});
        patches.push_back({o + sx * Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), sy, h, p.class_id, p.color});
        break;
      }
    }
  }

  double area = 0.0;
  for (const auto& patch : patches) area += patch.lu * patch.lv;
  const double density = static_cast<double>(spec.target_points) / area;

  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.id = "synthetic-" + std::to_string(seed);
  std::vector<std::int32_t> classes;
  for (const auto& patch : patches) {
    const auto count = static_cast<std::size_t>(std::llround(patch.lu * patch.lv * density));
    for (std::size_t s = 0; s < count; ++s) {
      const double u = unit(rng) * patch.lu;
      const double v = unit(rng) * patch.lv;
      Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
      Vec3 color_noise(gauss(rng), gauss(rng), gauss(rng));
      std::int32_t cls = patch.class_id;
      Vec3 color = patch.color;
      if (patch.host >= 0) {
        const auto& cuts = cutouts[static_cast<std::size_t>(patch.host)];
        if (std::any_of(cuts.begin(), cuts.end(), [&](const Rect& r) { return r.contains(u, v); })) continue;
        for (const auto& o : overlays[static_cast<std::size_t>(patch.host)]) {
          if (o.rect.contains(u, v)) {
            cls = o.class_id;
            color = o.color;
          }
        }
      }
      const Vec3 position = patch.origin + u * patch.u_axis + v * patch.v_axis + spec.position_noise * noise;
      const Vec3 noisy_color = (color + spec.color_noise * color_noise).cwiseMax(0.0).cwiseMin(1.0);
      scene.cloud.add(position, noisy_color);
      classes.push_back(cls);
    }
  }
  scene.truth = LabelSet(std::move(classes), spec.num_classes);
  return scene;
}

namespace {

Primitive floor_primitive(Vec3 color) {
  Primitive p;
  p.kind = PrimitiveKind::Floor;
  p.class_id = kFloor;
  p.color = color;
  return p;
}

Primitive wall_primitive(Side side, Vec3 color) {
  Primitive p;
  p.kind = PrimitiveKind::Wall;
  p.class_id = kWall;
  p.side = side;
  p.color = color;
  return p;
}

const Vec3 kFloorColor(0.50, 0.42, 0.34);
const Vec3 kWallColor(0.80, 0.77, 0.70);
const Vec3 kBoardColor(0.20, 0.42, 0.30);

}  // namespace

SceneSpec floor_only_spec() {
  SceneSpec spec;
  spec.primitives = {floor_primitive(kFloorColor)};
  return spec;
}

SceneSpec floor_with_board_spec() {
  SceneSpec spec = floor_only_spec();
  Primitive board;
  board.kind = PrimitiveKind::Board;
  board.class_id = kBoard;
  board.side = Side::Floor;
  board.color = kBoardColor;
  board.u0 = 1.0, board.u1 = 2.0, board.v0 = 1.0, board.v1 = 2.0;
  spec.primitives.push_back(board);
  return spec;
}

SceneSpec floor_and_wall_spec() {
  SceneSpec spec = floor_only_spec();
  spec.primitives.push_back(wall_primitive(Side::South, kFloorColor));
  return spec;
}

SceneSpec wall_with_beam_spec() {
  SceneSpec spec;
  spec.primitives = {wall_primitive(Side::South, kWallColor)};
  Primitive beam;
  beam.kind = PrimitiveKind::Beam;
  beam.class_id = kBeam;
  beam.side = Side::South;
  beam.color = kWallColor;
  beam.u0 = 0.4, beam.u1 = 2.6, beam.v0 = 1.2, beam.v1 = 1.5, beam.depth = 0.25;
  spec.primitives.push_back(beam);
  return spec;
}

SceneSpec random_room_spec(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, {0x726f6f6dULL}));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto jitter = [&](const Vec3& c, double amount) -> Vec3 {
    const Vec3 offset(uniform(-amount, amount), uniform(-amount, amount), uniform(-amount, amount));
    return (c + offset).cwiseMax(0.0).cwiseMin(1.0);
  };

  SceneSpec spec;
  spec.size_x = uniform(2.6, 3.4);
  spec.size_y = uniform(2.6, 3.4);
  spec.height = uniform(2.0, 2.4);

  const Vec3 wall_color = jitter(kWallColor, 0.05);
  spec.primitives.push_back(floor_primitive(jitter(kFloorColor, 0.05)));
  spec.primitives.push_back(wall_primitive(Side::South, wall_color));
  spec.primitives.push_back(wall_primitive(Side::West, wall_color));

  // The board and the beam sit on different walls.
  const bool board_south = uniform(0.0, 1.0) < 0.5;
  const Side board_side = board_south ? Side::South : Side::West;
  const Side beam_side = board_south ? Side::West : Side::South;
  auto wall_length = [&](Side s) { return s == Side::South ? spec.size_x : spec.size_y; };

  static const std::array<Vec3, 3> kBoardPalette = {Vec3(0.20, 0.42, 0.30), Vec3(0.95, 0.95, 0.97),
                                                    Vec3(0.15, 0.18, 0.22)};
  static const std::array<Vec3, 3> kBoxPalette = {Vec3(0.70, 0.20, 0.18), Vec3(0.20, 0.30, 0.65),
                                                  Vec3(0.85, 0.55, 0.15)};
  auto pick = [&](const std::array<Vec3, 3>& palette) {
    return palette[std::uniform_int_distribution<std::size_t>(0, palette.size() - 1)(rng)];
  };

  Primitive board;
  board.kind = PrimitiveKind::Board;
  board.class_id = kBoard;
  board.side = board_side;
  board.color = jitter(pick(kBoardPalette), 0.03);
  const double board_width = uniform(0.8, 1.3);
  board.u0 = uniform(0.4, wall_length(board_side) - board_width - 0.3);
  board.u1 = board.u0 + board_width;
  board.v0 = uniform(0.7, 1.0);
  board.v1 = board.v0 + uniform(0.6, 0.9);
  spec.primitives.push_back(board);

  Primitive beam;
  beam.kind = PrimitiveKind::Beam;
  beam.class_id = kBeam;
  beam.side = beam_side;
  beam.color = wall_color;
  beam.u0 = uniform(0.2, 0.6);
  beam.u1 = wall_length(beam_side) - uniform(0.2, 0.6);
  beam.v1 = spec.height - uniform(0.1, 0.3);
  beam.v0 = beam.v1 - uniform(0.25, 0.35);
  beam.depth = uniform(0.18, 0.28);
  spec.primitives.push_back(beam);

  Primitive box;
  box.kind = PrimitiveKind::Box;
  box.class_id = kBox;
  box.color = jitter(pick(kBoxPalette), 0.03);
  const double sx = uniform(0.5, 0.9), sy = uniform(0.5, 0.9);
  box.x0 = uniform(0.8, spec.size_x - sx - 0.3);
  box.y0 = uniform(0.8, spec.size_y - sy - 0.3);
  box.x1 = box.x0 + sx;
  box.y1 = box.y0 + sy;
  box.depth = uniform(0.45, 0.8);
  spec.primitives.push_back(box);
  return spec;
}

}  // namespace spgseg
