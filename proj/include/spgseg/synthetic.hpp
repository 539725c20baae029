#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spgseg/labels.hpp"
#include "spgseg/point_cloud.hpp"

namespace spgseg {

/// A labeled or unlabeled scene.
struct Scene {
  std::string id;
  PointCloud cloud;
  std::optional<LabelSet> truth;
};

enum class PrimitiveKind {
  Floor,  ///< z = 0 rectangle covering the room footprint
  Wall,   ///< vertical rectangle along one side of the room
  Box,    ///< axis-aligned box standing on the floor (differs in geometry and color)
  Board,  ///< coplanar patch on a wall or the floor (differs only in color)
  Beam,   ///< bar protruding from a wall, host-colored (differs only in geometry)
};

/// Room sides for walls, boards and beams.
enum class Side : int { South = 0, East = 1, North = 2, West = 3, Floor = 4 };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Floor;
  std::int32_t class_id = 0;
  Vec3 color = Vec3::Constant(0.5);
  Side side = Side::South;
  /// Board/Beam rectangle on the host, in host (u, v) coordinates (meters).
  /// Walls: u runs along the wall, v is height. Floor: u = x, v = y.
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  /// Beam protrusion or box height.
  double depth = 0;
  /// Box footprint.
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

struct SceneSpec {
  double size_x = 3.0;
  double size_y = 3.0;
  double height = 2.0;
  /// Approximate point count; density is spread uniformly over all surfaces.
  std::size_t target_points = 6000;
  double position_noise = 0.001;   // meters, per axis
  double color_noise = 1.0 / 255;  // per channel, [0, 1] units
  std::size_t num_classes = 5;
  std::vector<Primitive> primitives;

  void validate() const;
};

/// Class ids used by the preset scenes.
enum RoomClass : std::int32_t { kFloor = 0, kWall = 1, kBoard = 2, kBeam = 3, kBox = 4 };
inline constexpr std::size_t kRoomClasses = 5;

/// Samples every primitive's surfaces. Boards relabel and recolor the host
/// surface inside their rectangle; boxes and beams hide the host surface they
/// cover.
Scene generate_synthetic_scene(std::uint64_t seed, const SceneSpec& spec);

/// Preset specs. The randomized room has a floor, two walls, a board on one
/// wall, a beam on the other and a box; its colors and layout vary with `seed`.
SceneSpec floor_only_spec();
SceneSpec floor_with_board_spec();
SceneSpec floor_and_wall_spec();
SceneSpec wall_with_beam_spec();
SceneSpec random_room_spec(std::uint64_t seed);

}  // namespace spgseg
