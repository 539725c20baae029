#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spgseg/labels.hpp"
#include "spgseg/model.hpp"
#include "spgseg/partition.hpp"
#include "spgseg/point_cloud.hpp"

namespace spgseg {

/// Text cloud: one `x y z r g b [label]` point per line, `#` starts a comment
/// line. Label -1 or a missing seventh column means unlabeled.
struct CloudFile {
  PointCloud cloud;
  /// Present when at least one line carries a label column.
  std::optional<LabelSet> labels;
};

/// Colors are read as 0-255 when any channel value exceeds 1, else as 0-1.
/// `num_classes` = 0 infers max(label) + 1 (at least 2). Malformed input raises
/// InputError naming `source`, the line and the column.
CloudFile parse_cloud(std::istream& in, const std::string& source, std::size_t num_classes = 0);
CloudFile read_cloud(const std::filesystem::path& path, std::size_t num_classes = 0);

/// Writes 17 significant digits and colors in [0, 1].
std::string format_cloud(const PointCloud& cloud, const LabelSet* labels);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, const LabelSet* labels);

/// Writes through a sibling temporary file and a rename. Throws IoError.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

using Rgb8 = std::array<std::uint8_t, 3>;

inline constexpr Rgb8 kBlack{0, 0, 0};

/// Deterministic non-black color for a group id.
Rgb8 group_color(std::uint32_t group);
/// Unclustered points are black.
std::vector<Rgb8> superpoint_coloring(const SuperpointPartition& sp);
/// Fixed palette per class; unlabeled points are black.
std::vector<Rgb8> label_coloring(std::span<const std::int32_t> classes);
/// Edge points black, others white.
std::vector<Rgb8> edge_coloring(const EdgeLabels& edges);

/// ASCII PLY with float xyz and uchar rgb vertices.
std::string format_ply(const PointCloud& cloud, std::span<const Rgb8> colors);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, std::span<const Rgb8> colors);

/// {"format":"spgseg.partition","version":1,"num_points","content_hash","groups","unclustered"}.
nlohmann::ordered_json partition_to_json(const SuperpointPartition& sp, std::uint64_t content_hash);
struct PartitionFile {
  SuperpointPartition partition;
  std::uint64_t content_hash = 0;
};
PartitionFile partition_from_json(const nlohmann::json& j);

/// One class per line, -1 for unlabeled, `#` comments allowed.
LabelSet parse_labels(std::istream& in, const std::string& source, std::size_t num_classes);
std::string format_labels(const LabelSet& labels);

/// Model checkpoint: widths plus every tensor as rows/cols/row-major data.
nlohmann::ordered_json params_to_json(const ModelParams& params, const ModelConfig& cfg);
ModelParams params_from_json(const nlohmann::json& j, const ModelConfig& cfg);

/// Hex spelling used for 64-bit hashes in JSON (JSON numbers lose precision).
std::string hex64(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

}  // namespace spgseg
