#include "spgseg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "spgseg/error.hpp"
#include "spgseg/rng.hpp"

namespace spgseg {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::string where(const std::string& source, std::size_t line, std::size_t column) {
  return source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
}

double parse_real(const Token& t, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto* end = t.text.data() + t.text.size();
  const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InputError(where(source, line, t.column) + "expected a number, got '" + std::string(t.text) + "'");
  }
  if (!std::isfinite(v)) throw InputError(where(source, line, t.column) + "non-finite value");
  return v;
}

std::int32_t parse_class(const Token& t, const std::string& source, std::size_t line) {
  std::int32_t v = 0;
  const auto* end = t.text.data() + t.text.size();
  const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || ptr != end || v < kNoLabel) {
    throw InputError(where(source, line, t.column) + "expected a class id >= -1, got '" + std::string(t.text) + "'");
  }
  return v;
}

bool is_blank_or_comment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

CloudFile parse_cloud(std::istream& in, const std::string& source, std::size_t num_classes) {
  std::vector<Vec3> positions, colors;
  std::vector<std::int32_t> classes;
  bool any_label = false;
  std::int32_t max_class = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    const auto tokens = tokenize(line);
    if (tokens.size() != 6 && tokens.size() != 7) {
      const std::size_t col = tokens.size() > 7 ? tokens[7].column : line.size() + 1;
      throw InputError(where(source, line_no, col) + "expected 6 or 7 columns, found " +
                       std::to_string(tokens.size()));
    }
    Vec3 p, c;
    for (int k = 0; k < 3; ++k) p[k] = parse_real(tokens[k], source, line_no);
    for (int k = 0; k < 3; ++k) {
      c[k] = parse_real(tokens[3 + k], source, line_no);
      if (c[k] < 0.0) throw InputError(where(source, line_no, tokens[3 + k].column) + "negative color");
    }
    std::int32_t cls = kNoLabel;
    if (tokens.size() == 7) {
      any_label = true;
      cls = parse_class(tokens[6], source, line_no);
      if (num_classes > 0 && cls >= static_cast<std::int32_t>(num_classes)) {
        throw InputError(where(source, line_no, tokens[6].column) + "class " + std::to_string(cls) +
                         " out of range for " + std::to_string(num_classes) + " classes");
      }
      max_class = std::max(max_class, cls);
    }
    positions.push_back(p);
    colors.push_back(c);
    classes.push_back(cls);
  }
  if (in.bad()) throw IoError("read failure on " + source);
  if (positions.empty()) throw InputError(source + ": no points");

  const bool byte_scale = std::any_of(colors.begin(), colors.end(), [](const Vec3& c) { return (c.array() > 1.0).any(); });
  if (byte_scale) {
    for (std::size_t i = 0; i < colors.size(); ++i) {
      if ((colors[i].array() > 255.0).any()) {
        throw InputError(source + ": point " + std::to_string(i) + " has a color channel above 255");
      }
      colors[i] /= 255.0;
    }
  }

  CloudFile out;
  out.cloud.positions = std::move(positions);
  out.cloud.colors = std::move(colors);
  out.cloud.validate();
  if (any_label) {
    const std::size_t c = num_classes > 0 ? num_classes : std::max<std::size_t>(2, static_cast<std::size_t>(max_class + 1));
    out.labels = LabelSet(std::move(classes), c);
  }
  return out;
}

CloudFile read_cloud(const std::filesystem::path& path, std::size_t num_classes) {
  auto in = open_input(path);
  return parse_cloud(in, path.string(), num_classes);
}

std::string format_cloud(const PointCloud& cloud, const LabelSet* labels) {
  require(!labels || labels->size() == cloud.size(), "label count differs from point count");
  std::string out;
  out.reserve(cloud.size() * 120);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& c = cloud.colors[i];
    out += format_real(p.x()) + ' ' + format_real(p.y()) + ' ' + format_real(p.z()) + ' ';
    out += format_real(c.x()) + ' ' + format_real(c.y()) + ' ' + format_real(c.z());
    if (labels) out += ' ' + std::to_string(labels->class_of[i]);
    out += '\n';
  }
  return out;
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, const LabelSet* labels) {
  write_text_atomic(path, format_cloud(cloud, labels));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failure on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Rgb8 group_color(std::uint32_t group) {
  const std::uint64_t h = splitmix64(0x5350ULL ^ static_cast<std::uint64_t>(group));
  // Channels in [40, 255] keep every group visibly distinct from black.
  Rgb8 c;
  for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(40 + ((h >> (16 * k)) & 0xffff) % 216);
  return c;
}

std::vector<Rgb8> superpoint_coloring(const SuperpointPartition& sp) {
  std::vector<Rgb8> out(sp.num_points(), kBlack);
  for (std::size_t g = 0; g < sp.num_groups(); ++g) {
    const Rgb8 c = group_color(static_cast<std::uint32_t>(g));
    for (PointId id : sp.group(g)) out[id] = c;
  }
  return out;
}

std::vector<Rgb8> label_coloring(std::span<const std::int32_t> classes) {
  static constexpr std::array<Rgb8, 8> kPalette = {{{158, 118, 86},
                                                    {200, 200, 190},
                                                    {40, 150, 70},
                                                    {230, 160, 30},
                                                    {200, 50, 50},
                                                    {60, 90, 200},
                                                    {150, 60, 170},
                                                    {60, 190, 200}}};
  std::vector<Rgb8> out(classes.size(), kBlack);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::int32_t c = classes[i];
    if (c == kNoLabel) continue;
    out[i] = c < static_cast<std::int32_t>(kPalette.size()) ? kPalette[static_cast<std::size_t>(c)]
                                                            : group_color(static_cast<std::uint32_t>(c));
  }
  return out;
}

std::vector<Rgb8> edge_coloring(const EdgeLabels& edges) {
  std::vector<Rgb8> out(edges.size(), Rgb8{255, 255, 255});
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges.is_edge[i]) out[i] = kBlack;
  }
  return out;
}

std::string format_ply(const PointCloud& cloud, std::span<const Rgb8> colors) {
  require(colors.size() == cloud.size(), "color count differs from point count");
  std::string out = "ply\nformat ascii 1.0\ncomment spgseg\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char buf[128];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u\n", p.x(), p.y(), p.z(), unsigned{colors[i][0]},
                  unsigned{colors[i][1]}, unsigned{colors[i][2]});
    out += buf;
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, std::span<const Rgb8> colors) {
  write_text_atomic(path, format_ply(cloud, colors));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  require(ec == std::errc() && ptr == s.data() + s.size() && !s.empty(), "malformed hex value '" + s + "'");
  return v;
}

nlohmann::ordered_json partition_to_json(const SuperpointPartition& sp, std::uint64_t content_hash) {
  nlohmann::ordered_json j;
  j["format"] = "spgseg.partition";
  j["version"] = 1;
  j["num_points"] = sp.num_points();
  j["content_hash"] = hex64(content_hash);
  j["groups"] = sp.groups();
  j["unclustered"] = sp.unclustered();
  return j;
}

PartitionFile partition_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format").get<std::string>() == "spgseg.partition", "not a partition document");
    require(j.at("version").get<int>() == 1, "unsupported partition version");
    const auto n = j.at("num_points").get<std::size_t>();
    std::vector<std::int32_t> labels(n, kNoGroup);
    std::vector<std::uint8_t> seen(n, 0);
    auto claim = [&](std::size_t id) {
      require(id < n, "point id " + std::to_string(id) + " out of range");
      require(!seen[id], "point id " + std::to_string(id) + " listed twice");
      seen[id] = 1;
    };
    const auto& groups = j.at("groups");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      require(!groups[g].empty(), "empty group " + std::to_string(g));
      for (const auto& v : groups[g]) {
        const auto id = v.get<std::size_t>();
        claim(id);
        labels[id] = static_cast<std::int32_t>(g);
      }
    }
    for (const auto& v : j.at("unclustered")) claim(v.get<std::size_t>());
    for (std::size_t i = 0; i < n; ++i) require(seen[i], "point " + std::to_string(i) + " missing from partition");
    PartitionFile out;
    out.partition = SuperpointPartition::from_labels(labels);
    out.content_hash = parse_hex64(j.at("content_hash").get<std::string>());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed partition: ") + e.what());
  }
}

LabelSet parse_labels(std::istream& in, const std::string& source, std::size_t num_classes) {
  std::vector<std::int32_t> classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    const auto tokens = tokenize(line);
    if (tokens.size() != 1) {
      throw InputError(where(source, line_no, tokens[1].column) + "expected one class id per line");
    }
    const std::int32_t c = parse_class(tokens[0], source, line_no);
    if (c >= static_cast<std::int32_t>(num_classes)) {
      throw InputError(where(source, line_no, tokens[0].column) + "class " + std::to_string(c) + " out of range");
    }
    classes.push_back(c);
  }
  LabelSet out(std::move(classes), num_classes);
  out.validate();
  return out;
}

std::string format_labels(const LabelSet& labels) {
  std::string out;
  for (std::int32_t c : labels.class_of) out += std::to_string(c) + '\n';
  return out;
}

nlohmann::ordered_json params_to_json(const ModelParams& params, const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["format"] = "spgseg.params";
  j["version"] = 1;
  j["model"] = {{"hidden", cfg.hidden},
                {"feature_dim", cfg.feature_dim},
                {"num_classes", cfg.num_classes},
                {"edge_hidden", cfg.edge_hidden},
                {"k_feat", cfg.k_feat}};
  auto tensors = nlohmann::ordered_json::array();
  params.for_each([&](std::string_view name, const Matrix& m) {
    nlohmann::ordered_json t;
    t["name"] = name;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    t["data"] = std::vector<double>(m.data(), m.data() + m.size());
    tensors.push_back(std::move(t));
  });
  j["tensors"] = std::move(tensors);
  return j;
}

ModelParams params_from_json(const nlohmann::json& j, const ModelConfig& cfg) {
  try {
    require(j.at("format").get<std::string>() == "spgseg.params", "not a checkpoint document");
    const auto& m = j.at("model");
    ModelConfig stored;
    stored.hidden = m.at("hidden").get<std::size_t>();
    stored.feature_dim = m.at("feature_dim").get<std::size_t>();
    stored.num_classes = m.at("num_classes").get<std::size_t>();
    stored.edge_hidden = m.at("edge_hidden").get<std::size_t>();
    stored.k_feat = m.at("k_feat").get<std::size_t>();
    require(stored == cfg, "checkpoint widths differ from the configured model");
    ModelParams params = ModelParams::zeros(cfg);
    const auto& tensors = j.at("tensors");
    std::size_t i = 0;
    params.for_each([&](std::string_view name, Matrix& dst) {
      require(i < tensors.size(), "checkpoint is missing tensor " + std::string(name));
      const auto& t = tensors[i++];
      require(t.at("name").get<std::string>() == name, "checkpoint tensor order differs at " + std::string(name));
      require(t.at("rows").get<Eigen::Index>() == dst.rows() && t.at("cols").get<Eigen::Index>() == dst.cols(),
              "checkpoint tensor " + std::string(name) + " has the wrong shape");
      const auto data = t.at("data").get<std::vector<double>>();
      require(data.size() == static_cast<std::size_t>(dst.size()), "tensor " + std::string(name) + " size mismatch");
      std::copy(data.begin(), data.end(), dst.data());
    });
    require(i == tensors.size(), "checkpoint has extra tensors");
    params.validate(cfg);
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace spgseg
