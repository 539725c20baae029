#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "spgseg/config.hpp"
#include "spgseg/error.hpp"
#include "spgseg/io.hpp"

using namespace spgseg;
namespace fs = std::filesystem;

namespace {

CloudFile parse(const std::string& text) {
  std::istringstream in(text);
  return parse_cloud(in, "test.txt");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

/// Minimal ASCII PLY reader written against the format, not the writer.
struct PlyVertex {
  double x, y, z;
  int r, g, b;
};

std::vector<PlyVertex> read_ply(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw std::runtime_error("missing magic");
  std::size_t count = 0;
  std::vector<std::string> props;
  bool ascii = false;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string kind;
      ls >> kind;
      ascii = kind == "ascii";
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  if (!ascii) throw std::runtime_error("not ascii");
  const std::vector<std::string> expected = {"float x",       "float y",         "float z",
                                             "uchar red", "uchar green", "uchar blue"};
  if (props != expected) throw std::runtime_error("unexpected properties");
  std::vector<PlyVertex> out(count);
  for (auto& v : out) {
    if (!(in >> v.x >> v.y >> v.z >> v.r >> v.g >> v.b)) throw std::runtime_error("short body");
    if (v.r < 0 || v.r > 255 || v.g < 0 || v.g > 255 || v.b < 0 || v.b > 255) throw std::runtime_error("bad color");
  }
  std::string rest;
  if (in >> rest) throw std::runtime_error("trailing data");
  return out;
}

}  // namespace

TEST(CloudFile, ParsesLiteralLine) {
  const CloudFile f = parse("0 0 0 255 0 0 2\n");
  ASSERT_EQ(f.cloud.size(), 1u);
  EXPECT_EQ(f.cloud.colors[0], Vec3(1, 0, 0));
  ASSERT_TRUE(f.labels.has_value());
  EXPECT_EQ(f.labels->class_of[0], 2);
}

TEST(CloudFile, SkipsCommentsAndKeepsUnitColors) {
  const CloudFile f = parse("# header\n1 2 3 0.5 0.25 1\n4 5 6 0 0 0\n");
  ASSERT_EQ(f.cloud.size(), 2u);
  EXPECT_EQ(f.cloud.colors[0], Vec3(0.5, 0.25, 1));
  EXPECT_FALSE(f.labels.has_value());
}

TEST(CloudFile, MissingOrNegativeLabelMeansUnlabeled) {
  const CloudFile f = parse("0 0 0 0 0 0 1\n1 0 0 0 0 0 -1\n2 0 0 0 0 0\n");
  ASSERT_TRUE(f.labels.has_value());
  EXPECT_EQ(f.labels->class_of, (std::vector<std::int32_t>{1, kNoLabel, kNoLabel}));
}

TEST(CloudFile, ErrorsNameLineAndColumn) {
  EXPECT_NE(error_of("0 0 0 0 0 0\n0 0 zz 0 0 0\n").find("test.txt:2:"), std::string::npos);
  EXPECT_NE(error_of("0 0\n").find("test.txt:1:"), std::string::npos);
  EXPECT_NE(error_of("nan 0 0 0 0 0\n").find(":1:"), std::string::npos);
  EXPECT_NE(error_of("0 0 0 0 0 0 1 9\n").find(":1:"), std::string::npos);
  EXPECT_NE(error_of("0 0 0 300 0 0\n"), "");
  EXPECT_NE(error_of("# only a comment\n"), "");
}

TEST(CloudFile, RoundTripIsIdentity) {
  const PointCloud c = fixtures::uniform_cloud(1000, 21);
  LabelSet labels = LabelSet::unlabeled(1000, 4);
  for (std::size_t i = 0; i < 1000; i += 2) labels.class_of[i] = static_cast<std::int32_t>(i % 4);
  const std::string text = format_cloud(c, &labels);
  std::istringstream in(text);
  const CloudFile back = parse_cloud(in, "rt", 4);
  EXPECT_EQ(back.cloud.positions, c.positions);
  EXPECT_EQ(back.cloud.colors, c.colors);
  EXPECT_EQ(back.labels, labels);
  EXPECT_EQ(format_cloud(back.cloud, &*back.labels), text);
}

TEST(Ply, SinglePointHeader) {
  PointCloud c;
  c.add(Vec3(1, 2, 3), Vec3::Zero());
  const std::vector<Rgb8> colors = {Rgb8{1, 2, 3}};
  const std::string ply = format_ply(c, colors);
  EXPECT_NE(ply.find("element vertex 1\n"), std::string::npos);
  const auto v = read_ply(ply);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].g, 2);
}

TEST(Ply, TwoGroupsGiveTwoColorsPlusBlack) {
  const SuperpointPartition sp = SuperpointPartition::from_labels(std::vector<std::int32_t>{0, 0, 1, -1, 1});
  const auto colors = superpoint_coloring(sp);
  std::set<Rgb8> distinct(colors.begin(), colors.end());
  EXPECT_EQ(distinct.size(), 3u);
  EXPECT_EQ(colors[3], kBlack);
  EXPECT_NE(colors[0], kBlack);
  EXPECT_NE(colors[2], kBlack);
  EXPECT_EQ(group_color(7), group_color(7));
}

TEST(Ply, IndependentReaderAcceptsRandomClouds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointCloud c = fixtures::uniform_cloud(200, seed);
    const auto members = fixtures::random_membership(200, 6, 0.2, seed);
    const auto ply = format_ply(c, superpoint_coloring(SuperpointPartition::from_labels(members)));
    const auto v = read_ply(ply);
    ASSERT_EQ(v.size(), 200u);
    for (std::size_t i = 0; i < 200; ++i) {
      EXPECT_NEAR(v[i].x, c.positions[i].x(), 1e-6);
      if (members[i] < 0) EXPECT_EQ(v[i].r + v[i].g + v[i].b, 0);
    }
  }
}

TEST(Ply, UnwritablePathIsAnIoError) {
  PointCloud c;
  c.add(Vec3::Zero(), Vec3::Zero());
  const std::vector<Rgb8> colors = {kBlack};
  EXPECT_THROW(write_ply("/nonexistent-dir/x.ply", c, colors), IoError);
}

TEST(PartitionFile, RoundTripAndValidation) {
  const SuperpointPartition sp = SuperpointPartition::from_labels(fixtures::random_membership(50, 4, 0.2, 1));
  const auto j = partition_to_json(sp, 0xdeadbeefcafef00dULL);
  const PartitionFile back = partition_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.partition, sp);
  EXPECT_EQ(back.content_hash, 0xdeadbeefcafef00dULL);

  auto broken = nlohmann::json::parse(j.dump());
  broken["unclustered"].push_back(broken["groups"][0][0]);
  EXPECT_THROW(partition_from_json(broken), InputError);
}

TEST(Checkpoint, RoundTripAndShapeCheck) {
  ModelConfig cfg;
  cfg.hidden = 4;
  const ModelParams p = ModelParams::glorot(cfg, 3);
  const auto j = params_to_json(p, cfg);
  EXPECT_TRUE(params_from_json(nlohmann::json::parse(j.dump()), cfg) == p);
  ModelConfig other = cfg;
  other.hidden = 5;
  EXPECT_THROW(params_from_json(j, other), InputError);
}

TEST(Labels, ParseAndFormat) {
  std::istringstream in("# predicted\n0\n2\n-1\n");
  const LabelSet l = parse_labels(in, "l.txt", 3);
  EXPECT_EQ(l.class_of, (std::vector<std::int32_t>{0, 2, kNoLabel}));
  EXPECT_EQ(format_labels(l), "0\n2\n-1\n");
  std::istringstream bad("0\n7\n");
  EXPECT_THROW(parse_labels(bad, "l.txt", 3), InputError);
}

TEST(Hex, RoundTrip) {
  for (std::uint64_t v : {0ull, 1ull, 0xffffffffffffffffull, 0x0123456789abcdefull}) EXPECT_EQ(parse_hex64(hex64(v)), v);
  EXPECT_THROW(parse_hex64("xyz"), InputError);
}

TEST(AtomicWrite, LeavesNoTemporaryBehind) {
  const fs::path dir = fs::temp_directory_path() / "spgseg-atomic-test";
  fs::create_directories(dir);
  write_text_atomic(dir / "a.txt", "hello\n");
  EXPECT_EQ(read_text(dir / "a.txt"), "hello\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
  fs::remove_all(dir);
}

TEST(RunConfig, DefaultsRoundTripAndUnknownKeysFail) {
  const RunConfig defaults = run_config_from_json(nlohmann::json::object());
  const auto j = run_config_to_json(defaults);
  const RunConfig back = run_config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(run_config_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.train.t_plo, (Ratio{4, 5}));

  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"trian": {}})")), InputError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"train": {"epochs": 3}})")), InputError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"train": {"method": {"edges": true}}})")), InputError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"model": {"hidden": "wide"}})")), InputError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"train": {"t_plo": 1.5}})")), InputError);
}

TEST(RunConfig, ReadsOverrides) {
  const auto j = nlohmann::json::parse(R"({
    "growing": {"t_ang_deg": 5.0, "k_grow": 12},
    "train": {"epochs_total": 6, "epochs_labeled_only": 3, "t_plo": 0.85, "method": {"edge": false}},
    "data": {"scenes": 4, "labeled": 1, "evaluation": 2},
    "paths": {"output_dir": "out"}
  })");
  const RunConfig cfg = run_config_from_json(j);
  EXPECT_NEAR(cfg.train.geometry.growing.t_ang, 5.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(cfg.train.geometry.growing.k_grow, 12u);
  EXPECT_EQ(cfg.train.epochs_total, 6u);
  EXPECT_EQ(cfg.train.t_plo, (Ratio{17, 20}));
  EXPECT_FALSE(cfg.train.method.edge);
  EXPECT_TRUE(cfg.train.method.spfa);
  EXPECT_EQ(cfg.data.synthetic.scenes, 4u);
  EXPECT_EQ(cfg.paths.output_dir, fs::path("out"));
}
