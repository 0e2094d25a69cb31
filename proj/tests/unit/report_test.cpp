#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "shadowlane/report.hpp"

using namespace shadowlane;
using namespace shadowlane::report;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path d = fs::path(SHADOWLANE_TEST_TMP) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<AttackOutcome> sample_outcomes() {
  std::vector<AttackOutcome> v;
  for (double len : {5.0, 10.0, 20.0}) {
    for (double w : {0.16, 0.3}) {
      AttackOutcome o;
      o.scene_id = "scene_0";
      o.config = {w, len, 0.1, 0, 1.8};
      o.success = len > 5 && w < 0.2;
      o.added_px = o.success ? 400 : 0;
      v.push_back(o);
    }
  }
  return v;
}

sim::GridResult sample_grid() {
  sim::GridResult g;
  g.speeds = {10, 35};
  g.lengths = {10, 40, 70};
  for (int sc : {1, 2})
    for (double v : g.speeds)
      for (double len : g.lengths) {
        sim::GridCell c{sc, v, len, {}};
        c.verdict.attack_success = len >= 40 && (sc == 1 || len == 70);
        g.cells.push_back(c);
      }
  return g;
}

}  // namespace

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.tool_version = "0.1.0";
  m.subcommand = "attack";
  m.params = {{"threshold", "261"}, {"workers", "4"}, {"note", "quote \" and , comma"}};
  m.inputs = {"scenes/"};
  m.outputs = {"out/outcomes.csv", "out/stats.csv"};
  m.seed = 7;
  m.duration_s = 1.25;
  EXPECT_EQ(RunManifest::from_json(m.to_json()), m);
  const auto dir = fresh("manifest");
  EXPECT_EQ(read_manifest(write_manifest(dir, m)), m);
  EXPECT_THROW(RunManifest::from_json("{\"subcommand\": 3"), std::invalid_argument);
}

TEST(Charts, ByteIdenticalAcrossRuns) {
  const auto a = fresh("report_a"), b = fresh("report_b");
  ReportInputs in;
  in.outcomes = sample_outcomes();
  in.grid = sample_grid();
  in.brightness = {{1.05, std::nullopt, std::nullopt}, {1.8, 9.5, 20.5}};
  const auto pa = write_report(in, a);
  const auto pb = write_report(in, b);
  ASSERT_EQ(pa.size(), 6u);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].filename(), pb[i].filename());
    EXPECT_EQ(slurp(pa[i]), slurp(pb[i])) << pa[i];
  }
  EXPECT_EQ(svg_chart({"t", "x", "y"}, {{"s", {1, 2}, {3, 4}}}), svg_chart({"t", "x", "y"}, {{"s", {1, 2}, {3, 4}}}));
}

TEST(Charts, EmptyInputsGiveAxesOnly) {
  const auto dir = fresh("report_empty");
  const auto paths = write_report(ReportInputs{}, dir);
  EXPECT_EQ(paths.size(), 6u);
  for (const auto& p : paths) {
    EXPECT_TRUE(fs::exists(p));
    if (p.extension() == ".svg") EXPECT_NE(slurp(p).find("<svg"), std::string::npos);
  }
  EXPECT_NE(svg_chart({"empty", "x", "y"}, {}).find("</svg>"), std::string::npos);
}

TEST(Charts, LengthCsvMatchesGridRates) {
  const auto dir = fresh("report_grid");
  const auto g = sample_grid();
  write_grid_report(g, dir);
  std::istringstream csv(slurp(dir / "success_by_length.csv"));
  std::string line;
  std::getline(csv, line);
  const auto want = g.success_by_length();
  for (std::size_t i = 0; i < want.size(); ++i) {
    ASSERT_TRUE(std::getline(csv, line));
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    EXPECT_DOUBLE_EQ(std::stod(line.substr(0, c1)), g.lengths[i]);
    EXPECT_NEAR(std::stod(line.substr(c1 + 1, c2 - c1 - 1)), want[i], 0.005);
  }
}

TEST(Charts, LoadResultsDispatchesOnHeader) {
  const auto dir = fresh("report_load");
  {
    std::ofstream f(dir / "outcomes.csv");
    write_outcomes_csv(f, sample_outcomes());
    std::ofstream g(dir / "grid.csv");
    sim::write_grid_csv(g, sample_grid());
    std::ofstream n(dir / "notes.txt");
    n << "ignored\n";
  }
  const auto in = load_results(dir);
  EXPECT_EQ(in.outcomes, sample_outcomes());
  ASSERT_TRUE(in.grid.has_value());
  EXPECT_EQ(in.grid->success_by_length(), sample_grid().success_by_length());
  EXPECT_TRUE(in.brightness.empty());
}

TEST(Charts, MalformedCsvNamesFileAndLine) {
  const auto dir = fresh("report_bad");
  {
    std::ofstream f(dir / "broken.csv");
    f << kOutcomeCsvHeader << "\nscene_0,0.16,10,0,0.1,1.8,5,0,1\nscene_0,0.16,10,0,0.1,1.8,five,0,1\n";
  }
  try {
    load_results(dir);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("broken.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  }
}
