#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shadowlane/compositor.hpp"
#include "shadowlane/image_io.hpp"
#include "shadowlane/lane_detection.hpp"

using namespace shadowlane;

namespace {

const std::vector<RoadScene>& scenes() {
  static const auto s = standard_scenes();
  return s;
}

const ReferenceDetector& detector() {
  static const ReferenceDetector d({scenes()[0].camera, scenes()[0].grid});
  return d;
}

// Markings whose centre falls inside the BEV window at the scene's camera.
std::size_t visible_markings(const RoadScene& s) {
  std::size_t n = 0;
  const double cam_n = s.reference().offset_m + s.camera_offset_m;
  for (const auto& m : s.road.markings) {
    const double x = m.offset_m - cam_n;
    if (x > s.grid.x_min + 0.3 && x < s.grid.x_max - 0.3) ++n;
  }
  return n;
}

double mean_in(const FloatRaster& f, int x0, int y0, int x1, int y1) {
  double s = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) s += f.at(x, y);
  return s / ((x1 - x0) * (y1 - y0));
}

}  // namespace

TEST(Detect, BenignFindsExactlyTheLayout) {
  for (const auto& s : scenes()) {
    const auto r = detector().detect(s.image);
    EXPECT_EQ(r.lanes.size(), visible_markings(s)) << s.id;
  }
}

TEST(Detect, MarkingWidthNsAddsALane) {
  for (const auto& s : scenes()) {
    const auto pre = detector().detect(s.image);
    const auto post = detector().detect(compose(s, NSConfig{0.16, 25, 0.1, 0, 1.8}).image);
    EXPECT_GE(post.lanes.size(), pre.lanes.size() + 1) << s.id;
  }
}

TEST(Detect, FiveTimesMarkingWidthIsRejected) {
  for (const auto& s : scenes()) {
    const auto pre = detector().detect(s.image);
    const auto post = detector().detect(compose(s, NSConfig{0.8, 25, 0.5, 0, 1.8}).image);
    EXPECT_LE(post.lanes.size(), pre.lanes.size()) << s.id;
  }
}

TEST(Detect, DeterministicAndWellFormed) {
  const Image img = compose(scenes()[2], NSConfig{0.16, 10, 0.3, 5, 1.8}).image;
  const auto a = detector().detect(img);
  const auto b = detector().detect(img);
  EXPECT_EQ(a.mask, b.mask);
  ASSERT_EQ(a.lanes.size(), b.lanes.size());
  for (const auto& lane : a.lanes) {
    EXPECT_GE(lane.confidence, 0.0);
    EXPECT_LE(lane.confidence, 1.0);
    for (std::size_t i = 0; i < lane.points.size(); ++i) {
      const Vec2 p = lane.points[i];
      EXPECT_TRUE(p.x >= 0 && p.y >= 0 && p.x <= img.width - 1 && p.y <= img.height - 1);
      if (i > 0) EXPECT_LT(p.y, lane.points[i - 1].y);  // bottom to top
    }
  }
  EXPECT_EQ(a.mask, rasterize_lanes(a.lanes, img.width, img.height, DetectorParams{}.band_px));
}

TEST(Detect, BlankImageGivesEmptyResult) {
  const Image blank(640, 360, 3, 90);
  const auto r = detector().detect(blank);
  EXPECT_TRUE(r.lanes.empty());
  EXPECT_EQ(count_nonzero(r.mask), 0u);
}

TEST(Detect, ParamsValidate) {
  DetectorParams p;
  p.grad_low = 0.5;
  p.grad_high = 0.4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.max_lane_width_m = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.window_half_width_m = 0;
  EXPECT_THROW(ReferenceDetector({CameraModel{}, BevGrid{}}, p), std::invalid_argument);
}

TEST(Preprocess, UniformStaysUniform) {
  const Image flat(320, 180, 3, 97);
  const FloatRaster out = preprocess_only(flat, {});
  const auto [lo, hi] = std::minmax_element(out.data.begin(), out.data.end());
  EXPECT_NEAR(*hi - *lo, 0.0f, 1e-3f);
}

TEST(Preprocess, HalfShadowGapShrinks) {
  Image img(256, 256, 3, 110);
  for (int y = 0; y < 256; ++y)
    for (int x = 128; x < 256; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 60;
  const FloatRaster out = preprocess_only(img, {});
  const double before = 50;
  const double after = mean_in(out, 0, 0, 128, 256) - mean_in(out, 128, 0, 256, 256);
  EXPECT_LE(std::abs(after), 0.3 * before) << after;
}

TEST(Preprocess, NsKeepsContrastWhileShadowFlattens) {
  const auto& s = scenes()[3];
  const ShadowLayer layer = make_ns_layer(s, NSConfig{0.3, 25, 0.3, 0, 1.8});
  const Image img = compose(s, layer).image;
  const FloatRaster in = to_luma(img);
  const FloatRaster out = preprocess_only(img, {});
  const auto& h = layer.holes[0];
  auto at = [&](const FloatRaster& f, Vec2 w) {
    const auto q = s.camera.ground_to_image().apply(s.camera_pose.to_local(w));
    return f.at(static_cast<int>(std::lround(q->x)), static_cast<int>(std::lround(q->y)));
  };
  const Vec2 ns = h.origin + h.axis * 4.0 + h.side * 0.15;
  const Vec2 shade = ns + h.side * 1.2;
  const Vec2 sun = s.camera_pose.to_world({1.0, 3.0});  // before the canopy starts
  const double c_in = at(in, ns) - at(in, shade);
  const double c_out = at(out, ns) - at(out, shade);
  EXPECT_GE(c_out, 25.0) << c_in;
  EXPECT_NEAR(c_out, c_in, 0.3 * c_in);
  EXPECT_LT(std::abs(at(out, shade) - at(out, sun)), 10.0);
}

TEST(Wire, DetectionRoundTrip) {
  const auto r = detector().detect(compose(scenes()[1], NSConfig{}).image);
  std::stringstream ss;
  write_detection(ss, r);
  const auto back = read_detection(ss);
  EXPECT_EQ(back.mask, r.mask);
  ASSERT_EQ(back.lanes.size(), r.lanes.size());
  for (std::size_t i = 0; i < r.lanes.size(); ++i) {
    ASSERT_EQ(back.lanes[i].points.size(), r.lanes[i].points.size());
    EXPECT_DOUBLE_EQ(back.lanes[i].confidence, r.lanes[i].confidence);
    for (std::size_t k = 0; k < r.lanes[i].points.size(); ++k) {
      EXPECT_DOUBLE_EQ(back.lanes[i].points[k].x, r.lanes[i].points[k].x);
      EXPECT_DOUBLE_EQ(back.lanes[i].points[k].y, r.lanes[i].points[k].y);
    }
  }
}

TEST(Wire, SubprocessDetectorReplaysCannedOutput) {
  const auto dir = std::filesystem::path(SHADOWLANE_TEST_TMP) / "plugin";
  std::filesystem::create_directories(dir);
  const auto r = detector().detect(scenes()[0].image);
  {
    std::ofstream f(dir / "canned.out", std::ios::binary);
    write_detection(f, r);
  }
  SubprocessDetector plugin("cat > /dev/null; cat '" + (dir / "canned.out").string() + "'");
  const auto got = plugin.detect(scenes()[0].image);
  EXPECT_EQ(got.mask, r.mask);
  EXPECT_EQ(got.lanes.size(), r.lanes.size());
  EXPECT_THROW(SubprocessDetector("exit 3").detect(scenes()[0].image), std::runtime_error);
}

TEST(Wire, MakeDetectorSpecs) {
  const Calibration cal{CameraModel{}, BevGrid{}};
  EXPECT_EQ(make_detector("reference", cal)->name(), "reference");
  EXPECT_EQ(make_detector("cmd:true", cal)->name(), "cmd:true");
  EXPECT_THROW(make_detector("neural", cal), std::invalid_argument);
}
