#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shadowlane/csv.hpp"
#include "shadowlane/defense.hpp"

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

// A handful of configs that beat the detector in at least one scene.
const std::vector<AttackOutcome>& successes() {
  static const auto v = [] {
    const std::vector<NSConfig> cfgs = {{0.16, 25, 0.1, 0, 1.8}, {0.2, 20, 0.2, 5, 1.8}, {0.25, 15, 0.3, 0, 1.8},
                                        {0.3, 25, 0.1, 10, 1.8}, {0.16, 12.5, 0.4, 5, 1.8}, {0.35, 20, 0.2, 0, 1.8}};
    std::vector<AttackOutcome> ok;
    for (const auto& o : run_sweep(scenes(), cfgs, detector()).outcomes)
      if (o.success) ok.push_back(o);
    return ok;
  }();
  return v;
}

double mae(const Image& a, const Image& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(int(a.data[i]) - int(b.data[i]));
  return s / a.data.size();
}

}  // namespace

TEST(Filter, BenignScenesUntouched) {
  for (const auto& s : scenes()) {
    FilterReport rep;
    EXPECT_EQ(luminosity_filter(s.image, {}, &rep), s.image) << s.id;
    EXPECT_EQ(rep.suppressed, 0u) << s.id;
  }
}

TEST(Filter, ShadowEnclosedStripeIsPaintedOver) {
  for (const auto& s : scenes()) {
    const ShadowLayer layer = make_ns_layer(s, NSConfig{0.3, 25, 0.3, 0, 1.8});
    const Image attacked = compose(s, layer).image;
    FilterReport rep;
    const Image clean = luminosity_filter(attacked, {}, &rep);
    EXPECT_GE(rep.suppressed, 1u) << s.id;
    const auto& h = layer.holes[0];
    auto px = [&](const Image& img, Vec2 w) {
      const auto q = s.camera.ground_to_image().apply(s.camera_pose.to_local(w));
      const int x = static_cast<int>(std::lround(q->x)), y = static_cast<int>(std::lround(q->y));
      return luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    };
    const Vec2 ns = h.origin + h.axis * 4.0 + h.side * 0.15;
    const Vec2 shade = ns + h.side * 1.2;
    EXPECT_GT(px(attacked, ns) - px(attacked, shade), 25) << s.id;
    EXPECT_LT(std::abs(px(clean, ns) - px(clean, shade)), 12) << s.id;
  }
}

TEST(Filter, SunlitBrightStripeIsKept) {
  Image img(200, 120, 3, 110);
  for (int y = 40; y < 110; ++y)
    for (int x = 95; x < 101; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 220;
  FilterReport rep;
  EXPECT_EQ(luminosity_filter(img, {}, &rep), img);
  EXPECT_GE(rep.components, 1u);
  EXPECT_EQ(rep.suppressed, 0u);
}

TEST(Filter, ChangesOnlyFilledPixels) {
  const Image attacked = compose(scenes()[2], NSConfig{0.25, 20, 0.2, 5, 1.8}).image;
  FilterReport rep;
  const Image out = luminosity_filter(attacked, {}, &rep);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    bool diff = false;
    for (int c = 0; c < 3; ++c) diff |= out.data[3 * i + c] != attacked.data[3 * i + c];
    changed += diff;
  }
  EXPECT_GT(changed, 0u);
  EXPECT_LE(changed, rep.filled_px);
}

TEST(Filter, NearlyIdempotent) {
  for (const auto& o : successes()) {
    const auto& s = *std::find_if(scenes().begin(), scenes().end(), [&](const RoadScene& r) { return r.id == o.scene_id; });
    const Image once = luminosity_filter(compose(s, o.config).image);
    EXPECT_LT(mae(luminosity_filter(once), once), 1.0);
  }
}

TEST(DefenseRate, DisabledFilterDefendsNothing) {
  ASSERT_FALSE(successes().empty());
  const auto e = defense_rate(successes(), scenes(), detector(), 261, DefenseParams::disabled());
  EXPECT_EQ(e.n, successes().size());
  EXPECT_EQ(e.defended, 0u);
}

TEST(DefenseRate, RelaxingEnclosureNeverLowersTheRate) {
  double prev = -1;
  for (double enclosure : {0.95, 0.8, 0.7, 0.5}) {
    DefenseParams p;
    p.enclosure = enclosure;
    const double r = defense_rate(successes(), scenes(), detector(), 261, p).rate();
    EXPECT_GE(r, prev) << enclosure;
    prev = r;
  }
  EXPECT_GT(prev, 0.5);
}

TEST(DefenseRate, RejectsBadInput) {
  EXPECT_THROW(defense_rate({}, scenes(), detector(), 261), std::invalid_argument);
  AttackOutcome failed = successes().front();
  failed.success = false;
  EXPECT_THROW(defense_rate({failed}, scenes(), detector(), 261), std::invalid_argument);
  AttackOutcome stray = successes().front();
  stray.scene_id = "nowhere";
  EXPECT_THROW(defense_rate({stray}, scenes(), detector(), 261), std::invalid_argument);
}

TEST(DefenseRate, NoBenignRegressions) { EXPECT_EQ(benign_regressions(scenes(), detector(), 261), 0u); }

TEST(Params, FileRoundTripAndValidation) {
  DefenseParams p;
  p.threshold = 22.5;
  p.margin_px = 6;
  std::stringstream ss;
  write_defense_params(ss, p);
  const auto back = read_defense_params(ss);
  EXPECT_DOUBLE_EQ(back.threshold, 22.5);
  EXPECT_EQ(back.margin_px, 6);

  std::stringstream inf;
  write_defense_params(inf, DefenseParams::disabled());
  EXPECT_TRUE(std::isinf(read_defense_params(inf).threshold));

  std::istringstream bad("# tuned\nmargin_px = 4\nenclosure = 1.5\n");
  try {
    read_defense_params(bad);
    FAIL();
  } catch (const csv::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  DefenseParams g;
  g.grow_px = 9;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(Normalize, MeanAndSpread) {
  const FloatRaster f = normalize_luminance(scenes()[1].image);
  double m = 0, v = 0;
  for (float x : f.data) m += x;
  m /= f.data.size();
  for (float x : f.data) v += (x - m) * (x - m);
  EXPECT_NEAR(m, 128, 0.5);
  EXPECT_NEAR(std::sqrt(v / f.data.size()), 48, 0.5);
}
