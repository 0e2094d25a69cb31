#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "shadowlane/attack.hpp"
#include "shadowlane/csv.hpp"

using namespace shadowlane;

namespace {

Mask random_mask(std::mt19937_64& rng, int w, int h, double p_on) {
  Mask m(w, h, 1);
  std::bernoulli_distribution on(p_on);
  for (auto& v : m.data) v = on(rng) ? 255 : 0;
  return m;
}

// Direct neighbourhood mean, clipped at the border.
Mask binarize_naive(const Mask& m, int block, double offset) {
  Mask out(m.width, m.height, 1);
  const int r = block / 2;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double sum = 0;
      int n = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(m.height - 1, y + r); ++yy)
        for (int xx = std::max(0, x - r); xx <= std::min(m.width - 1, x + r); ++xx, ++n) sum += m.at(xx, yy);
      out.at(x, y) = m.at(x, y) > std::max(0.0, sum / n - offset) ? 255 : 0;
    }
  }
  return out;
}

AttackOutcome outcome(const std::string& scene, NSConfig c, bool ok) {
  AttackOutcome o;
  o.scene_id = scene;
  o.config = c;
  o.added_px = ok ? 500 : 3;
  o.success = ok;
  return o;
}

}  // namespace

TEST(Diff, MatchesSetDifferenceOnRandomMasks) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 64);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int w = dim(rng), h = dim(rng);
    const Mask pre = random_mask(rng, w, h, density(rng));
    const Mask post = random_mask(rng, w, h, density(rng));
    std::size_t added = 0, removed = 0;
    for (std::size_t i = 0; i < pre.data.size(); ++i) {
      added += pre.data[i] == 0 && post.data[i] != 0;
      removed += pre.data[i] != 0 && post.data[i] == 0;
    }
    const double threshold = static_cast<double>(k % 50);
    const AttackOutcome o = diff_lanes(pre, post, threshold);
    ASSERT_EQ(o.added_px, added) << k;
    ASSERT_EQ(o.removed_px, removed) << k;
    ASSERT_EQ(o.success, static_cast<double>(added) > threshold) << k;
  }
}

TEST(Diff, SizeMismatchThrows) {
  EXPECT_THROW(diff_lanes(Mask(4, 4), Mask(4, 5), 1), std::invalid_argument);
}

TEST(Binarize, BinaryMasksPassThrough) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Mask m = random_mask(rng, 40, 30, 0.3);
    EXPECT_EQ(adaptive_binarize(m), m);
  }
}

TEST(Binarize, GrayMasksMatchNaiveMean) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> v(0, 255);
  for (int block : {1, 3, 11}) {
    Mask m(37, 23, 1);
    for (auto& p : m.data) p = static_cast<std::uint8_t>(v(rng));
    EXPECT_EQ(adaptive_binarize(m, {block, 2}), binarize_naive(m, block, 2)) << block;
  }
  EXPECT_THROW(adaptive_binarize(Mask(3, 3), {4, 2}), std::invalid_argument);
}

TEST(Threshold, HalfMedianLanePixels) {
  LaneDetectionResult a, b;
  a.mask = b.mask = Mask(100, 100, 1);
  auto lane = [](double x, int y0, int y1) {
    Lane l;
    for (int y = y1; y >= y0; y -= 5) l.points.push_back({x, static_cast<double>(y)});
    return l;
  };
  a.lanes = {lane(20, 10, 90), lane(60, 50, 90)};
  b.lanes = {lane(40, 30, 90)};
  const auto ca = lane_pixel_counts(a), cb = lane_pixel_counts(b);
  std::vector<std::size_t> all{ca[0], ca[1], cb[0]};
  std::sort(all.begin(), all.end());
  EXPECT_DOUBLE_EQ(calibrate_threshold({a, b}), 0.5 * static_cast<double>(all[1]));
  EXPECT_THROW(calibrate_threshold({LaneDetectionResult{}}), std::invalid_argument);
}

TEST(Summarize, AggregationsCountUnits) {
  const NSConfig c1{0.16, 10, 0.1, 0, 1.8}, c2{0.3, 20, 0.1, 15, 1.8};
  const std::vector<AttackOutcome> v = {outcome("a", c1, true), outcome("b", c1, false), outcome("a", c2, true),
                                        outcome("b", c2, true)};
  const auto pair = summarize(v, Aggregation::PerPair);
  EXPECT_EQ(pair.total, 4u);
  EXPECT_EQ(pair.successes, 3u);
  EXPECT_EQ(pair.rates.at("length_m").at(10).successes, 1u);
  EXPECT_EQ(pair.rates.at("length_m").at(10).n, 2u);
  const auto any = summarize(v, Aggregation::AnyScene);
  EXPECT_EQ(any.total, 2u);
  EXPECT_EQ(any.successes, 2u);
  const auto all = summarize(v, Aggregation::AllScenes);
  EXPECT_EQ(all.successes, 1u);
  EXPECT_DOUBLE_EQ(all.success_moments.at("length_m").mean, 20);
  EXPECT_DOUBLE_EQ(all.failure_moments.at("width_m").mean, 0.16);
  EXPECT_EQ(summarize({}, Aggregation::PerPair).total, 0u);
}

TEST(OutcomeCsv, RoundTripAndLineNumbers) {
  const std::vector<AttackOutcome> v = {outcome("scene_0", {0.16, 10, 0.1, 0, 1.8}, true),
                                        outcome("scene_1", {0.25, 12.5, 0.35, 45, 2.4}, false)};
  std::stringstream ss;
  write_outcomes_csv(ss, v);
  EXPECT_EQ(read_outcomes_csv(ss), v);

  std::istringstream bad(std::string(kOutcomeCsvHeader) + "\nscene_0,0.16,10,0,0.1,1.8,5,0,1\nscene_0,x,10,0,0.1,1.8,5,0,1\n");
  try {
    read_outcomes_csv(bad);
    FAIL() << "expected ParseError";
  } catch (const csv::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Sweep, WorkerCountDoesNotChangeOutcomes) {
  const auto scenes = standard_scenes();
  const ReferenceDetector det({scenes[0].camera, scenes[0].grid});
  auto configs = generate_sweep(SweepBounds::standard(), PurgeVariant::Geometric);
  std::vector<NSConfig> subset;
  for (std::size_t i = 0; i < configs.size(); i += configs.size() / 24) subset.push_back(configs[i]);
  SweepOptions one, many;
  many.workers = 8;
  const auto a = run_sweep({scenes[0], scenes[3]}, subset, det, one);
  const auto b = run_sweep({scenes[0], scenes[3]}, subset, det, many);
  EXPECT_EQ(a.outcomes, b.outcomes);
  EXPECT_EQ(a.per_pair, b.per_pair);
  EXPECT_DOUBLE_EQ(a.threshold, b.threshold);
  EXPECT_EQ(a.outcomes.size(), 2 * subset.size());
}
