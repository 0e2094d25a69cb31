#include "shadowlane/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <tuple>

#include "shadowlane/csv.hpp"
#include "shadowlane/parallel.hpp"

namespace shadowlane {

Mask adaptive_binarize(const Mask& m, const BinarizeParams& p) {
  if (p.block < 1 || p.block % 2 == 0) throw std::invalid_argument("binarization block must be odd and >= 1");
  const int W = m.width;
  const int H = m.height;
  const int C = m.channels;
  // integral image of the first channel; 255 * 2^23 px still fits in int64 comfortably
  const std::size_t stride = static_cast<std::size_t>(W) + 1;
  std::vector<std::int64_t> integral(stride * (H + 1), 0);
  for (int y = 0; y < H; ++y) {
    std::int64_t row = 0;
    const std::uint8_t* src = m.data.data() + static_cast<std::size_t>(y) * W * C;
    const std::int64_t* above = integral.data() + static_cast<std::size_t>(y) * stride;
    std::int64_t* cur = integral.data() + static_cast<std::size_t>(y + 1) * stride;
    for (int x = 0; x < W; ++x) {
      row += src[static_cast<std::size_t>(x) * C];
      cur[x + 1] = above[x + 1] + row;
    }
  }
  Mask out(W, H, 1);
  const int r = p.block / 2;
  for (int y = 0; y < H; ++y) {
    const int y0 = std::max(0, y - r);
    const int y1 = std::min(H, y + r + 1);
    const std::int64_t* top = integral.data() + static_cast<std::size_t>(y0) * stride;
    const std::int64_t* bot = integral.data() + static_cast<std::size_t>(y1) * stride;
    const std::uint8_t* src = m.data.data() + static_cast<std::size_t>(y) * W * C;
    std::uint8_t* dst = out.data.data() + static_cast<std::size_t>(y) * W;
    for (int x = 0; x < W; ++x) {
      const int x0 = std::max(0, x - r);
      const int x1 = std::min(W, x + r + 1);
      const std::int64_t sum = bot[x1] - bot[x0] - top[x1] + top[x0];
      const double mean = static_cast<double>(sum) / ((x1 - x0) * (y1 - y0));
      dst[x] = src[static_cast<std::size_t>(x) * C] > std::max(0.0, mean - p.offset) ? 255 : 0;
    }
  }
  return out;
}

AttackOutcome diff_binarized(const Mask& pre, const Mask& post, double threshold) {
  if (pre.width != post.width || pre.height != post.height || pre.data.size() != post.data.size()) {
    throw std::invalid_argument("pre/post masks differ in size");
  }
  AttackOutcome o;
  for (std::size_t i = 0; i < pre.data.size(); ++i) {
    const bool a = pre.data[i] != 0;
    const bool b = post.data[i] != 0;
    o.added_px += b && !a;
    o.removed_px += a && !b;
  }
  o.success = static_cast<double>(o.added_px) > threshold;
  return o;
}

AttackOutcome diff_lanes(const Mask& pre, const Mask& post, double threshold, const BinarizeParams& p) {
  if (pre.width != post.width || pre.height != post.height) {
    throw std::invalid_argument("pre/post masks differ in size");
  }
  return diff_binarized(adaptive_binarize(pre, p), adaptive_binarize(post, p), threshold);
}

AttackOutcome diff_lanes(const LaneDetectionResult& pre, const LaneDetectionResult& post, double threshold,
                         const BinarizeParams& p) {
  return diff_lanes(pre.mask, post.mask, threshold, p);
}

std::vector<std::size_t> lane_pixel_counts(const LaneDetectionResult& r, int band_px) {
  std::vector<std::size_t> counts;
  for (const auto& lane : r.lanes) {
    counts.push_back(count_nonzero(rasterize_lanes({lane}, r.mask.width, r.mask.height, band_px)));
  }
  return counts;
}

double calibrate_threshold(const std::vector<LaneDetectionResult>& benign, double factor, int band_px) {
  if (!(factor > 0)) throw std::invalid_argument("threshold factor must be > 0");
  std::vector<std::size_t> all;
  for (const auto& r : benign) {
    const auto c = lane_pixel_counts(r, band_px);
    all.insert(all.end(), c.begin(), c.end());
  }
  if (all.empty()) throw std::invalid_argument("no lanes detected in any benign scene");
  std::sort(all.begin(), all.end());
  const std::size_t n = all.size();
  const double med = n % 2 ? static_cast<double>(all[n / 2]) : 0.5 * static_cast<double>(all[n / 2 - 1] + all[n / 2]);
  return factor * med;
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::PerPair: return "per_pair";
    case Aggregation::AnyScene: return "any_scene";
    case Aggregation::AllScenes: return "all_scenes";
  }
  return "?";
}

double parameter_value(const NSConfig& c, std::string_view name) {
  if (name == "width_m") return c.width_m;
  if (name == "length_m") return c.length_m;
  if (name == "distance_m") return c.distance_m;
  if (name == "beta_deg") return c.beta_deg;
  if (name == "brightness") return c.brightness;
  throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

namespace {

using ConfigKey = std::tuple<double, double, double, double, double>;
ConfigKey key_of(const NSConfig& c) { return {c.width_m, c.length_m, c.distance_m, c.beta_deg, c.brightness}; }

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = v.size();
  if (v.empty()) return m;
  double s = 0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

}  // namespace

SweepStats summarize(const std::vector<AttackOutcome>& outcomes, Aggregation agg) {
  // units in a canonical order so floating sums do not depend on input order
  std::vector<std::pair<NSConfig, bool>> units;
  if (agg == Aggregation::PerPair) {
    std::map<std::pair<ConfigKey, std::string>, std::pair<NSConfig, bool>> sorted;
    for (const auto& o : outcomes) sorted[{key_of(o.config), o.scene_id}] = {o.config, o.success};
    for (auto& [k, u] : sorted) units.push_back(u);
  } else {
    std::map<ConfigKey, std::pair<NSConfig, std::pair<bool, bool>>> grouped;
    for (const auto& o : outcomes) {
      auto [it, fresh] = grouped.try_emplace(key_of(o.config), o.config, std::pair{o.success, o.success});
      if (!fresh) {
        it->second.second.first = it->second.second.first || o.success;
        it->second.second.second = it->second.second.second && o.success;
      }
    }
    for (auto& [k, g] : grouped) {
      units.emplace_back(g.first, agg == Aggregation::AnyScene ? g.second.first : g.second.second);
    }
  }

  SweepStats s;
  s.aggregation = agg;
  s.total = units.size();
  if (units.empty()) return s;
  for (const auto& [cfg, ok] : units) s.successes += ok ? 1 : 0;
  for (std::string_view pname : kSweepParameters) {
    const std::string name(pname);
    std::vector<double> succ, fail;
    auto& buckets = s.rates[name];
    for (const auto& [cfg, ok] : units) {
      const double v = parameter_value(cfg, pname);
      auto& b = buckets[v];
      ++b.n;
      if (ok) {
        ++b.successes;
        succ.push_back(v);
      } else {
        fail.push_back(v);
      }
    }
    if (!succ.empty()) s.success_moments[name] = moments(succ);
    if (!fail.empty()) s.failure_moments[name] = moments(fail);
  }
  return s;
}

SweepResult run_sweep(const std::vector<RoadScene>& scenes, const std::vector<NSConfig>& configs,
                      const LaneDetector& detector, const SweepOptions& opts, std::optional<double> threshold) {
  for (const auto& c : configs) validate(c);
  SweepResult res;
  res.benign.resize(scenes.size());
  parallel_for(scenes.size(), opts.workers, [&](std::size_t i) { res.benign[i] = detector.detect(scenes[i].image); });
  if (threshold) {
    res.threshold = *threshold;
  } else {
    res.threshold = calibrate_threshold(res.benign, opts.threshold_factor);
  }

  std::vector<Mask> benign_bin;
  for (const auto& b : res.benign) benign_bin.push_back(adaptive_binarize(b.mask, opts.binarize));

  const std::size_t nc = configs.size();
  res.outcomes.resize(scenes.size() * nc);
  std::vector<char> done;
  try {
    parallel_for(
        res.outcomes.size(), opts.workers,
        [&](std::size_t k) {
          const std::size_t si = k / nc;
          const RoadScene& scene = scenes[si];
          const NSConfig& cfg = configs[k % nc];
          const ComposeResult attacked = compose(scene, cfg, opts.compose);
          AttackOutcome o;
          if (!attacked.noop) {
            const LaneDetectionResult post = detector.detect(attacked.image);
            o = diff_binarized(benign_bin[si], adaptive_binarize(post.mask, opts.binarize), res.threshold);
          }
          o.scene_id = scene.id;
          o.config = cfg;
          res.outcomes[k] = std::move(o);
        },
        &done);
  } catch (const std::exception& e) {
    std::vector<AttackOutcome> partial;
    for (std::size_t k = 0; k < done.size(); ++k)
      if (done[k]) partial.push_back(res.outcomes[k]);
    throw SweepError(e.what(), std::move(partial));
  }
  res.per_pair = summarize(res.outcomes, Aggregation::PerPair);
  res.any_scene = summarize(res.outcomes, Aggregation::AnyScene);
  res.all_scenes = summarize(res.outcomes, Aggregation::AllScenes);
  return res;
}

void write_outcomes_csv(std::ostream& out, const std::vector<AttackOutcome>& outcomes) {
  out << kOutcomeCsvHeader << '\n';
  for (const auto& o : outcomes) {
    const auto& c = o.config;
    out << o.scene_id << ',' << csv::fmt(c.width_m) << ',' << csv::fmt(c.length_m) << ',' << csv::fmt(c.beta_deg)
        << ',' << csv::fmt(c.distance_m) << ',' << csv::fmt(c.brightness) << ',' << o.added_px << ','
        << o.removed_px << ',' << (o.success ? 1 : 0) << '\n';
  }
}

std::vector<AttackOutcome> read_outcomes_csv(std::istream& in) {
  std::vector<AttackOutcome> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = csv::trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t == kOutcomeCsvHeader) continue;
    const auto f = csv::split(t);
    if (f.size() != 9) throw csv::ParseError(line_no, "expected 9 fields, got " + std::to_string(f.size()));
    AttackOutcome o;
    o.scene_id = std::string(csv::trim(f[0]));
    if (o.scene_id.empty()) throw csv::ParseError(line_no, "empty scene_id");
    o.config.width_m = csv::parse_double(f[1], line_no);
    o.config.length_m = csv::parse_double(f[2], line_no);
    o.config.beta_deg = csv::parse_double(f[3], line_no);
    o.config.distance_m = csv::parse_double(f[4], line_no);
    o.config.brightness = csv::parse_double(f[5], line_no);
    const long added = csv::parse_long(f[6], line_no);
    const long removed = csv::parse_long(f[7], line_no);
    const long success = csv::parse_long(f[8], line_no);
    if (added < 0 || removed < 0) throw csv::ParseError(line_no, "negative pixel count");
    if (success != 0 && success != 1) throw csv::ParseError(line_no, "success must be 0 or 1");
    o.added_px = static_cast<std::size_t>(added);
    o.removed_px = static_cast<std::size_t>(removed);
    o.success = success == 1;
    out.push_back(std::move(o));
  }
  return out;
}

void write_stats_csv(std::ostream& out, const std::vector<SweepStats>& stats) {
  out << "aggregation,section,parameter,key,n,value\n";
  for (const auto& s : stats) {
    const std::string agg = to_string(s.aggregation);
    out << agg << ",overall,all,," << s.total << ',' << csv::fmt(s.success_rate()) << '\n';
    for (std::string_view p : kSweepParameters) {
      const std::string name(p);
      if (auto it = s.rates.find(name); it != s.rates.end()) {
        for (const auto& [v, b] : it->second) {
          out << agg << ",rate," << name << ',' << csv::fmt(v) << ',' << b.n << ',' << csv::fmt(b.rate()) << '\n';
        }
      }
      for (const auto& [label, table] : {std::pair{"success", &s.success_moments}, std::pair{"failure", &s.failure_moments}}) {
        if (auto it = table->find(name); it != table->end()) {
          out << agg << ",mean," << name << ',' << label << ',' << it->second.n << ',' << csv::fmt(it->second.mean) << '\n';
          out << agg << ",std," << name << ',' << label << ',' << it->second.n << ',' << csv::fmt(it->second.stddev)
              << '\n';
        }
      }
    }
  }
}

bool lane_tracks_ns(const RoadScene& scene, const ShadowLayer& layer, const LaneDetectionResult& r,
                    double tolerance_m) {
  const Mat3 to_ground = scene.camera.image_to_ground();
  for (const auto& lane : r.lanes) {
    int near_ns = 0;
    int total = 0;
    for (const Vec2& px : lane.points) {
      const auto g = to_ground.apply(px);
      if (!g || g->y <= 0) continue;
      ++total;
      const Vec2 w = scene.camera_pose.to_world(*g);
      for (const auto& hole : layer.holes) {
        const Vec2 d = w - hole.origin;
        const double a = std::clamp(d.dot(hole.axis), 0.0, hole.length);
        const double b = std::clamp(d.dot(hole.side), 0.0, hole.width);
        const Vec2 nearest = hole.origin + hole.axis * a + hole.side * b;
        if ((w - nearest).norm() <= tolerance_m) {
          ++near_ns;
          break;
        }
      }
    }
    // a lane of at least ~8 camera rows that mostly runs along the NS
    if (near_ns >= 8 && 2 * near_ns >= total) return true;
  }
  return false;
}

std::vector<BrightnessPoint> brightness_sweep(const RoadScene& scene, const NSConfig& cfg, const LaneDetector& det,
                                              const BrightnessSweepOptions& opts) {
  if (!(opts.step_m > 0) || !(opts.start_m > opts.stop_m)) throw std::invalid_argument("bad approach range");
  validate(cfg);
  std::vector<BrightnessPoint> out;
  const int steps = static_cast<int>(std::floor((opts.start_m - opts.stop_m) / opts.step_m + 1e-9));
  for (double b : opts.brightness_grid) {
    BrightnessPoint pt;
    pt.brightness = b;
    NSConfig c = cfg;
    c.brightness = b;
    validate(c);
    for (int k = 0; k <= steps; ++k) {
      ComposeOptions co = opts.compose;
      co.near_m = opts.start_m - k * opts.step_m;
      const ShadowLayer layer = make_ns_layer(scene, c, co);
      const ComposeResult attacked = compose(scene, layer, co.subsamples);
      if (attacked.noop) continue;
      if (lane_tracks_ns(scene, layer, det.detect(attacked.image), opts.lateral_tolerance_m)) {
        pt.onset_distance_m = co.near_m;
        pt.travel_m = k * opts.step_m;
        break;
      }
    }
    out.push_back(pt);
  }
  return out;
}

void write_brightness_csv(std::ostream& out, const std::vector<BrightnessPoint>& pts) {
  out << kBrightnessCsvHeader << '\n';
  for (const auto& p : pts) {
    out << csv::fmt(p.brightness) << ',' << (p.onset_distance_m ? csv::fmt(*p.onset_distance_m) : "none") << ','
        << (p.travel_m ? csv::fmt(*p.travel_m) : "none") << '\n';
  }
}

std::vector<BrightnessPoint> read_brightness_csv(std::istream& in) {
  std::vector<BrightnessPoint> out;
  std::string line;
  std::size_t line_no = 0;
  auto opt = [&](std::string_view f) -> std::optional<double> {
    f = csv::trim(f);
    if (f == "none" || f.empty()) return std::nullopt;
    return csv::parse_double(f, line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = csv::trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t == kBrightnessCsvHeader) continue;
    const auto f = csv::split(t);
    if (f.size() != 3) throw csv::ParseError(line_no, "expected 3 fields, got " + std::to_string(f.size()));
    BrightnessPoint p;
    p.brightness = csv::parse_double(f[0], line_no);
    p.onset_distance_m = opt(f[1]);
    p.travel_m = opt(f[2]);
    out.push_back(p);
  }
  return out;
}

}  // namespace shadowlane
