#include "shadowlane/defense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <map>
#include <stdexcept>
#include <string>

#include "shadowlane/csv.hpp"
#include "shadowlane/parallel.hpp"

namespace shadowlane {

void DefenseParams::validate() const {
  if (margin_px <= 0) throw std::invalid_argument("defense margin must be positive");
  if (window_px <= 0) throw std::invalid_argument("defense window must be positive");
  if (!(threshold > 0)) throw std::invalid_argument("defense threshold must be positive");
  if (!(enclosure > 0 && enclosure <= 1)) throw std::invalid_argument("enclosure ratio must lie in (0, 1]");
  if (!(shadow_level > 0 && shadow_level < 1)) throw std::invalid_argument("shadow level must lie in (0, 1)");
  if (fill_radius_px <= 0) throw std::invalid_argument("fill radius must be positive");
  if (grow_px < 0 || grow_px > fill_radius_px) throw std::invalid_argument("grow_px must lie in [0, fill radius]");
  if (min_area_px < 1) throw std::invalid_argument("min_area_px must be at least 1");
}

DefenseParams read_defense_params(std::istream& in) {
  DefenseParams p;
  std::string line;
  std::size_t no = 0;
  auto integer = [&](std::string_view v) { return static_cast<int>(csv::parse_long(v, no)); };
  while (std::getline(in, line)) {
    ++no;
    std::string_view t = csv::trim(std::string_view(line).substr(0, line.find('#')));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw csv::ParseError(no, "expected key = value");
    const std::string key(csv::trim(t.substr(0, eq)));
    const std::string_view val = csv::trim(t.substr(eq + 1));
    if (key == "margin_px") p.margin_px = integer(val);
    else if (key == "window_px") p.window_px = integer(val);
    else if (key == "threshold") p.threshold = val == "inf" ? DefenseParams::disabled().threshold : csv::parse_double(val, no);
    else if (key == "enclosure") p.enclosure = csv::parse_double(val, no);
    else if (key == "shadow_level") p.shadow_level = csv::parse_double(val, no);
    else if (key == "fill_radius_px") p.fill_radius_px = integer(val);
    else if (key == "grow_px") p.grow_px = integer(val);
    else if (key == "min_area_px") p.min_area_px = integer(val);
    else throw csv::ParseError(no, "unknown key '" + key + "'");
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw csv::ParseError(no, e.what());
  }
  return p;
}

void write_defense_params(std::ostream& out, const DefenseParams& p) {
  out << "margin_px = " << p.margin_px << '\n'
      << "window_px = " << p.window_px << '\n'
      << "threshold = " << (std::isinf(p.threshold) ? std::string("inf") : csv::fmt(p.threshold)) << '\n'
      << "enclosure = " << csv::fmt(p.enclosure) << '\n'
      << "shadow_level = " << csv::fmt(p.shadow_level) << '\n'
      << "fill_radius_px = " << p.fill_radius_px << '\n'
      << "grow_px = " << p.grow_px << '\n'
      << "min_area_px = " << p.min_area_px << '\n';
}

FloatRaster normalize_luminance(const Image& image) {
  FloatRaster l = to_luma(image);
  if (l.empty()) return l;
  double sum = 0, sq = 0;
  for (float v : l.data) {
    sum += v;
    sq += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(l.data.size());
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
  const double gain = sd > 1e-6 ? 48.0 / sd : 1.0;
  for (float& v : l.data) v = static_cast<float>(128.0 + (v - mean) * gain);
  return l;
}

namespace {

// Mean over the (2r+1)^2 window clipped to the raster.
FloatRaster box_mean(const FloatRaster& f, int r) {
  const int w = f.width, h = f.height;
  std::vector<double> integral(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
  auto I = [&](int x, int y) -> double& { return integral[static_cast<std::size_t>(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    double row = 0;
    for (int x = 0; x < w; ++x) {
      row += f.at(x, y);
      I(x + 1, y + 1) = I(x + 1, y) + row;
    }
  }
  FloatRaster out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
      const double s = I(x1, y1) - I(x0, y1) - I(x1, y0) + I(x0, y0);
      out.at(x, y) = static_cast<float>(s / ((x1 - x0) * (y1 - y0)));
    }
  }
  return out;
}

struct Component {
  std::vector<int> pixels;  // linear indices
  int x0, y0, x1, y1;       // inclusive bounds
};

std::vector<Component> components(const Mask& m, int min_area) {
  const int w = m.width, h = m.height;
  std::vector<char> seen(m.data.size(), 0);
  std::vector<Component> out;
  std::vector<int> stack;
  for (int start = 0; start < w * h; ++start) {
    if (!m.data[start] || seen[start]) continue;
    Component c{{}, w, h, -1, -1};
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      c.pixels.push_back(i);
      const int x = i % w, y = i / w;
      c.x0 = std::min(c.x0, x);
      c.x1 = std::max(c.x1, x);
      c.y0 = std::min(c.y0, y);
      c.y1 = std::max(c.y1, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int j = ny * w + nx;
          if (m.data[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (static_cast<int>(c.pixels.size()) >= min_area) out.push_back(std::move(c));
  }
  return out;
}

// Square dilation of a component inside its bounding box grown by r.
// Returns the local bitmap and its origin.
struct LocalMap {
  int ox, oy, w, h;
  std::vector<char> in, grown;
};

LocalMap dilate(const Component& c, int width, int height, int r) {
  LocalMap lm;
  lm.ox = std::max(0, c.x0 - r);
  lm.oy = std::max(0, c.y0 - r);
  lm.w = std::min(width - 1, c.x1 + r) - lm.ox + 1;
  lm.h = std::min(height - 1, c.y1 + r) - lm.oy + 1;
  lm.in.assign(static_cast<std::size_t>(lm.w) * lm.h, 0);
  for (int i : c.pixels) lm.in[(i / width - lm.oy) * lm.w + (i % width - lm.ox)] = 1;
  std::vector<char> tmp(lm.in.size(), 0);
  for (int y = 0; y < lm.h; ++y) {
    for (int x = 0; x < lm.w; ++x) {
      if (!lm.in[y * lm.w + x]) continue;
      for (int k = std::max(0, x - r); k <= std::min(lm.w - 1, x + r); ++k) tmp[y * lm.w + k] = 1;
    }
  }
  lm.grown.assign(lm.in.size(), 0);
  for (int x = 0; x < lm.w; ++x) {
    for (int y = 0; y < lm.h; ++y) {
      if (!tmp[y * lm.w + x]) continue;
      for (int k = std::max(0, y - r); k <= std::min(lm.h - 1, y + r); ++k) lm.grown[k * lm.w + x] = 1;
    }
  }
  return lm;
}

float pavement_level(const FloatRaster& n) {
  std::vector<float> lower(n.data.begin() + static_cast<std::ptrdiff_t>(n.height / 2) * n.width, n.data.end());
  if (lower.empty()) return 128.0f;
  auto mid = lower.begin() + static_cast<std::ptrdiff_t>(lower.size() / 2);
  std::nth_element(lower.begin(), mid, lower.end());
  return *mid;
}

}  // namespace

Image luminosity_filter(const Image& image, const DefenseParams& params, FilterReport* report) {
  params.validate();
  if (image.channels != 3 && image.channels != 1) throw std::invalid_argument("expected 1 or 3 channels");
  FilterReport rep;
  Image out = image;
  if (image.empty() || std::isinf(params.threshold)) {
    if (report) *report = rep;
    return out;
  }
  const int w = image.width, h = image.height;
  const FloatRaster norm = normalize_luminance(image);
  const FloatRaster mean = box_mean(norm, params.window_px);
  Mask bright(w, h, 1);
  for (std::size_t i = 0; i < norm.data.size(); ++i) {
    if (norm.data[i] - mean.data[i] > params.threshold) bright.data[i] = 255;
  }
  const float dark_below = static_cast<float>(params.shadow_level) * pavement_level(norm);

  std::vector<char> suppress(norm.data.size(), 0);
  const auto comps = components(bright, params.min_area_px);
  rep.components = comps.size();
  for (const auto& c : comps) {
    const LocalMap ring = dilate(c, w, h, params.margin_px);
    std::size_t total = 0, dark = 0;
    for (int y = 0; y < ring.h; ++y) {
      for (int x = 0; x < ring.w; ++x) {
        const std::size_t k = static_cast<std::size_t>(y) * ring.w + x;
        if (!ring.grown[k] || ring.in[k]) continue;
        ++total;
        if (norm.at(ring.ox + x, ring.oy + y) < dark_below) ++dark;
      }
    }
    if (total == 0 || static_cast<double>(dark) < params.enclosure * static_cast<double>(total)) continue;
    ++rep.suppressed;
    const LocalMap g = dilate(c, w, h, params.grow_px);
    for (int y = 0; y < g.h; ++y) {
      for (int x = 0; x < g.w; ++x) {
        if (g.grown[static_cast<std::size_t>(y) * g.w + x]) suppress[(g.oy + y) * w + g.ox + x] = 1;
      }
    }
  }

  // Median of the untouched neighbours; the window widens past fill_radius_px
  // only for pixels deep inside a wide component.
  std::vector<std::uint8_t> vals;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!suppress[y * w + x]) continue;
      ++rep.filled_px;
      for (int r = params.fill_radius_px;; r *= 2) {
        const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        bool any = false;
        for (int ch = 0; ch < image.channels; ++ch) {
          vals.clear();
          for (int yy = y0; yy <= y1; ++yy) {
            for (int xx = x0; xx <= x1; ++xx) {
              if (!suppress[yy * w + xx]) vals.push_back(image.at(xx, yy, ch));
            }
          }
          if (vals.empty()) break;
          any = true;
          auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
          std::nth_element(vals.begin(), mid, vals.end());
          out.at(x, y, ch) = *mid;
        }
        if (any || (x0 == 0 && y0 == 0 && x1 == w - 1 && y1 == h - 1)) break;
      }
    }
  }
  if (report) *report = rep;
  return out;
}

DefenseEvaluation defense_rate(const std::vector<AttackOutcome>& successes, const std::vector<RoadScene>& scenes,
                               const LaneDetector& detector, double threshold, const DefenseParams& params,
                               const ComposeOptions& compose_opts, int workers) {
  if (successes.empty()) throw std::invalid_argument("defense_rate needs at least one successful outcome");
  params.validate();
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < scenes.size(); ++i) by_id[scenes[i].id] = i;
  for (const auto& o : successes) {
    if (!o.success) throw std::invalid_argument("defense_rate input contains an unsuccessful outcome");
    if (!by_id.count(o.scene_id)) throw std::invalid_argument("unknown scene id: " + o.scene_id);
  }
  const BinarizeParams bin;
  std::vector<Mask> pre(scenes.size());
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    pre[i] = adaptive_binarize(detector.detect(luminosity_filter(scenes[i].image, params)).mask, bin);
  });
  std::vector<char> defended(successes.size(), 0);
  parallel_for(successes.size(), workers, [&](std::size_t i) {
    const auto& o = successes[i];
    const std::size_t si = by_id.at(o.scene_id);
    const ComposeResult post = compose(scenes[si], o.config, compose_opts);
    const Image filtered = luminosity_filter(post.image, params);
    const Mask m = adaptive_binarize(detector.detect(filtered).mask, bin);
    defended[i] = !diff_binarized(pre[si], m, threshold).success;
  });
  DefenseEvaluation ev;
  ev.n = successes.size();
  ev.defended = static_cast<std::size_t>(std::count(defended.begin(), defended.end(), 1));
  return ev;
}

std::size_t benign_regressions(const std::vector<RoadScene>& scenes, const LaneDetector& detector, double threshold,
                               const DefenseParams& params) {
  std::size_t n = 0;
  for (const auto& s : scenes) {
    const auto before = detector.detect(s.image);
    const auto after = detector.detect(luminosity_filter(s.image, params));
    if (diff_lanes(before, after, threshold).removed_px > threshold) ++n;
  }
  return n;
}

}  // namespace shadowlane
