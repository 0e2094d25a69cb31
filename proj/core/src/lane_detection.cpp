#include "shadowlane/lane_detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "json.hpp"
#include "shadowlane/image_io.hpp"

namespace shadowlane {

void DetectorParams::validate() const {
  if (eq_tiles_x < 1 || eq_tiles_y < 1) throw std::invalid_argument("equalization needs >= 1 tile");
  if (!(eq_clip >= 0)) throw std::invalid_argument("clip limit must be >= 0");
  if (!(grad_low > 0 && grad_low < grad_high && grad_high <= 1)) {
    throw std::invalid_argument("gradient thresholds need 0 < low < high <= 1");
  }
  if (windows < 1 || !(window_half_width_m > 0)) throw std::invalid_argument("bad sliding-window settings");
  if (min_pixels_per_window < 1 || min_windows < 1) throw std::invalid_argument("window minima must be >= 1");
  if (poly_degree < 0 || poly_degree > 2) throw std::invalid_argument("polynomial degree must be 0..2");
  if (!(max_lane_width_m > 0)) throw std::invalid_argument("max lane width must be > 0");
  if (!(max_lane_angle_deg > 0 && max_lane_angle_deg <= 90)) throw std::invalid_argument("bad max lane angle");
  if (!(base_fraction > 0 && base_fraction <= 1)) throw std::invalid_argument("base_fraction must be in (0,1]");
  if (band_px < 1) throw std::invalid_argument("band_px must be >= 1");
}

namespace {

int median_of_hist(const std::array<int, 256>& hist, int count) {
  const int half = (count + 1) / 2;
  int acc = 0;
  for (int v = 0; v < 256; ++v) {
    acc += hist[static_cast<std::size_t>(v)];
    if (acc >= half) return v;
  }
  return 255;
}

int bin_of(float v) { return std::clamp(static_cast<int>(v + 0.5f), 0, 255); }

}  // namespace

FloatRaster equalize_tiles(const FloatRaster& in, const Mask* valid, int tiles_x, int tiles_y, double clip) {
  if (in.channels != 1) throw std::invalid_argument("equalize_tiles expects one channel");
  if (valid && (valid->width != in.width || valid->height != in.height)) {
    throw std::invalid_argument("validity mask shape mismatch");
  }
  const int W = in.width;
  const int H = in.height;
  FloatRaster out = in;
  if (W == 0 || H == 0) return out;
  tiles_x = std::min(tiles_x, W);
  tiles_y = std::min(tiles_y, H);
  auto ok = [&](std::size_t i) { return !valid || valid->data[i] != 0; };

  std::array<int, 256> global{};
  int n_global = 0;
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    if (!ok(i)) continue;
    ++global[static_cast<std::size_t>(bin_of(in.data[i]))];
    ++n_global;
  }
  if (n_global == 0) return out;
  const double target = median_of_hist(global, n_global);

  std::vector<double> offset(static_cast<std::size_t>(tiles_x * tiles_y), 0.0);
  for (int ty = 0; ty < tiles_y; ++ty) {
    const int y0 = ty * H / tiles_y;
    const int y1 = (ty + 1) * H / tiles_y;
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int x0 = tx * W / tiles_x;
      const int x1 = (tx + 1) * W / tiles_x;
      std::array<int, 256> hist{};
      int n = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * W + x;
          if (!ok(i)) continue;
          ++hist[static_cast<std::size_t>(bin_of(in.data[i]))];
          ++n;
        }
      }
      // sparsely covered tiles keep a zero shift
      if (n * 4 < (x1 - x0) * (y1 - y0)) continue;
      offset[static_cast<std::size_t>(ty * tiles_x + tx)] =
          std::clamp(target - median_of_hist(hist, n), -clip, clip);
    }
  }

  const double tw = static_cast<double>(W) / tiles_x;
  const double th = static_cast<double>(H) / tiles_y;
  for (int y = 0; y < H; ++y) {
    const double fy = std::clamp((y + 0.5) / th - 0.5, 0.0, tiles_y - 1.0);
    const int iy0 = static_cast<int>(fy);
    const int iy1 = std::min(iy0 + 1, tiles_y - 1);
    const double wy = fy - iy0;
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      if (!ok(i)) continue;
      const double fx = std::clamp((x + 0.5) / tw - 0.5, 0.0, tiles_x - 1.0);
      const int ix0 = static_cast<int>(fx);
      const int ix1 = std::min(ix0 + 1, tiles_x - 1);
      const double wx = fx - ix0;
      auto at = [&](int tx, int ty) { return offset[static_cast<std::size_t>(ty * tiles_x + tx)]; };
      const double o = (at(ix0, iy0) * (1 - wx) + at(ix1, iy0) * wx) * (1 - wy) +
                       (at(ix0, iy1) * (1 - wx) + at(ix1, iy1) * wx) * wy;
      out.data[i] = static_cast<float>(in.data[i] + o);
    }
  }
  return out;
}

FloatRaster preprocess_only(const Image& image, const DetectorParams& params) {
  params.validate();
  return equalize_tiles(to_luma(image), nullptr, params.eq_tiles_x, params.eq_tiles_y, params.eq_clip);
}

Mask rasterize_lanes(const std::vector<Lane>& lanes, int width, int height, int band_px) {
  Mask m(width, height, 1);
  for (const auto& lane : lanes) {
    for (const Vec2& p : lane.points) {
      const int v = static_cast<int>(std::lround(p.y));
      if (v < 0 || v >= height) continue;
      const int c = static_cast<int>(std::lround(p.x));
      const int x0 = std::max(0, c - band_px / 2);
      const int x1 = std::min(width - 1, c - band_px / 2 + band_px - 1);
      for (int x = x0; x <= x1; ++x) m.at(x, v) = 255;
    }
  }
  return m;
}

ReferenceDetector::ReferenceDetector(Calibration calib, DetectorParams params)
    : calib_(std::move(calib)), params_(params) {
  calib_.camera.validate();
  calib_.grid.validate();
  params_.validate();
  ground_to_image_ = calib_.camera.ground_to_image();
  const int W = calib_.grid.width();
  const int H = calib_.grid.height();
  map_x_.assign(static_cast<std::size_t>(W) * H, -1.0f);
  map_y_.assign(static_cast<std::size_t>(W) * H, -1.0f);
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      const auto p = ground_to_image_.apply(calib_.grid.to_metric(i, j));
      if (!p) continue;
      if (p->x < 0 || p->y < 0 || p->x > calib_.camera.width - 1 || p->y > calib_.camera.height - 1) continue;
      const std::size_t k = static_cast<std::size_t>(j) * W + i;
      map_x_[k] = static_cast<float>(p->x);
      map_y_[k] = static_cast<float>(p->y);
    }
  }
}

LaneDetectionResult ReferenceDetector::detect(const Image& image) const { return detect_traced(image, nullptr); }

namespace {

struct RidgePoint {
  float x;
  float width;
  int row;
};

struct Track {
  double xc;     // predicted centre at the current window centre (BEV px)
  double slope;  // px per row travelled upward
  int supported = 0;
  int last_supported = -1;
  std::vector<RidgePoint> points;
};

// Least squares for X = c0 + c1 t + c2 t^2 with t centred on `mid`.
bool fit_poly(const std::vector<Vec2>& pts, int degree, double mid, std::array<double, 3>& c) {
  const int n = degree + 1;
  double A[3][4] = {};
  for (const Vec2& p : pts) {
    const double t = p.y - mid;
    const double basis[3] = {1.0, t, t * t};
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) A[r][k] += basis[r] * basis[k];
      A[r][3] += basis[r] * p.x;
    }
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-12) return false;
    std::swap(A[col], A[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = A[r][col] / A[col][col];
      for (int k = col; k < 4; ++k) A[r][k] -= f * A[col][k];
    }
  }
  double local[3] = {0, 0, 0};
  for (int r = 0; r < n; ++r) local[r] = A[r][3] / A[r][r];
  // expand about Y = 0
  c[0] = local[0] - local[1] * mid + local[2] * mid * mid;
  c[1] = local[1] - 2 * local[2] * mid;
  c[2] = local[2];
  return true;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

LaneDetectionResult ReferenceDetector::detect_traced(const Image& image, Trace* trace) const {
  const CameraModel& cam = calib_.camera;
  if (image.width != cam.width || image.height != cam.height) {
    throw std::invalid_argument("image size does not match the detector calibration");
  }
  if (image.channels != 3 && image.channels != 1) throw std::invalid_argument("detector expects RGB or gray input");
  const DetectorParams& P = params_;
  const BevGrid& grid = calib_.grid;
  const int W = grid.width();
  const int H = grid.height();
  const std::size_t N = static_cast<std::size_t>(W) * H;

  // (1) luma sampled onto the BEV grid
  FloatRaster lum(W, H, 1);
  Mask valid(W, H, 1);
  auto luma_at = [&](int x, int y) -> float {
    if (image.channels == 1) return image.at(x, y);
    return luma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
  };
  for (std::size_t k = 0; k < N; ++k) {
    const float u = map_x_[k];
    if (u < 0) continue;
    const float v = map_y_[k];
    const int x0 = static_cast<int>(u);
    const int y0 = static_cast<int>(v);
    const int x1 = std::min(x0 + 1, image.width - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float tx = u - x0;
    const float ty = v - y0;
    lum.data[k] = (luma_at(x0, y0) * (1 - tx) + luma_at(x1, y0) * tx) * (1 - ty) +
                  (luma_at(x0, y1) * (1 - tx) + luma_at(x1, y1) * tx) * ty;
    valid.data[k] = 255;
  }

  // (2) shadow-flattening equalization
  FloatRaster eq = equalize_tiles(lum, &valid, P.eq_tiles_x, P.eq_tiles_y, P.eq_clip);
  {
    std::vector<float> vals;
    for (std::size_t k = 0; k < N; ++k)
      if (valid.data[k]) vals.push_back(eq.data[k]);
    float fill = 0;
    if (!vals.empty()) {
      std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2), vals.end());
      fill = vals[vals.size() / 2];
    }
    for (std::size_t k = 0; k < N; ++k)
      if (!valid.data[k]) eq.data[k] = fill;
  }

  // (3) Sobel gradient and hysteresis
  std::vector<float> gx(N, 0.0f), mag(N, 0.0f);
  float gmax = 0;
  for (int y = 1; y + 1 < H; ++y) {
    for (int x = 1; x + 1 < W; ++x) {
      bool all_valid = true;
      for (int dy = -1; dy <= 1 && all_valid; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (!valid.at(x + dx, y + dy)) {
            all_valid = false;
            break;
          }
      if (!all_valid) continue;
      auto e = [&](int dx, int dy) { return eq.at(x + dx, y + dy); };
      const float sx = (e(1, -1) + 2 * e(1, 0) + e(1, 1) - e(-1, -1) - 2 * e(-1, 0) - e(-1, 1)) / 8.0f;
      const float sy = (e(-1, 1) + 2 * e(0, 1) + e(1, 1) - e(-1, -1) - 2 * e(0, -1) - e(1, -1)) / 8.0f;
      const std::size_t k = static_cast<std::size_t>(y) * W + x;
      gx[k] = sx;
      mag[k] = std::sqrt(sx * sx + sy * sy);
      gmax = std::max(gmax, mag[k]);
    }
  }
  Mask edges(W, H, 1);
  if (gmax > 1.0f) {
    const float hi = static_cast<float>(P.grad_high) * gmax;
    const float lo = static_cast<float>(P.grad_low) * gmax;
    std::vector<std::size_t> stack;
    for (std::size_t k = 0; k < N; ++k) {
      if (mag[k] >= hi) {
        edges.data[k] = 255;
        stack.push_back(k);
      }
    }
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(k % W);
      const int y = static_cast<int>(k / W);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
          const std::size_t n = static_cast<std::size_t>(ny) * W + nx;
          if (edges.data[n] || mag[n] < lo) continue;
          edges.data[n] = 255;
          stack.push_back(n);
        }
      }
    }
    // keep only edges whose gradient is mostly horizontal
    for (std::size_t k = 0; k < N; ++k)
      if (edges.data[k] && std::abs(gx[k]) < 0.5f * mag[k]) edges.data[k] = 0;
  }

  // (4) per-row edge peaks paired into ridges (bright stripe: rising then falling)
  const double max_w_px = P.max_lane_width_m / grid.m_per_px;
  std::vector<std::vector<RidgePoint>> rows(static_cast<std::size_t>(H));
  for (int y = 0; y < H; ++y) {
    const std::size_t base = static_cast<std::size_t>(y) * W;
    double last_rise = -1e9;
    bool have_rise = false;
    for (int x = 1; x + 1 < W; ++x) {
      const std::size_t k = base + x;
      if (!edges.data[k]) continue;
      const float g = gx[k];
      const float a = std::abs(g);
      auto same = [&](std::size_t n) { return (gx[n] > 0) == (g > 0) && edges.data[n] ? std::abs(gx[n]) : 0.0f; };
      const float l = same(k - 1);
      const float r = same(k + 1);
      if (!(a >= l && a > r)) continue;
      const float den = l - 2 * a + r;
      const double pos = x + (den != 0 ? 0.5 * (l - r) / den : 0.0);
      if (g > 0) {
        last_rise = pos;
        have_rise = true;
      } else {
        if (have_rise && pos - last_rise > 0 && pos - last_rise <= max_w_px) {
          rows[static_cast<std::size_t>(y)].push_back(
              {static_cast<float>(0.5 * (pos + last_rise)), static_cast<float>(pos - last_rise), y});
        }
        have_rise = false;
      }
    }
  }

  // (5) base histogram over the near rows
  std::vector<double> hist(static_cast<std::size_t>(W), 0.0);
  const int base_row = static_cast<int>(H * (1.0 - P.base_fraction));
  for (int y = base_row; y < H; ++y)
    for (const auto& p : rows[static_cast<std::size_t>(y)]) {
      const int c = std::clamp(static_cast<int>(std::lround(p.x)), 0, W - 1);
      hist[static_cast<std::size_t>(c)] += 1;
    }
  std::vector<double> smooth(hist.size(), 0.0);
  for (int x = 0; x < W; ++x) {
    static constexpr double kKernel[5] = {1, 2, 3, 2, 1};
    double s = 0;
    for (int d = -2; d <= 2; ++d) {
      const int xx = x + d;
      if (xx >= 0 && xx < W) s += kKernel[d + 2] * hist[static_cast<std::size_t>(xx)];
    }
    smooth[static_cast<std::size_t>(x)] = s / 3.0;  // peak-normalized: a column of n points scores n
  }
  std::vector<std::pair<double, int>> peaks;
  for (int x = 0; x < W; ++x) {
    const double v = smooth[static_cast<std::size_t>(x)];
    const double l = x > 0 ? smooth[static_cast<std::size_t>(x - 1)] : -1;
    const double r = x + 1 < W ? smooth[static_cast<std::size_t>(x + 1)] : -1;
    if (v >= P.min_peak && v >= l && v > r) peaks.emplace_back(v, x);
  }
  std::sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  const double min_sep = P.min_peak_separation_m / grid.m_per_px;
  std::vector<Track> tracks;
  for (const auto& [v, x] : peaks) {
    bool clash = false;
    for (const auto& t : tracks) clash = clash || std::abs(t.xc - x) < min_sep;
    if (!clash) tracks.push_back({static_cast<double>(x), 0.0, 0, -1, {}});
  }

  // (6) sliding windows from the near edge upward
  const double wh = static_cast<double>(H) / P.windows;
  const double hw = P.window_half_width_m / grid.m_per_px;
  for (int w = 0; w < P.windows && !tracks.empty(); ++w) {
    const int r_hi = H - 1 - static_cast<int>(std::floor(w * wh));
    const int r_lo = std::max(0, H - static_cast<int>(std::floor((w + 1) * wh)));
    const double wc = 0.5 * (r_lo + r_hi);
    std::vector<std::vector<RidgePoint>> got(tracks.size());
    for (int y = r_lo; y <= r_hi; ++y) {
      for (const auto& p : rows[static_cast<std::size_t>(y)]) {
        int best = -1;
        double bd = hw;
        for (std::size_t t = 0; t < tracks.size(); ++t) {
          const double pred = tracks[t].xc + tracks[t].slope * (wc - y);
          const double d = std::abs(p.x - pred);
          if (d <= bd) {
            bd = d;
            best = static_cast<int>(t);
          }
        }
        if (best >= 0) got[static_cast<std::size_t>(best)].push_back(p);
      }
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      Track& tr = tracks[t];
      const auto& pts = got[t];
      if (static_cast<int>(pts.size()) >= P.min_pixels_per_window) {
        // local line x = a + b (wc - row)
        double sw = 0, st = 0, sx = 0, stt = 0, stx = 0;
        int rmin = H, rmax = -1;
        for (const auto& p : pts) {
          const double tt = wc - p.row;
          sw += 1;
          st += tt;
          sx += p.x;
          stt += tt * tt;
          stx += tt * p.x;
          rmin = std::min(rmin, p.row);
          rmax = std::max(rmax, p.row);
        }
        const double den = sw * stt - st * st;
        double a = sx / sw;
        if (rmax - rmin >= wh / 3 && den > 1e-9) {
          const double b = (sw * stx - st * sx) / den;
          a = (sx - b * st) / sw;
          tr.slope = tr.supported > 0 ? 0.5 * (tr.slope + b) : b;
        }
        tr.xc = a;
        tr.supported += 1;
        tr.last_supported = w;
        tr.points.insert(tr.points.end(), pts.begin(), pts.end());
      }
      tr.xc += tr.slope * wh;
    }
  }

  // (7) fit, filter, merge
  struct Candidate {
    Lane lane;
    std::size_t support;
  };
  std::vector<Candidate> cands;
  for (const auto& tr : tracks) {
    if (tr.supported < P.min_windows) continue;
    std::vector<Vec2> pts;
    std::vector<double> widths;
    pts.reserve(tr.points.size());
    for (const auto& p : tr.points) {
      const Vec2 m = grid.to_metric(p.x, p.row);
      pts.push_back({m.x, m.y});
      widths.push_back(p.width * grid.m_per_px);
    }
    double y_near = 1e9, y_far = -1e9;
    for (const auto& p : pts) {
      y_near = std::min(y_near, p.y);
      y_far = std::max(y_far, p.y);
    }
    const double span = y_far - y_near;
    const int degree = std::min(P.poly_degree, span >= 6.0 ? 2 : (span >= 1.0 ? 1 : 0));
    const double mid = 0.5 * (y_near + y_far);
    std::array<double, 3> c{};
    if (!fit_poly(pts, degree, mid, c)) continue;
    // one pass of outlier removal
    std::vector<Vec2> kept;
    for (const auto& p : pts) {
      if (std::abs(p.x - (c[0] + (c[1] + c[2] * p.y) * p.y)) <= 0.15) kept.push_back(p);
    }
    if (kept.size() >= pts.size() / 2 && kept.size() != pts.size() && kept.size() > 3) fit_poly(kept, degree, mid, c);
    Lane lane;
    lane.coeffs = c;
    lane.y_near = y_near;
    lane.y_far = y_far;
    lane.width_m = median(widths);
    lane.confidence = static_cast<double>(tr.supported) / P.windows;
    const double slope = c[1] + 2 * c[2] * mid;
    if (lane.width_m > P.max_lane_width_m) continue;
    if (rad2deg(std::atan(std::abs(slope))) > P.max_lane_angle_deg) continue;
    cands.push_back({lane, tr.points.size()});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.support > b.support || (a.support == b.support && a.lane.coeffs[0] < b.lane.coeffs[0]);
  });
  std::vector<Lane> lanes;
  for (const auto& cand : cands) {
    bool dup = false;
    for (const auto& kept : lanes) {
      const double y0 = std::max(kept.y_near, cand.lane.y_near);
      const double y1 = std::min(kept.y_far, cand.lane.y_far);
      if (y1 <= y0) continue;
      double acc = 0;
      for (int i = 0; i <= 10; ++i) {
        const double y = y0 + (y1 - y0) * i / 10.0;
        acc += std::abs(kept.x_at(y) - cand.lane.x_at(y));
      }
      if (acc / 11.0 < 0.1) dup = true;
    }
    if (!dup) lanes.push_back(cand.lane);
  }
  std::sort(lanes.begin(), lanes.end(), [](const Lane& a, const Lane& b) {
    return a.x_at(a.y_near) < b.x_at(b.y_near);
  });

  // (8) back to the camera view
  for (auto& lane : lanes) {
    const double v_bottom = cam.row_for_ground_y(lane.y_near);
    const double v_top = cam.row_for_ground_y(lane.y_far);
    for (int v = std::min(cam.height - 1, static_cast<int>(std::floor(v_bottom)));
         v >= std::max(0, static_cast<int>(std::ceil(v_top))); --v) {
      const double y = cam.ground_y_for_row(v);
      const auto p = ground_to_image_.apply({lane.x_at(y), y});
      if (!p || p->x < 0 || p->x > cam.width - 1) continue;
      lane.points.push_back({p->x, static_cast<double>(v)});
    }
  }
  lanes.erase(std::remove_if(lanes.begin(), lanes.end(), [](const Lane& l) { return l.points.size() < 2; }),
              lanes.end());

  LaneDetectionResult res;
  res.mask = rasterize_lanes(lanes, cam.width, cam.height, P.band_px);
  res.lanes = std::move(lanes);
  if (trace) {
    trace->bev_luma = std::move(lum);
    trace->bev_valid = std::move(valid);
    trace->equalized = std::move(eq);
    trace->edges = std::move(edges);
  }
  return res;
}

void write_detection(std::ostream& out, const LaneDetectionResult& r) {
  write_ppm(out, r.mask);
  for (std::size_t i = 0; i < r.lanes.size(); ++i) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.lanes[i].points) pts.push_back({p.x, p.y});
    out << nlohmann::json{{"lane", i}, {"confidence", r.lanes[i].confidence}, {"points", pts}}.dump() << '\n';
  }
}

LaneDetectionResult read_detection(std::istream& in) {
  LaneDetectionResult r;
  const Image mask = read_pnm(in);
  r.mask = Mask(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < r.mask.data.size(); ++i) {
    r.mask.data[i] = mask.data[i * static_cast<std::size_t>(mask.channels)] ? 255 : 0;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Lane lane;
      lane.confidence = j.value("confidence", 0.0);
      for (const auto& p : j.at("points")) lane.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      r.lanes.push_back(std::move(lane));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("detector output line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return r;
}

LaneDetectionResult SubprocessDetector::detect(const Image& image) const {
  char path[] = "/tmp/shadowlane_frame_XXXXXX";
  const int fd = mkstemp(path);
  if (fd < 0) throw std::runtime_error("cannot create temporary frame file");
  close(fd);
  struct Cleanup {
    const char* p;
    ~Cleanup() { std::remove(p); }
  } cleanup{path};
  write_ppm(std::filesystem::path(path), image);
  const std::string cmd = "(" + command_ + ") < '" + path + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("cannot start detector: " + command_);
  std::string buf;
  char chunk[65536];
  std::size_t n;
  while ((n = std::fread(chunk, 1, sizeof chunk, pipe)) > 0) buf.append(chunk, n);
  const int status = pclose(pipe);
  if (status != 0) throw std::runtime_error("detector exited with status " + std::to_string(status));
  std::istringstream in(buf);
  auto r = read_detection(in);
  if (r.mask.width != image.width || r.mask.height != image.height) {
    throw std::runtime_error("detector mask size does not match the frame");
  }
  return r;
}

std::unique_ptr<LaneDetector> make_detector(const std::string& spec, const Calibration& calib,
                                            const DetectorParams& params) {
  if (spec == "reference") return std::make_unique<ReferenceDetector>(calib, params);
  if (spec.rfind("cmd:", 0) == 0 && spec.size() > 4) return std::make_unique<SubprocessDetector>(spec.substr(4));
  throw std::invalid_argument("unknown detector '" + spec + "' (expected reference or cmd:...)");
}

}  // namespace shadowlane
