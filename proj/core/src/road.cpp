#include "shadowlane/road.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shadowlane {
namespace {

Vec2 piece_point(const RoadPath::Piece& p, double t) {
  if (p.curvature == 0.0) return p.start + Vec2{std::cos(p.heading), std::sin(p.heading)} * t;
  const double k = p.curvature;
  return p.start + Vec2{(std::sin(p.heading + k * t) - std::sin(p.heading)) / k,
                        (std::cos(p.heading) - std::cos(p.heading + k * t)) / k};
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1].
double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                         static_cast<std::uint64_t>(iy)));
  return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double value_noise(Vec2 p, double cell, std::uint64_t seed) {
  const double fx = p.x / cell;
  const double fy = p.y / cell;
  const double x0 = std::floor(fx);
  const double y0 = std::floor(fy);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const auto ix = static_cast<std::int64_t>(x0);
  const auto iy = static_cast<std::int64_t>(y0);
  const double a = lattice(ix, iy, seed);
  const double b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed);
  const double d = lattice(ix + 1, iy + 1, seed);
  return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

Rgb scale_rgb(Rgb c, double delta) {
  return {clamp_u8(c[0] + delta), clamp_u8(c[1] + delta), clamp_u8(c[2] + delta)};
}

}  // namespace

RoadPath& RoadPath::line(double length) { return append(length, 0.0); }

RoadPath& RoadPath::append(double length, double curvature) {
  if (!(length > 0)) throw std::invalid_argument("path piece length must be > 0");
  Piece p;
  if (pieces_.empty()) {
    p.start = start_;
    p.heading = heading_;
  } else {
    const Piece& last = pieces_.back();
    p.start = piece_point(last, last.length);
    p.heading = last.heading + last.curvature * last.length;
  }
  p.length = length;
  p.curvature = curvature;
  offsets_.push_back(this->length());
  pieces_.push_back(p);
  return *this;
}

RoadPath& RoadPath::arc(double radius, double angle_deg, bool left) {
  if (!(radius > 0) || !(angle_deg > 0)) throw std::invalid_argument("arc radius and angle must be > 0");
  return append(radius * deg2rad(angle_deg), (left ? 1.0 : -1.0) / radius);
}

double RoadPath::length() const {
  return pieces_.empty() ? 0.0 : offsets_.back() + pieces_.back().length;
}

Pose RoadPath::pose_at(double s) const {
  if (pieces_.empty()) {
    const Vec2 t{std::cos(heading_), std::sin(heading_)};
    return {start_ + t * s, heading_};
  }
  std::size_t i = 0;
  while (i + 1 < pieces_.size() && s >= offsets_[i + 1]) ++i;
  const Piece& p = pieces_[i];
  double t = s - offsets_[i];
  if (t < 0 || t > p.length) {
    // straight extrapolation beyond the ends
    const double edge = t < 0 ? 0.0 : p.length;
    const double h = p.heading + p.curvature * edge;
    return {piece_point(p, edge) + Vec2{std::cos(h), std::sin(h)} * (t - edge), h};
  }
  return {piece_point(p, t), p.heading + p.curvature * t};
}

Vec2 RoadPath::point_at(double s, double n) const {
  const Pose pose = pose_at(s);
  return pose.pos + pose.right() * n;
}

RoadPath::Frenet RoadPath::to_frenet(Vec2 p) const {
  if (pieces_.empty()) {
    const Pose base{start_, heading_};
    const Vec2 l = base.to_local(p);
    return {l.y, l.x};
  }
  Frenet best{0, std::numeric_limits<double>::infinity()};
  const std::size_t n = pieces_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Piece& pc = pieces_[i];
    double sl = 0;
    double off = 0;
    if (pc.curvature == 0.0) {
      const Pose base{pc.start, pc.heading};
      const Vec2 l = base.to_local(p);
      sl = l.y;
      off = l.x;
    } else {
      const double k = pc.curvature;
      const double R = 1.0 / std::abs(k);
      const Vec2 c = pc.start + Vec2{-std::sin(pc.heading), std::cos(pc.heading)} * (1.0 / k);
      const Vec2 d0 = pc.start - c;
      const Vec2 d = p - c;
      double delta = std::atan2(d0.cross(d), d0.dot(d));  // signed, CCW positive
      if (k < 0) delta = -delta;
      sl = delta * R;
      off = k > 0 ? d.norm() - R : R - d.norm();
    }
    const bool before_ok = sl >= 0 || i == 0;
    const bool after_ok = sl <= pc.length || i + 1 == n;
    if (before_ok && after_ok && std::abs(off) < std::abs(best.n)) best = {offsets_[i] + sl, off};
  }
  if (!std::isfinite(best.n)) {
    // inside a corner gap: fall back to the nearest piece end
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (double t : {0.0, pieces_[i].length}) {
        const Pose pose = pose_at(offsets_[i] + t);
        const double dist = (p - pose.pos).norm();
        if (dist < bd) {
          bd = dist;
          best = {offsets_[i] + t, pose.to_local(p).x};
        }
      }
    }
  }
  return best;
}

bool Marking::painted_at(double s, double n) const {
  if (std::abs(n - offset_m) > 0.5 * width_m) return false;
  if (dash_on_m <= 0) return true;
  const double period = dash_on_m + dash_off_m;
  double phase = std::fmod(s, period);
  if (phase < 0) phase += period;
  return phase < dash_on_m;
}

RoadSpec RoadSpec::straight_two_lane(double edge_offset, double length) {
  RoadSpec r;
  r.path = RoadPath({0.0, -50.0}, kPi / 2);
  r.path.line(length);
  r.markings = {Marking{0.0, 0.16, 0, 0, kYellowMarking},
                Marking{edge_offset, 0.16, 0, 0, kWhiteMarking},
                Marking{-edge_offset, 0.16, 0, 0, kWhiteMarking}};
  r.surface_left_m = edge_offset + 0.3;
  r.surface_right_m = edge_offset + 0.3;
  return r;
}

Rgb road_color(const RoadSpec& road, Vec2 world) {
  const auto f = road.path.to_frenet(world);
  const double amp = road.noise_amplitude;
  const double grain = amp == 0 ? 0.0
                                : amp * (0.75 * value_noise(world, 0.2, road.seed) +
                                         0.25 * value_noise(world, 0.05, road.seed + 1));
  if (f.n < -road.surface_left_m || f.n > road.surface_right_m) return scale_rgb(road.grass, 1.5 * grain);
  for (const auto& m : road.markings) {
    if (m.painted_at(f.s, f.n)) return scale_rgb(m.color, 0.5 * grain);
  }
  const std::uint8_t g = clamp_u8(road.pavement_luma + grain);
  return {g, g, g};
}

Image render_road(const RoadSpec& road, const CameraModel& cam, const Pose& pose, int samples) {
  cam.validate();
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const Mat3 to_ground = cam.image_to_ground();
  const double horizon = cam.horizon_row();
  constexpr double kMaxRange = 150.0;
  const Rgb haze{186, 198, 212};
  Image img(cam.width, cam.height, 3);
  const int n2 = samples * samples;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      int acc[3] = {0, 0, 0};
      for (int sy = 0; sy < samples; ++sy) {
        for (int sx = 0; sx < samples; ++sx) {
          const double fu = u + (sx + 0.5) / samples - 0.5;
          const double fv = v + (sy + 0.5) / samples - 0.5;
          Rgb c;
          const auto g = fv > horizon + 1e-6 ? to_ground.apply({fu, fv}) : std::nullopt;
          if (!g || g->y <= 0) {
            const double t = std::clamp(fv / std::max(horizon, 1.0), 0.0, 1.0);
            c = {clamp_u8(120 + 66 * t), clamp_u8(160 + 38 * t), clamp_u8(215 - 3 * t)};
          } else if (g->y > kMaxRange) {
            c = haze;
          } else {
            c = road_color(road, pose.to_world(*g));
          }
          for (int k = 0; k < 3; ++k) acc[k] += c[static_cast<std::size_t>(k)];
        }
      }
      for (int k = 0; k < 3; ++k) img.at(u, v, k) = static_cast<std::uint8_t>((acc[k] + n2 / 2) / n2);
    }
  }
  return img;
}

}  // namespace shadowlane
