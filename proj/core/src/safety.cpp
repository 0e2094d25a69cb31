#include "shadowlane/safety.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "shadowlane/csv.hpp"
#include "shadowlane/parallel.hpp"

namespace shadowlane::sim {

double mph_to_mps(double mph) { return mph * 0.44704; }

VehicleState step(const VehicleState& s, double steer, double dt) {
  if (!(dt > 0 && dt <= 0.1)) throw std::invalid_argument("dt must be in (0, 0.1] s");
  if (!(s.speed >= 0)) throw std::invalid_argument("speed must be >= 0");
  const double delta = std::clamp(steer, -kMaxSteer, kMaxSteer);
  const double omega = -s.speed * std::tan(delta) / kWheelbase;
  VehicleState n = s;
  const double d = s.speed * dt;
  if (std::abs(omega) < 1e-12) {
    n.x += d * std::cos(s.heading);
    n.y += d * std::sin(s.heading);
  } else {
    const double h1 = s.heading + omega * dt;
    const double r = s.speed / omega;
    n.x += r * (std::sin(h1) - std::sin(s.heading));
    n.y -= r * (std::cos(h1) - std::cos(s.heading));
    n.heading = h1;
  }
  n.heading = wrap_pi(n.heading);
  return n;
}

namespace {

bool fit_curve(const std::vector<Vec2>& pts, LaneCurve& out) {
  if (pts.size() < 2) return false;
  double y0 = pts.front().y, y1 = y0;
  for (const auto& p : pts) {
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const int n = (y1 - y0 >= 6.0 && pts.size() >= 3) ? 3 : 2;
  const double mid = 0.5 * (y0 + y1);
  double A[3][4] = {};
  for (const auto& p : pts) {
    const double t = p.y - mid;
    const double b[3] = {1, t, t * t};
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) A[r][k] += b[r] * b[k];
      A[r][3] += b[r] * p.x;
    }
  }
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-12) return false;
    std::swap(A[c], A[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
    }
  }
  double l[3] = {0, 0, 0};
  for (int r = 0; r < n; ++r) l[r] = A[r][3] / A[r][r];
  out.c0 = l[0] - l[1] * mid + l[2] * mid * mid;
  out.c1 = l[1] - 2 * l[2] * mid;
  out.c2 = l[2];
  out.y_min = y0;
  out.y_max = y1;
  return true;
}

// Algebraic (Kasa) circle fit: x^2 + y^2 + D x + E y + F = 0.
void fit_circle(const std::vector<Vec2>& pts, LaneCurve& out) {
  out.radius = 0;
  if (pts.size() < 3 || out.y_max - out.y_min < 3.0) return;
  Vec2 m{0, 0};
  for (const auto& p : pts) m = m + p;
  m = m * (1.0 / static_cast<double>(pts.size()));
  double A[3][4] = {};
  for (const auto& q : pts) {
    const Vec2 p = q - m;
    const double b[3] = {p.x, p.y, 1.0};
    const double rhs = -(p.x * p.x + p.y * p.y);
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) A[r][k] += b[r] * b[k];
      A[r][3] += b[r] * rhs;
    }
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (std::abs(A[piv][c]) < 1e-12) return;
    std::swap(A[c], A[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
    }
  }
  const double D = A[0][3] / A[0][0];
  const double E = A[1][3] / A[1][1];
  const double F = A[2][3] / A[2][2];
  const Vec2 c{-D / 2, -E / 2};
  const double r2 = c.dot(c) - F;
  if (!(r2 > 0)) return;
  const double r = std::sqrt(r2);
  if (r > 400.0) return;  // effectively straight
  out.centre = c + m;
  out.radius = r;
}

}  // namespace

std::vector<LaneCurve> lane_curves(const LaneDetectionResult& r, const CameraModel& cam) {
  const Mat3 to_ground = cam.image_to_ground();
  std::vector<LaneCurve> out;
  for (const auto& lane : r.lanes) {
    std::vector<Vec2> pts;
    for (const Vec2& px : lane.points) {
      const auto g = to_ground.apply(px);
      if (g && g->y > 0) pts.push_back(*g);
    }
    LaneCurve c;
    if (!fit_curve(pts, c)) continue;
    fit_circle(pts, c);
    out.push_back(c);
  }
  return out;
}

ArcState arc_state(const LaneCurve& c, double y) {
  if (c.radius > 0) {
    const double dy = y - c.centre.y;
    const double mid = 0.5 * (c.y_min + c.y_max);
    const double side = c.x_at(mid) >= c.centre.x ? 1.0 : -1.0;
    if (c.radius > std::abs(dy)) {
      const double dx = side * std::sqrt(c.radius * c.radius - dy * dy);
      // tangent (dx/dy) of the branch, curvature toward the centre
      return {c.centre.x + dx, std::atan(-dy / dx), -side / c.radius};
    }
  }
  const double slope = c.c1 + 2 * c.c2 * y;
  return {c.x_at(y), std::atan(slope), 2 * c.c2 / std::pow(1 + slope * slope, 1.5)};
}

ControlDecision lane_center_control(const LaneDetectionResult& det, const VehicleState& s, const CameraModel& cam,
                                    ControlMemory& mem, const ControllerParams& p) {
  ControlDecision d;
  const auto curves = lane_curves(det, cam);
  double best_l = -std::numeric_limits<double>::infinity();
  double best_r = std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    if (c.y_min > p.max_near_m) continue;
    const double x = c.x_at(std::clamp(p.select_y_m, c.y_min, c.y_max));
    if (x < 0 && x > best_l) {
      best_l = x;
      d.left = c;
    } else if (x >= 0 && x < best_r) {
      best_r = x;
      d.right = c;
    }
  }
  if (!d.left && !d.right) {
    d.held = true;
    d.steer = mem.last_steer;
    return d;
  }
  // Corridor centre at forward range y (camera frame); a lone boundary is
  // shifted by half a lane along its normal.
  auto centre_at = [&](double y) -> Vec2 {
    if (d.left && d.right) return {0.5 * (d.left->x_at(y) + d.right->x_at(y)), y};
    const LaneCurve& c = d.left ? *d.left : *d.right;
    const double h = d.left ? p.half_lane_m : -p.half_lane_m;
    const double th = std::atan(c.c1 + 2 * c.c2 * y);
    return Vec2{c.x_at(y), y} + Vec2{std::cos(th), -std::sin(th)} * h;
  };

  // Remember the nearest band of this frame's centre in world coordinates.
  const Pose cam_pose{s.pos() + Vec2{std::cos(s.heading), std::sin(s.heading)} * p.camera_ahead_m, s.heading};
  const double y0 = -p.camera_ahead_m;
  const double band_lo = std::max(d.left ? d.left->y_min : 0.0, d.right ? d.right->y_min : 0.0);
  const double band_hi = std::min(d.left ? d.left->y_max : 1e9, d.right ? d.right->y_max : 1e9);
  auto& path = mem.centre_path;
  std::erase_if(path, [&](Vec2 w) {
    const double y = cam_pose.to_local(w).y;
    return y >= band_lo || y < y0 - 2 * p.local_window_m;
  });
  for (double y = band_lo; y <= std::min(band_hi, band_lo + p.memory_band_m) + 1e-9; y += 0.25) {
    path.push_back(cam_pose.to_world(centre_at(y)));
  }

  // Arc state abreast of the rear axle: from the remembered path when it
  // reaches back that far, else extrapolated from this frame.
  std::vector<Vec2> local;
  for (const Vec2& w : path) {
    const Vec2 q = cam_pose.to_local(w);
    if (std::abs(q.y - y0) <= p.local_window_m) local.push_back(q);
  }
  bool covered = false;
  for (const Vec2& q : local) covered = covered || q.y <= y0 + 0.5;
  ArcState centre;
  LaneCurve fit;
  if (covered && local.size() >= 8 && fit_curve(local, fit) && fit.y_max - fit.y_min >= 3.0) {
    centre = arc_state(fit, y0);
  } else {
    std::vector<Vec2> pts;
    for (double y = band_lo; y <= std::max(band_hi, band_lo + 0.5); y += 0.25) pts.push_back(centre_at(y));
    fit_curve(pts, fit);
    fit_circle(pts, fit);
    centre = arc_state(fit, y0);
  }

  const double ld = std::max(p.lookahead_min_m, p.lookahead_time_s * s.speed);
  const double theta0 = centre.theta;
  const double kappa = centre.kappa;
  const double theta1 = theta0 + kappa * ld;
  Vec2 t{centre.x, y0};
  if (std::abs(kappa) < 1e-9) {
    t = t + Vec2{std::sin(theta0), std::cos(theta0)} * ld;
  } else {
    t = t + Vec2{(std::cos(theta0) - std::cos(theta1)) / kappa, (std::sin(theta1) - std::sin(theta0)) / kappa};
  }
  d.target = {t.x, t.y + p.camera_ahead_m};
  const double alpha = std::atan2(d.target.x, d.target.y);
  const double dist = d.target.norm();
  d.steer = std::clamp(std::atan(2 * kWheelbase * std::sin(alpha) / std::max(dist, 1e-6)), -kMaxSteer, kMaxSteer);
  mem.last_steer = d.steer;
  return d;
}

std::string to_string(HazardKind k) {
  switch (k) {
    case HazardKind::OffRoad: return "offroad";
    case HazardKind::Oncoming: return "oncoming";
    case HazardKind::BusStation: return "bus_station";
  }
  return "?";
}

namespace {

HazardKind parse_hazard(std::string_view s) {
  if (s == "offroad") return HazardKind::OffRoad;
  if (s == "oncoming") return HazardKind::Oncoming;
  if (s == "bus_station") return HazardKind::BusStation;
  throw std::invalid_argument("unknown hazard kind '" + std::string(s) + "'");
}

RoadSpec scenario_road(RoadPath path) {
  RoadSpec r;
  r.path = std::move(path);
  r.markings = {Marking{0.0, 0.16, 0, 0, kYellowMarking}};
  r.surface_left_m = 3.6;
  r.surface_right_m = 3.6;
  return r;
}

}  // namespace

Polygon ScenarioSpec::hazard_polygon() const {
  const FrenetBox& b = hazard_box;
  Polygon poly;
  const int n = std::max(2, static_cast<int>(std::ceil((b.s1 - b.s0) / 1.0)) + 1);
  for (int i = 0; i < n; ++i) poly.push_back(road.path.point_at(b.s0 + (b.s1 - b.s0) * i / (n - 1), b.n0));
  for (int i = n - 1; i >= 0; --i) poly.push_back(road.path.point_at(b.s0 + (b.s1 - b.s0) * i / (n - 1), b.n1));
  return poly;
}

void ScenarioSpec::validate() const {
  if (id < 1 || id > 3) throw std::invalid_argument("scenario id must be 1, 2 or 3");
  if (road.path.pieces().empty()) throw std::invalid_argument("scenario road has no segments");
  if (!(end_s > start_s)) throw std::invalid_argument("scenario end must lie beyond its start");
  if (ns.empty()) throw std::invalid_argument("scenario needs at least one NS placement");
  for (const auto& p : ns) {
    if (!(p.width_m > 0)) throw std::invalid_argument("NS width must be > 0");
  }
  if (!(hazard_box.s1 > hazard_box.s0 && hazard_box.n1 > hazard_box.n0)) throw std::invalid_argument("bad hazard box");
  // hazard must stay clear of the legal lane corridor
  if (hazard_box.n0 < lane_center_n + 1.8 && hazard_box.n1 > lane_center_n - 1.8) {
    throw std::invalid_argument("hazard region overlaps the travel lane");
  }
  if (npc && !(collision_radius_m > 0)) throw std::invalid_argument("collision radius must be > 0");
}

ScenarioSpec builtin_scenario(int id) {
  ScenarioSpec s;
  s.id = id;
  s.start_s = 5;
  s.lane_center_n = 1.8;
  switch (id) {
    case 1: {
      s.name = "left_turn_offroad";
      RoadPath p({0, 0}, kPi / 2);
      p.line(45).arc(25, 90, true).line(60);
      s.road = scenario_road(p);
      const double turn = 45;
      s.ns = {{turn - 5, 0.6, 0.3, 0}, {turn - 5, 3.0, 0.3, 0}};
      s.hazard = HazardKind::OffRoad;
      s.hazard_box = {turn - 10, turn + 25 * kPi / 2 + 40, 4.1, 30};
      s.end_s = turn + 25 * kPi / 2 + 30;
      break;
    }
    case 2: {
      s.name = "head_on";
      RoadPath p({0, 0}, kPi / 2);
      p.line(260);
      s.road = scenario_road(p);
      s.ns = {{40, 2.8, 0.3, -1.8}, {40, -0.8, 0.3, -1.8}};
      s.hazard = HazardKind::Oncoming;
      s.hazard_box = {40, 40 + 70 + 30, -3.6, -0.2};
      s.npc = true;
      s.npc_n = -1.4;
      s.npc_meet_s = 98;
      s.end_s = 40 + 70 + 30;
      break;
    }
    case 3: {
      s.name = "bus_station";
      RoadPath p({0, 0}, kPi / 2);
      p.line(260);
      s.road = scenario_road(p);
      s.ns = {{40, 1.0, 0.3, 4}, {40, 2.6, 0.3, 4}};
      s.hazard = HazardKind::BusStation;
      s.hazard_box = {40, 140, 4.8, 8.8};
      s.end_s = 40 + 70 + 30;
      break;
    }
    default: throw std::invalid_argument("scenario id must be 1, 2 or 3");
  }
  s.validate();
  return s;
}

void write_scenario(std::ostream& out, const ScenarioSpec& s) {
  using csv::fmt;
  out << "# shadowlane scenario\n";
  out << "id = " << s.id << '\n';
  out << "name = " << s.name << '\n';
  for (const auto& pc : s.road.path.pieces()) {
    if (pc.curvature == 0) {
      out << "segment = line " << fmt(pc.length) << '\n';
    } else {
      const double r = 1.0 / std::abs(pc.curvature);
      out << "segment = arc " << fmt(r) << ' ' << fmt(rad2deg(pc.length / r)) << ' '
          << (pc.curvature > 0 ? "left" : "right") << '\n';
    }
  }
  out << "surface_half_width = " << fmt(s.road.surface_right_m) << '\n';
  out << "seed = " << s.road.seed << '\n';
  out << "start_s = " << fmt(s.start_s) << '\n';
  out << "lane_center_n = " << fmt(s.lane_center_n) << '\n';
  out << "end_s = " << fmt(s.end_s) << '\n';
  for (const auto& n : s.ns) {
    out << "ns = " << fmt(n.s0) << ' ' << fmt(n.n_center) << ' ' << fmt(n.width_m) << ' ' << fmt(n.angle_deg) << '\n';
  }
  out << "hazard = " << to_string(s.hazard) << '\n';
  out << "hazard_box = " << fmt(s.hazard_box.s0) << ' ' << fmt(s.hazard_box.s1) << ' ' << fmt(s.hazard_box.n0) << ' '
      << fmt(s.hazard_box.n1) << '\n';
  out << "npc = " << (s.npc ? 1 : 0) << '\n';
  if (s.npc) {
    out << "npc_n = " << fmt(s.npc_n) << '\n';
    out << "npc_meet_s = " << fmt(s.npc_meet_s) << '\n';
    out << "collision_radius = " << fmt(s.collision_radius_m) << '\n';
  }
}

ScenarioSpec read_scenario(std::istream& in) {
  ScenarioSpec s;
  s.ns.clear();
  RoadPath path({0, 0}, kPi / 2);
  double half_width = 3.6;
  std::uint64_t seed = 42;
  std::string line;
  std::size_t no = 0;
  auto nums = [&](std::string_view v, std::size_t count) {
    std::vector<double> out;
    std::istringstream ss{std::string(v)};
    std::string tok;
    while (ss >> tok) out.push_back(csv::parse_double(tok, no));
    if (out.size() != count) throw csv::ParseError(no, "expected " + std::to_string(count) + " numbers");
    return out;
  };
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    std::string_view t = csv::trim(std::string_view(line).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw csv::ParseError(no, "expected key = value");
    const std::string key(csv::trim(t.substr(0, eq)));
    const std::string_view val = csv::trim(t.substr(eq + 1));
    try {
      if (key == "id") {
        s.id = static_cast<int>(csv::parse_long(val, no));
      } else if (key == "name") {
        s.name = std::string(val);
      } else if (key == "segment") {
        std::istringstream ss{std::string(val)};
        std::string kind;
        ss >> kind;
        if (kind == "line") {
          double len = 0;
          if (!(ss >> len)) throw csv::ParseError(no, "line segment needs a length");
          path.line(len);
        } else if (kind == "arc") {
          double r = 0, a = 0;
          std::string dir;
          if (!(ss >> r >> a >> dir) || (dir != "left" && dir != "right")) {
            throw csv::ParseError(no, "arc segment needs: radius angle_deg left|right");
          }
          path.arc(r, a, dir == "left");
        } else {
          throw csv::ParseError(no, "unknown segment kind '" + kind + "'");
        }
      } else if (key == "surface_half_width") {
        half_width = csv::parse_double(val, no);
      } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(csv::parse_long(val, no));
      } else if (key == "start_s") {
        s.start_s = csv::parse_double(val, no);
      } else if (key == "lane_center_n") {
        s.lane_center_n = csv::parse_double(val, no);
      } else if (key == "end_s") {
        s.end_s = csv::parse_double(val, no);
      } else if (key == "ns") {
        const auto v = nums(val, 4);
        s.ns.push_back({v[0], v[1], v[2], v[3]});
      } else if (key == "hazard") {
        s.hazard = parse_hazard(val);
      } else if (key == "hazard_box") {
        const auto v = nums(val, 4);
        s.hazard_box = {v[0], v[1], v[2], v[3]};
      } else if (key == "npc") {
        s.npc = csv::parse_long(val, no) != 0;
      } else if (key == "npc_n") {
        s.npc_n = csv::parse_double(val, no);
      } else if (key == "npc_meet_s") {
        s.npc_meet_s = csv::parse_double(val, no);
      } else if (key == "collision_radius") {
        s.collision_radius_m = csv::parse_double(val, no);
      } else {
        throw csv::ParseError(no, "unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw csv::ParseError(no, e.what());
    }
  }
  s.road = scenario_road(path);
  s.road.surface_left_m = half_width;
  s.road.surface_right_m = half_width;
  s.road.seed = seed;
  s.validate();
  return s;
}

double reaction_time(double distance_m, double speed_mps) {
  if (!(speed_mps > 0)) throw std::invalid_argument("speed must be > 0");
  if (!(distance_m >= 0)) throw std::invalid_argument("distance must be >= 0");
  return distance_m / speed_mps;
}

bool takeover_preventable(double reaction_s) { return reaction_s > kReactionBudgetS; }

Calibration sim_calibration(const SimOptions& o) { return {o.camera, o.grid}; }

namespace {

Pose camera_pose(const VehicleState& s, const SimOptions& o) {
  Pose p{s.pos(), s.heading};
  p.pos = p.pos + p.forward() * o.controller.camera_ahead_m;
  return p;
}

std::optional<ShadowLayer> scenario_layer(const ScenarioSpec& spec, double ns_length, const SimOptions& o) {
  if (!(ns_length > 0)) return std::nullopt;
  ShadowLayer layer;
  for (const auto& p : spec.ns) {
    layer.holes.push_back(
        ns_rectangle(spec.road.path, p.s0, p.n_center - 0.5 * p.width_m, p.width_m, ns_length, p.angle_deg));
  }
  layer.footprint =
      canopy_footprint(spec.road.path, layer.holes, spec.road.surface_left_m, spec.road.surface_right_m, 1.0);
  layer.shade_factor = o.shade_factor;
  layer.brightness = o.brightness;
  return layer;
}

Image frame_for(const ScenarioSpec& spec, const VehicleState& s, const std::optional<ShadowLayer>& layer,
                const SimOptions& o) {
  const Pose pose = camera_pose(s, o);
  Image img = render_road(spec.road, o.camera, pose, 1);
  if (!layer) return img;
  RoadScene scene;
  scene.image = std::move(img);
  scene.camera = o.camera;
  scene.grid = o.grid;
  scene.camera_pose = pose;
  scene.road = spec.road;
  return compose(scene, *layer, 1).image;
}

double distance_to_polyline(const std::vector<TrajectorySample>& tr, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const Vec2 a{tr[i].x, tr[i].y};
    const Vec2 b{tr[i + 1].x, tr[i + 1].y};
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + ab * t)).norm());
  }
  if (tr.size() == 1) best = (p - Vec2{tr[0].x, tr[0].y}).norm();
  return best;
}

}  // namespace

Image render_frame(const ScenarioSpec& spec, const VehicleState& s, double ns_length_m, const SimOptions& o) {
  return frame_for(spec, s, scenario_layer(spec, ns_length_m, o), o);
}

SimRun run_scenario(const ScenarioSpec& spec, double speed_mph, double ns_length_m, const LaneDetector& det,
                    const SimOptions& o, const std::vector<TrajectorySample>* benign) {
  spec.validate();
  if (!(speed_mph > 0)) throw std::invalid_argument("speed must be > 0");
  const double v = mph_to_mps(speed_mph);
  const auto layer = scenario_layer(spec, ns_length_m, o);
  const Polygon hazard = spec.hazard_polygon();

  SimRun run;
  const Pose start = spec.road.path.pose_at(spec.start_s);
  VehicleState st;
  const Vec2 p0 = spec.road.path.point_at(spec.start_s, spec.lane_center_n);
  st.x = p0.x;
  st.y = p0.y;
  st.heading = wrap_pi(start.heading);
  st.speed = v;
  ControlMemory mem;

  const double t_meet = (spec.npc_meet_s - spec.start_s) / v;
  const auto npc_pos = [&](double t) {
    const double s_npc = spec.npc_meet_s + (t_meet - t) * v;
    return spec.road.path.point_at(s_npc, spec.npc_n);
  };

  const int max_steps = static_cast<int>(std::lround(o.timeout_s / o.dt));
  std::optional<std::size_t> hazard_idx;
  std::optional<std::size_t> dev_idx;
  for (int k = 0; k <= max_steps; ++k) {
    const double t = k * o.dt;
    const auto f = spec.road.path.to_frenet(st.pos());
    const double lat = f.n - spec.lane_center_n;
    run.trajectory.push_back({t, st.x, st.y, st.heading, st.speed, lat});
    run.verdict.max_lat_dev = std::max(run.verdict.max_lat_dev, std::abs(lat));
    if (benign && !dev_idx && distance_to_polyline(*benign, st.pos()) > o.deviation_m) {
      dev_idx = run.trajectory.size() - 1;
    }
    bool hit = false;
    if (spec.hazard != HazardKind::Oncoming) {
      hit = point_in_polygon(hazard, st.pos());
    } else if (spec.npc) {
      // swept test: closing speeds reach ~50 m/s, so check the whole step
      const Vec2 r1 = st.pos() - npc_pos(t);
      const Vec2 r0 = k == 0 ? r1 : Vec2{run.trajectory[k - 1].x, run.trajectory[k - 1].y} - npc_pos(t - o.dt);
      const Vec2 dr = r1 - r0;
      const double len2 = dr.dot(dr);
      const double u = len2 > 0 ? std::clamp(-r0.dot(dr) / len2, 0.0, 1.0) : 0.0;
      hit = (r0 + dr * u).norm() < 2 * spec.collision_radius_m;
    }
    if (hit) {
      hazard_idx = run.trajectory.size() - 1;
      break;
    }
    if (f.s >= spec.end_s || k == max_steps) break;
    LaneDetectionResult r;
    try {
      r = det.detect(frame_for(spec, st, layer, o));
    } catch (const std::exception& e) {
      run.verdict.inconclusive = true;
      run.verdict.error = e.what();
      return run;
    }
    const auto dec = lane_center_control(r, st, o.camera, mem, o.controller);
    st = step(st, dec.steer, o.dt);
  }

  SafetyVerdict& vd = run.verdict;
  if (hazard_idx) {
    vd.attack_success = true;
    vd.hazard_t = run.trajectory[*hazard_idx].t;
    const std::size_t from = dev_idx && *dev_idx <= *hazard_idx ? *dev_idx : *hazard_idx;
    if (dev_idx) vd.deviation_t = run.trajectory[from].t;
    double d = 0;
    for (std::size_t i = from; i < *hazard_idx; ++i) {
      d += (Vec2{run.trajectory[i + 1].x, run.trajectory[i + 1].y} - Vec2{run.trajectory[i].x, run.trajectory[i].y})
               .norm();
    }
    vd.reaction_time_s = reaction_time(d, v);
    vd.takeover_preventable = takeover_preventable(*vd.reaction_time_s);
  } else if (dev_idx) {
    vd.deviation_t = run.trajectory[*dev_idx].t;
  }
  vd.combined = vd.attack_success && !vd.takeover_preventable;
  return run;
}

std::vector<double> GridResult::success_by_length() const {
  std::vector<double> out;
  for (double len : lengths) {
    std::size_t n = 0, ok = 0;
    for (const auto& c : cells) {
      if (c.length_m != len || c.verdict.inconclusive) continue;
      ++n;
      ok += c.verdict.attack_success ? 1 : 0;
    }
    out.push_back(n ? static_cast<double>(ok) / n : 0.0);
  }
  return out;
}

GridResult run_grid(const std::vector<ScenarioSpec>& scenarios, const LaneDetector& det,
                    const std::vector<double>& speeds, const std::vector<double>& lengths, int workers,
                    const SimOptions& o) {
  GridResult g;
  g.speeds = speeds;
  g.lengths = lengths;
  const std::size_t ns = scenarios.size(), nv = speeds.size(), nl = lengths.size();
  std::vector<SimRun> benign(ns * nv);
  parallel_for(benign.size(), workers, [&](std::size_t i) {
    benign[i] = run_scenario(scenarios[i / nv], speeds[i % nv], 0.0, det, o);
  });
  for (std::size_t i = 0; i < benign.size(); ++i) {
    g.benign.push_back({scenarios[i / nv].id, speeds[i % nv], 0.0, benign[i].verdict});
  }
  g.cells.resize(ns * nv * nl);
  parallel_for(g.cells.size(), workers, [&](std::size_t k) {
    const std::size_t si = k / (nv * nl);
    const std::size_t vi = (k / nl) % nv;
    const std::size_t li = k % nl;
    const SimRun r = run_scenario(scenarios[si], speeds[vi], lengths[li], det, o, &benign[si * nv + vi].trajectory);
    g.cells[k] = {scenarios[si].id, speeds[vi], lengths[li], r.verdict};
  });
  return g;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& tr) {
  using csv::fmt_fixed;
  out << "t,x,y,heading,speed,lat_dev\n";
  for (const auto& s : tr) {
    out << fmt_fixed(s.t, 2) << ',' << fmt_fixed(s.x, 4) << ',' << fmt_fixed(s.y, 4) << ',' << fmt_fixed(s.heading, 6)
        << ',' << fmt_fixed(s.speed, 4) << ',' << fmt_fixed(s.lat_dev, 4) << '\n';
  }
}

void write_grid_csv(std::ostream& out, const GridResult& g) {
  out << kGridCsvHeader << '\n';
  auto row = [&](const GridCell& c) {
    const auto& v = c.verdict;
    out << c.scenario << ',' << csv::fmt(c.speed_mph) << ',' << csv::fmt(c.length_m) << ','
        << (v.attack_success ? 1 : 0) << ',' << (v.reaction_time_s ? csv::fmt_fixed(*v.reaction_time_s, 3) : "")
        << ',' << (v.takeover_preventable ? 1 : 0) << ',' << (v.combined ? 1 : 0) << ','
        << (v.inconclusive ? 1 : 0) << '\n';
  };
  for (const auto& c : g.benign) row(c);
  for (const auto& c : g.cells) row(c);
}

GridResult read_grid_csv(std::istream& in) {
  GridResult g;
  std::string line;
  std::size_t line_no = 0;
  auto flag = [&](std::string_view f) {
    const long v = csv::parse_long(f, line_no);
    if (v != 0 && v != 1) throw csv::ParseError(line_no, "flag must be 0 or 1");
    return v == 1;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = csv::trim(line);
    if (t.empty()) continue;
    if (line_no == 1 && t == kGridCsvHeader) continue;
    const auto f = csv::split(t);
    if (f.size() != 8) throw csv::ParseError(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    GridCell c;
    c.scenario = static_cast<int>(csv::parse_long(f[0], line_no));
    c.speed_mph = csv::parse_double(f[1], line_no);
    c.length_m = csv::parse_double(f[2], line_no);
    c.verdict.attack_success = flag(f[3]);
    if (!csv::trim(f[4]).empty()) c.verdict.reaction_time_s = csv::parse_double(f[4], line_no);
    c.verdict.takeover_preventable = flag(f[5]);
    c.verdict.combined = flag(f[6]);
    c.verdict.inconclusive = flag(f[7]);
    if (c.length_m <= 0) {
      g.benign.push_back(c);
      continue;
    }
    if (std::find(g.lengths.begin(), g.lengths.end(), c.length_m) == g.lengths.end()) g.lengths.push_back(c.length_m);
    if (std::find(g.speeds.begin(), g.speeds.end(), c.speed_mph) == g.speeds.end()) g.speeds.push_back(c.speed_mph);
    g.cells.push_back(c);
  }
  std::sort(g.lengths.begin(), g.lengths.end());
  std::sort(g.speeds.begin(), g.speeds.end());
  return g;
}

}  // namespace shadowlane::sim
