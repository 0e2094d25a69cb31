#include "shadowlane/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "shadowlane/image_io.hpp"

namespace shadowlane {

using nlohmann::json;

void RoadScene::validate() const {
  camera.validate();
  grid.validate();
  if (image.width != camera.width || image.height != camera.height || image.channels != 3) {
    throw std::invalid_argument("scene image does not match its camera (RGB expected)");
  }
  if (std::abs(homography().det()) <= 1e-9) throw std::invalid_argument("scene homography is singular");
  if (reference_marking >= road.markings.size()) throw std::invalid_argument("reference marking out of range");
}

double ShadowLayer::factor_at(Vec2 world) const {
  if (!point_in_polygon(footprint, world)) return 1.0;
  for (const auto& h : holes) {
    if (h.contains(world)) return hole_factor();
  }
  return shade_factor;
}

void ShadowLayer::validate() const {
  if (!(shade_factor > 0.0 && shade_factor <= 1.0)) throw std::invalid_argument("shade_factor must be in (0,1]");
  if (!(brightness >= 1.0)) throw std::invalid_argument("brightness must be >= 1");
  if (footprint.size() < 3) throw std::invalid_argument("footprint needs at least 3 vertices");
  for (const auto& h : holes) {
    const Polygon c = h.corners();
    for (const Vec2 v : c) {
      if (!point_in_polygon(footprint, v)) throw std::invalid_argument("NS hole lies outside the shadow footprint");
    }
  }
}

OrientedRect ns_rectangle(const RoadPath& path, double s0, double n0, double width, double length,
                          double beta_deg) {
  const Pose pose = path.pose_at(s0);
  const SinCos b = sincosd(beta_deg);
  OrientedRect r;
  r.origin = path.point_at(s0, n0);
  r.axis = pose.forward() * b.c + pose.right() * b.s;
  r.side = pose.right() * b.c - pose.forward() * b.s;
  r.length = length;
  r.width = width;
  return r;
}

Polygon footprint_around(const std::vector<OrientedRect>& holes, double margin) {
  Polygon pts;
  for (const auto& h : holes) {
    const Polygon c = h.corners();
    pts.insert(pts.end(), c.begin(), c.end());
  }
  if (pts.empty()) throw std::invalid_argument("footprint needs at least one hole");
  const Box b = bounding_box(pts);
  return {{b.x0 - margin, b.y0 - margin}, {b.x1 + margin, b.y0 - margin},
          {b.x1 + margin, b.y1 + margin}, {b.x0 - margin, b.y1 + margin}};
}

Polygon canopy_footprint(const RoadPath& path, const std::vector<OrientedRect>& holes, double n_left,
                         double n_right, double margin) {
  if (holes.empty()) throw std::invalid_argument("footprint needs at least one hole");
  double s0 = std::numeric_limits<double>::infinity();
  double s1 = -s0;
  double n0 = -n_left;
  double n1 = n_right;
  for (const auto& h : holes) {
    for (const Vec2 v : h.corners()) {
      const auto f = path.to_frenet(v);
      s0 = std::min(s0, f.s);
      s1 = std::max(s1, f.s);
      n0 = std::min(n0, f.n - margin);
      n1 = std::max(n1, f.n + margin);
    }
  }
  s0 -= margin;
  s1 += margin;
  const int steps = std::max(1, static_cast<int>(std::ceil(s1 - s0)));
  Polygon out;
  for (int i = 0; i <= steps; ++i) out.push_back(path.point_at(s0 + (s1 - s0) * i / steps, n0));
  for (int i = steps; i >= 0; --i) out.push_back(path.point_at(s0 + (s1 - s0) * i / steps, n1));
  // drop collinear vertices so straight roads give a plain quad
  Polygon simple;
  const std::size_t m = out.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = out[(i + m - 1) % m];
    const Vec2 b = out[i];
    const Vec2 c = out[(i + 1) % m];
    if (std::abs((b - a).cross(c - b)) > 1e-9 * (b - a).norm() * (c - b).norm()) simple.push_back(b);
  }
  return simple;
}

ShadowLayer make_ns_layer(const RoadScene& scene, const NSConfig& cfg, const ComposeOptions& opts) {
  validate(cfg);
  const Marking& ref = scene.reference();
  const double s_cam = scene.road.path.to_frenet(scene.camera_pose.pos).s;
  const double n0 = ref.offset_m + 0.5 * ref.width_m + cfg.distance_m;
  ShadowLayer layer;
  layer.holes.push_back(
      ns_rectangle(scene.road.path, s_cam + opts.near_m, n0, cfg.width_m, cfg.length_m, cfg.beta_deg));
  layer.footprint = opts.road_wide_canopy
                        ? canopy_footprint(scene.road.path, layer.holes, scene.road.surface_left_m,
                                           scene.road.surface_right_m, opts.footprint_margin_m)
                        : footprint_around(layer.holes, opts.footprint_margin_m);
  layer.shade_factor = opts.shade_factor;
  layer.brightness = cfg.brightness;
  return layer;
}

namespace {

std::uint8_t sample_bilinear(const Image& img, double x, double y, int c) {
  if (!(x >= 0.0 && y >= 0.0 && x <= img.width - 1 && y <= img.height - 1)) return 0;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double tx = x - x0;
  const double ty = y - y0;
  const double top = img.at(x0, y0, c) * (1 - tx) + img.at(x1, y0, c) * tx;
  const double bot = img.at(x0, y1, c) * (1 - tx) + img.at(x1, y1, c) * tx;
  return clamp_u8(top * (1 - ty) + bot * ty);
}

// Clips a polygon to the half-plane y >= y_min.
Polygon clip_near(const Polygon& poly, double y_min) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const bool ia = a.y >= y_min;
    const bool ib = b.y >= y_min;
    if (ia) out.push_back(a);
    if (ia != ib) {
      const double t = (y_min - a.y) / (b.y - a.y);
      out.push_back(a + (b - a) * t);
    }
  }
  return out;
}

}  // namespace

Image bev(const Image& image, const Mat3& homography, int out_w, int out_h) {
  const Mat3 inv = homography.inverse();
  Image out(out_w, out_h, image.channels);
  for (int j = 0; j < out_h; ++j) {
    for (int i = 0; i < out_w; ++i) {
      const auto src = inv.apply({static_cast<double>(i), static_cast<double>(j)});
      if (!src) continue;
      for (int c = 0; c < image.channels; ++c) out.at(i, j, c) = sample_bilinear(image, src->x, src->y, c);
    }
  }
  return out;
}

Image paste_shadow(const Image& bev_image, const ShadowLayer& layer, const BevGrid& grid, const Pose& pose) {
  layer.validate();
  Image out = bev_image;
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) {
      const double f = layer.factor_at(pose.to_world(grid.to_metric(i, j)));
      if (f == 1.0) continue;
      for (int c = 0; c < out.channels; ++c) out.at(i, j, c) = clamp_u8(out.at(i, j, c) * f);
    }
  }
  return out;
}

ComposeResult compose(const RoadScene& scene, const ShadowLayer& layer, int subsamples) {
  layer.validate();
  if (subsamples < 1) throw std::invalid_argument("subsamples must be >= 1");
  ComposeResult res{scene.image, true};
  const CameraModel& cam = scene.camera;

  Polygon local;
  for (const Vec2& p : layer.footprint) local.push_back(scene.camera_pose.to_local(p));
  const Polygon visible = clip_near(local, 0.05);
  if (visible.size() < 3) return res;
  const Mat3 to_img = cam.ground_to_image();
  double u0 = std::numeric_limits<double>::infinity(), v0 = u0, u1 = -u0, v1 = -u0;
  for (const Vec2& p : visible) {
    const auto q = to_img.apply(p);
    if (!q) continue;
    u0 = std::min(u0, q->x);
    u1 = std::max(u1, q->x);
    v0 = std::min(v0, q->y);
    v1 = std::max(v1, q->y);
  }
  const int x_lo = std::max(0, static_cast<int>(std::floor(u0)) - 1);
  const int x_hi = std::min(cam.width - 1, static_cast<int>(std::ceil(u1)) + 1);
  const int y_lo = std::max({0, static_cast<int>(std::floor(v0)) - 1,
                             static_cast<int>(std::floor(cam.horizon_row()))});
  const int y_hi = std::min(cam.height - 1, static_cast<int>(std::ceil(v1)) + 1);
  if (x_lo > x_hi || y_lo > y_hi) return res;

  const Mat3 to_ground = cam.image_to_ground();
  const double horizon = cam.horizon_row();
  const int n = subsamples;
  const int cols = (x_hi - x_lo + 1) * n;
  Image& img = res.image;
  // Per-pixel factor sums, filled one sub-sample row at a time. Each image row
  // maps to a straight ground line, so polygon membership along it reduces to
  // sorted crossing parameters.
  std::vector<double> sums(static_cast<std::size_t>(x_hi - x_lo + 1));
  std::vector<char> touched(sums.size());
  std::vector<std::size_t> hole_idx;
  std::vector<double> fp_cross;
  std::vector<std::vector<double>> hole_cross(layer.holes.size());
  std::vector<Polygon> hole_polys;
  for (const auto& h : layer.holes) hole_polys.push_back(h.corners());
  const double shade = layer.shade_factor;
  const double lit = layer.hole_factor();
  const Vec2 origin = scene.camera_pose.pos;
  const Vec2 right = scene.camera_pose.right();
  const Vec2 fwd = scene.camera_pose.forward();

  auto crossings = [](const Polygon& poly, Vec2 a, Vec2 d, std::vector<double>& out) {
    out.clear();
    const double dd = d.dot(d);
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2 p = poly[i];
      const Vec2 q = poly[(i + 1) % m];
      const double sp = d.cross(p - a);
      const double sq = d.cross(q - a);
      if ((sp > 0) == (sq > 0)) continue;
      const Vec2 x = p + (q - p) * (sp / (sp - sq));
      out.push_back((x - a).dot(d) / dd);
    }
    std::sort(out.begin(), out.end());
  };

  for (int v = y_lo; v <= y_hi; ++v) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(touched.begin(), touched.end(), 0);
    for (int sy = 0; sy < n; ++sy) {
      const double fv = v + (sy + 0.5) / n - 0.5;
      if (!(fv > horizon + 1e-6)) {
        for (auto& x : sums) x += n;
        continue;
      }
      // ground line of this sub-row, world frame, through two off-range columns
      const auto ga = to_ground.apply({x_lo - 1.0, fv});
      const auto gb = to_ground.apply({x_hi + 1.0, fv});
      if (!ga || !gb || ga->y <= 0 || gb->y <= 0) {
        for (auto& x : sums) x += n;
        continue;
      }
      const Vec2 first = origin + right * ga->x + fwd * ga->y;
      const Vec2 d = origin + right * gb->x + fwd * gb->y - first;
      // crossing parameters -> image columns (monotone along the row)
      auto to_columns = [&](std::vector<double>& cr) {
        for (double& t : cr) {
          const Vec2 w = first + d * t;
          const auto q = to_img.apply(scene.camera_pose.to_local(w));
          t = q ? q->x : std::numeric_limits<double>::infinity();
        }
        std::sort(cr.begin(), cr.end());
      };
      crossings(layer.footprint, first, d, fp_cross);
      to_columns(fp_cross);
      for (std::size_t h = 0; h < hole_polys.size(); ++h) {
        crossings(hole_polys[h], first, d, hole_cross[h]);
        to_columns(hole_cross[h]);
      }
      std::size_t fp_i = 0;
      hole_idx.assign(hole_cross.size(), 0);
      for (int k = 0; k < cols; ++k) {
        const double fu = x_lo + (k + 0.5) / n - 0.5;
        while (fp_i < fp_cross.size() && fp_cross[fp_i] <= fu) ++fp_i;
        double f = 1.0;
        if (fp_i & 1) {
          touched[k / n] = 1;
          f = shade;
          for (std::size_t h = 0; h < hole_cross.size(); ++h) {
            auto& hi = hole_idx[h];
            while (hi < hole_cross[h].size() && hole_cross[h][hi] <= fu) ++hi;
            if (hi & 1) f = lit;
          }
        }
        sums[k / n] += f;
      }
    }
    for (int u = x_lo; u <= x_hi; ++u) {
      const std::size_t i = static_cast<std::size_t>(u - x_lo);
      if (!touched[i]) continue;
      res.noop = false;
      const double f = sums[i] / (n * n);
      if (f == 1.0) continue;
      for (int c = 0; c < 3; ++c) img.at(u, v, c) = clamp_u8(img.at(u, v, c) * f);
    }
  }
  return res;
}

ComposeResult compose(const RoadScene& scene, const NSConfig& cfg, const ComposeOptions& opts) {
  return compose(scene, make_ns_layer(scene, cfg, opts), opts.subsamples);
}

RoadScene synth_scene(const SynthOptions& opts) {
  opts.camera.validate();
  opts.grid.validate();
  if (opts.reference_marking >= opts.road.markings.size()) {
    throw std::invalid_argument("reference marking out of range");
  }
  RoadScene s;
  s.id = opts.id;
  s.camera = opts.camera;
  s.grid = opts.grid;
  s.road = opts.road;
  s.reference_marking = opts.reference_marking;
  s.camera_offset_m = opts.camera_offset_m;
  const double n = opts.road.markings[opts.reference_marking].offset_m + opts.camera_offset_m;
  s.camera_pose = {opts.road.path.point_at(opts.camera_s, n), opts.road.path.pose_at(opts.camera_s).heading};
  s.image = render_road(s.road, s.camera, s.camera_pose, opts.samples);
  return s;
}

std::vector<RoadScene> standard_scenes(const CameraModel& cam, std::uint64_t seed) {
  std::vector<RoadScene> out;
  const double offsets[] = {0.0, 0.6, 1.2, 1.8};
  for (int i = 0; i < 4; ++i) {
    SynthOptions o;
    o.road = RoadSpec::straight_two_lane(4.0);
    o.road.seed = seed + static_cast<std::uint64_t>(i);
    o.camera = cam;
    o.camera_offset_m = offsets[i];
    o.id = "scene_" + std::to_string(i);
    out.push_back(synth_scene(o));
  }
  return out;
}

namespace {

json rgb_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }
Rgb rgb_from(const json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

json road_json(const RoadSpec& r) {
  json pieces = json::array();
  for (const auto& p : r.path.pieces()) pieces.push_back({{"length", p.length}, {"curvature", p.curvature}});
  json markings = json::array();
  for (const auto& m : r.markings) {
    markings.push_back({{"offset_m", m.offset_m},
                        {"width_m", m.width_m},
                        {"dash_on_m", m.dash_on_m},
                        {"dash_off_m", m.dash_off_m},
                        {"color", rgb_json(m.color)}});
  }
  return {{"path",
           {{"start", {r.path.start().x, r.path.start().y}},
            {"heading", r.path.start_heading()},
            {"pieces", pieces}}},
          {"markings", markings},
          {"surface_left_m", r.surface_left_m},
          {"surface_right_m", r.surface_right_m},
          {"pavement_luma", r.pavement_luma},
          {"grass", rgb_json(r.grass)},
          {"noise_amplitude", r.noise_amplitude},
          {"seed", r.seed}};
}

RoadSpec road_from(const json& j) {
  RoadSpec r;
  const auto& p = j.at("path");
  r.path = RoadPath({p.at("start").at(0).get<double>(), p.at("start").at(1).get<double>()},
                    p.at("heading").get<double>());
  for (const auto& pc : p.at("pieces")) r.path.append(pc.at("length").get<double>(), pc.at("curvature").get<double>());
  r.markings.clear();
  for (const auto& m : j.at("markings")) {
    r.markings.push_back(Marking{m.at("offset_m").get<double>(), m.at("width_m").get<double>(),
                                 m.value("dash_on_m", 0.0), m.value("dash_off_m", 0.0), rgb_from(m.at("color"))});
  }
  r.surface_left_m = j.at("surface_left_m").get<double>();
  r.surface_right_m = j.at("surface_right_m").get<double>();
  r.pavement_luma = j.value("pavement_luma", r.pavement_luma);
  if (j.contains("grass")) r.grass = rgb_from(j.at("grass"));
  r.noise_amplitude = j.value("noise_amplitude", r.noise_amplitude);
  r.seed = j.value("seed", r.seed);
  return r;
}

}  // namespace

std::filesystem::path save_scene(const RoadScene& scene, const std::filesystem::path& dir) {
  scene.validate();
  std::filesystem::create_directories(dir);
  const std::string image_name = scene.id + ".ppm";
  write_ppm(dir / image_name, scene.image);
  const auto& H = scene.homography().values();
  json j = {{"id", scene.id},
            {"image", image_name},
            {"camera",
             {{"width", scene.camera.width},
              {"height", scene.camera.height},
              {"focal_px", scene.camera.focal_px},
              {"height_m", scene.camera.height_m},
              {"pitch_deg", scene.camera.pitch_deg}}},
            {"bev",
             {{"x_min", scene.grid.x_min},
              {"x_max", scene.grid.x_max},
              {"y_min", scene.grid.y_min},
              {"y_max", scene.grid.y_max},
              {"m_per_px", scene.grid.m_per_px}}},
            {"camera_pose", {{"x", scene.camera_pose.pos.x}, {"y", scene.camera_pose.pos.y}, {"heading", scene.camera_pose.heading}}},
            {"camera_offset_m", scene.camera_offset_m},
            {"reference_marking", scene.reference_marking},
            {"homography", std::vector<double>(H.begin(), H.end())},
            {"meters_per_bev_pixel", scene.meters_per_bev_pixel()},
            {"road", road_json(scene.road)}};
  const auto path = dir / (scene.id + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  return path;
}

RoadScene load_scene(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + json_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(json_path.string() + ": " + e.what());
  }
  RoadScene s;
  try {
    s.id = j.at("id").get<std::string>();
    const auto& c = j.at("camera");
    s.camera.width = c.at("width").get<int>();
    s.camera.height = c.at("height").get<int>();
    s.camera.focal_px = c.at("focal_px").get<double>();
    s.camera.height_m = c.at("height_m").get<double>();
    s.camera.pitch_deg = c.at("pitch_deg").get<double>();
    const auto& b = j.at("bev");
    s.grid = {b.at("x_min").get<double>(), b.at("x_max").get<double>(), b.at("y_min").get<double>(),
              b.at("y_max").get<double>(), b.at("m_per_px").get<double>()};
    const auto& p = j.at("camera_pose");
    s.camera_pose = {{p.at("x").get<double>(), p.at("y").get<double>()}, p.at("heading").get<double>()};
    s.camera_offset_m = j.value("camera_offset_m", 0.0);
    s.reference_marking = j.value("reference_marking", std::size_t{0});
    s.road = road_from(j.at("road"));
  } catch (const json::exception& e) {
    throw std::runtime_error(json_path.string() + ": " + e.what());
  }
  s.image = read_image(json_path.parent_path() / j.at("image").get<std::string>());
  s.validate();
  return s;
}

std::vector<RoadScene> load_scenes(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RoadScene> out;
  for (const auto& f : files) out.push_back(load_scene(f));
  if (out.empty()) throw std::runtime_error("no scene files in " + dir.string());
  return out;
}

}  // namespace shadowlane
