// Road scenes, canopy shadow layers with NS holes, and their composition.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shadowlane/camera.hpp"
#include "shadowlane/geometry.hpp"
#include "shadowlane/pattern.hpp"
#include "shadowlane/raster.hpp"
#include "shadowlane/road.hpp"

namespace shadowlane {

struct RoadScene {
  std::string id;
  Image image;
  CameraModel camera;
  BevGrid grid;
  Pose camera_pose;  // world pose of the camera
  RoadSpec road;
  std::size_t reference_marking = 0;
  double camera_offset_m = 0;  // lateral distance camera -> reference marking

  /// Camera pixels to BEV pixels.
  [[nodiscard]] Mat3 homography() const { return camera_to_bev(camera, grid); }
  [[nodiscard]] double meters_per_bev_pixel() const { return grid.m_per_px; }
  [[nodiscard]] const std::vector<Marking>& lane_layout() const { return road.markings; }
  [[nodiscard]] const Marking& reference() const { return road.markings.at(reference_marking); }
  void validate() const;
};

struct ShadowLayer {
  Polygon footprint;  // world metres
  std::vector<OrientedRect> holes;
  double shade_factor = 0.55;
  double brightness = 1.8;

  [[nodiscard]] double hole_factor() const { return std::min(1.0, shade_factor * brightness); }
  /// Multiplicative luminance factor at a world point (1 outside the footprint).
  [[nodiscard]] double factor_at(Vec2 world) const;
  /// Throws std::invalid_argument if a hole leaves the footprint or the factors are out of range.
  void validate() const;
};

struct ComposeOptions {
  double shade_factor = 0.55;
  double footprint_margin_m = 1.0;
  bool road_wide_canopy = true;  // shade the full pavement width, else a box around the hole
  double near_m = 5.0;  // camera to NS near end, along the road
  int subsamples = 2;   // per-axis factor supersampling
};

/// NS rectangle with its near-left corner at (s0, n0), long axis rotated by
/// beta from the road direction toward the right.
OrientedRect ns_rectangle(const RoadPath& path, double s0, double n0, double width, double length,
                          double beta_deg);

/// Axis-aligned box around the holes grown by `margin`.
Polygon footprint_around(const std::vector<OrientedRect>& holes, double margin);

/// Band covering the holes' along-road extent (plus margin) and at least the
/// lateral range [-n_left, n_right], sampled every metre along the path.
Polygon canopy_footprint(const RoadPath& path, const std::vector<OrientedRect>& holes, double n_left,
                         double n_right, double margin);

/// Layer for one config placed beside the scene's reference marking.
ShadowLayer make_ns_layer(const RoadScene& scene, const NSConfig& cfg, const ComposeOptions& opts = {});

/// Inverse-mapped bilinear resampling into a w x h raster; H maps source to output pixels.
Image bev(const Image& image, const Mat3& homography, int out_w, int out_h);

/// Shades a BEV raster of `grid` seen from `pose`.
Image paste_shadow(const Image& bev_image, const ShadowLayer& layer, const BevGrid& grid, const Pose& pose);

struct ComposeResult {
  Image image;
  bool noop = false;  // footprint not visible from the camera
};

ComposeResult compose(const RoadScene& scene, const ShadowLayer& layer, int subsamples = 2);
ComposeResult compose(const RoadScene& scene, const NSConfig& cfg, const ComposeOptions& opts = {});

struct SynthOptions {
  std::string id = "scene";
  RoadSpec road = RoadSpec::straight_two_lane(3.6);
  CameraModel camera;
  BevGrid grid;
  std::size_t reference_marking = 0;
  double camera_offset_m = 1.8;
  double camera_s = 50.0;
  int samples = 2;
};

RoadScene synth_scene(const SynthOptions& opts);

/// Straight 4 m-lane scenes at camera offsets {0, 0.6, 1.2, 1.8} m.
std::vector<RoadScene> standard_scenes(const CameraModel& cam = {}, std::uint64_t seed = 42);

/// Writes <dir>/<id>.json and <dir>/<id>.ppm.
std::filesystem::path save_scene(const RoadScene& scene, const std::filesystem::path& dir);
RoadScene load_scene(const std::filesystem::path& json_path);
/// All *.json scenes in a directory except manifest.json, sorted by file name.
std::vector<RoadScene> load_scenes(const std::filesystem::path& dir);

}  // namespace shadowlane
