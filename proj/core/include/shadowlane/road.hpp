// Procedural road: centreline path, marking layout and a renderer.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "shadowlane/camera.hpp"
#include "shadowlane/geometry.hpp"
#include "shadowlane/raster.hpp"

namespace shadowlane {

using Rgb = std::array<std::uint8_t, 3>;

/// Centreline built from straight and circular pieces, heading continuous.
class RoadPath {
 public:
  struct Piece {
    Vec2 start;
    double heading = 0;    // radians, math convention
    double length = 0;
    double curvature = 0;  // 1/R, positive turns left
  };

  RoadPath() = default;
  RoadPath(Vec2 start, double heading) : start_(start), heading_(heading) {}

  RoadPath& line(double length);
  /// Circular arc of the given radius sweeping `angle_deg`; left turns when left is true.
  RoadPath& arc(double radius, double angle_deg, bool left);
  /// Appends a piece of constant curvature (0 for a straight).
  RoadPath& append(double length, double curvature);

  [[nodiscard]] Vec2 start() const { return start_; }
  [[nodiscard]] double start_heading() const { return heading_; }

  [[nodiscard]] const std::vector<Piece>& pieces() const { return pieces_; }
  [[nodiscard]] double length() const;

  /// Pose of the centreline at station s (clamped extrapolation past the ends).
  [[nodiscard]] Pose pose_at(double s) const;
  /// World point at station s and lateral offset n (positive to the right).
  [[nodiscard]] Vec2 point_at(double s, double n) const;

  struct Frenet {
    double s;
    double n;
  };
  /// Station and right-positive offset of the nearest centreline piece.
  [[nodiscard]] Frenet to_frenet(Vec2 p) const;

 private:
  Vec2 start_{0, 0};
  double heading_ = kPi / 2;
  std::vector<Piece> pieces_;
  std::vector<double> offsets_;  // cumulative station of each piece
};

struct Marking {
  double offset_m = 0;   // lateral centre, positive right of the centreline
  double width_m = 0.16;
  double dash_on_m = 0;  // 0 means solid
  double dash_off_m = 0;
  Rgb color{230, 230, 230};

  [[nodiscard]] bool painted_at(double s, double n) const;
};

inline constexpr Rgb kYellowMarking{230, 190, 40};
inline constexpr Rgb kWhiteMarking{232, 232, 232};

struct RoadSpec {
  RoadPath path;
  std::vector<Marking> markings;
  double surface_left_m = 4.3;   // pavement extent left of the centreline
  double surface_right_m = 4.3;  // pavement extent right of the centreline
  double pavement_luma = 110;
  Rgb grass{80, 110, 60};
  double noise_amplitude = 4.0;
  std::uint64_t seed = 42;

  /// Straight road with a yellow centreline and white edge lines at +-edge_offset.
  static RoadSpec straight_two_lane(double edge_offset = 4.0, double length = 400.0);
};

/// Deterministic colour of the road plane at a world point.
Rgb road_color(const RoadSpec& road, Vec2 world);

/// Renders the camera view; `samples` is the per-axis supersampling factor.
Image render_road(const RoadSpec& road, const CameraModel& cam, const Pose& pose, int samples = 2);

}  // namespace shadowlane
