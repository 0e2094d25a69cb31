// Pinhole road camera, bird's-eye-view grid and rigid poses on the road plane.
#pragma once

#include <cmath>
#include <stdexcept>

#include "shadowlane/geometry.hpp"

namespace shadowlane {

/// Camera-local road plane: X to the right, Y forward, origin below the lens.
struct CameraModel {
  int width = 640;
  int height = 360;
  double focal_px = 300.0;
  double height_m = 1.5;
  double pitch_deg = 9.0;  // downward tilt of the optical axis

  void validate() const {
    if (width < 64 || height < 64) throw std::invalid_argument("camera image must be at least 64x64");
    if (!(focal_px > 0)) throw std::invalid_argument("focal length must be > 0");
    if (!(height_m > 0)) throw std::invalid_argument("camera height must be > 0");
    if (!(pitch_deg > 0.0 && pitch_deg < 90.0)) {
      throw std::invalid_argument("degenerate camera: pitch must be in (0, 90) degrees");
    }
  }

  [[nodiscard]] double cx() const { return 0.5 * (width - 1); }
  [[nodiscard]] double cy() const { return 0.5 * (height - 1); }

  /// Maps homogeneous (X, Y, 1) on the road plane to image pixels.
  [[nodiscard]] Mat3 ground_to_image() const {
    const SinCos p = sincosd(pitch_deg);
    const Mat3 K({focal_px, 0, cx(), 0, focal_px, cy(), 0, 0, 1});
    const Mat3 R({1, 0, 0, 0, -p.s, height_m * p.c, 0, p.c, height_m * p.s});
    return K * R;
  }
  [[nodiscard]] Mat3 image_to_ground() const { return ground_to_image().inverse(); }

  /// Image row of the vanishing line (rows below it see the ground).
  [[nodiscard]] double horizon_row() const { return cy() - focal_px * std::tan(deg2rad(pitch_deg)); }

  /// Forward distance seen by image row v; v must be below the horizon.
  [[nodiscard]] double ground_y_for_row(double v) const {
    const double a = std::atan((v - cy()) / focal_px) + deg2rad(pitch_deg);
    return height_m / std::tan(a);
  }
  [[nodiscard]] double row_for_ground_y(double y) const {
    return cy() + focal_px * std::tan(std::atan2(height_m, y) - deg2rad(pitch_deg));
  }
};

/// Metric window of the road plane resampled into the BEV raster.
/// Row 0 is the far edge; pixel centres sit at integer coordinates.
struct BevGrid {
  double x_min = -4.5;
  double x_max = 4.5;
  double y_min = 4.0;
  double y_max = 24.0;
  double m_per_px = 0.05;

  [[nodiscard]] int width() const { return static_cast<int>(std::lround((x_max - x_min) / m_per_px)); }
  [[nodiscard]] int height() const { return static_cast<int>(std::lround((y_max - y_min) / m_per_px)); }

  [[nodiscard]] Mat3 metric_to_bev() const {
    return Mat3({1.0 / m_per_px, 0, -x_min / m_per_px - 0.5, 0, -1.0 / m_per_px,
                 y_max / m_per_px - 0.5, 0, 0, 1});
  }
  [[nodiscard]] Vec2 to_metric(double col, double row) const {
    return {x_min + (col + 0.5) * m_per_px, y_max - (row + 0.5) * m_per_px};
  }
  [[nodiscard]] Vec2 to_pixel(Vec2 m) const {
    return {(m.x - x_min) / m_per_px - 0.5, (y_max - m.y) / m_per_px - 0.5};
  }
  void validate() const {
    if (!(m_per_px > 0)) throw std::invalid_argument("BEV scale must be > 0");
    if (!(x_max > x_min && y_max > y_min && y_min > 0)) throw std::invalid_argument("bad BEV window");
  }
};

/// Camera pixels to BEV pixels through the road plane.
inline Mat3 camera_to_bev(const CameraModel& cam, const BevGrid& grid) {
  return grid.metric_to_bev() * cam.image_to_ground();
}

/// Position and heading on the world road plane. Heading is the math angle of
/// the forward direction (pi/2 points along +y).
struct Pose {
  Vec2 pos;
  double heading = kPi / 2;

  [[nodiscard]] Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
  [[nodiscard]] Vec2 right() const { return {std::sin(heading), -std::cos(heading)}; }
  [[nodiscard]] Vec2 to_world(Vec2 local) const { return pos + right() * local.x + forward() * local.y; }
  [[nodiscard]] Vec2 to_local(Vec2 world) const {
    const Vec2 d = world - pos;
    return {d.dot(right()), d.dot(forward())};
  }
};

}  // namespace shadowlane
