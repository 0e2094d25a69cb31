// Planar geometry: 2-vectors, 3x3 homographies, polygons.
#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace shadowlane {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle in degrees into [0, 360).
inline double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  return r >= 360.0 ? 0.0 : r;
}

struct SinCos {
  double s, c;
};

/// sin and cos of an angle in degrees, reduced to [-45, 45] first so that
/// multiples of 90 are exact; 30 and 45 degree residues are pinned too.
inline SinCos sincosd(double deg) {
  const double q = std::nearbyint(deg / 90.0);
  const double r = deg - 90.0 * q;
  double s, c;
  if (std::abs(r) == 45.0) {
    s = std::copysign(std::sqrt(0.5), r);
    c = std::sqrt(0.5);
  } else if (std::abs(r) == 30.0) {
    s = std::copysign(0.5, r);
    c = std::sqrt(3.0) / 2.0;
  } else {
    s = std::sin(r * kPi / 180.0);
    c = std::cos(r * kPi / 180.0);
  }
  switch (static_cast<int>(std::fmod(std::fmod(q, 4.0) + 4.0, 4.0))) {
    case 0: return {s, c};
    case 1: return {c, -s};
    case 2: return {-s, -c};
    default: return {-c, s};
  }
}

/// Wraps an angle in radians into (-pi, pi].
inline double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  [[nodiscard]] double dot(Vec2 o) const { return x * o.x + y * o.y; }
  [[nodiscard]] double cross(Vec2 o) const { return x * o.y - y * o.x; }
  [[nodiscard]] double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Row-major 3x3 matrix acting on homogeneous 2-D points.
class Mat3 {
 public:
  constexpr Mat3() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  constexpr explicit Mat3(const std::array<double, 9>& m) : m_(m) {}

  static constexpr Mat3 identity() { return Mat3{}; }
  static Mat3 scaling(double sx, double sy) { return Mat3({sx, 0, 0, 0, sy, 0, 0, 0, 1}); }
  static Mat3 translation(double tx, double ty) { return Mat3({1, 0, tx, 0, 1, ty, 0, 0, 1}); }

  double operator()(int r, int c) const { return m_[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) { return m_[static_cast<std::size_t>(3 * r + c)]; }
  [[nodiscard]] const std::array<double, 9>& values() const { return m_; }

  [[nodiscard]] double det() const {
    const auto& a = m_;
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }

  /// Throws std::invalid_argument when |det| <= 1e-12 relative to scale.
  [[nodiscard]] Mat3 inverse() const;

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  /// Projective map; returns nullopt when the point maps to infinity.
  [[nodiscard]] std::optional<Vec2> apply(Vec2 p) const {
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    if (std::abs(w) < 1e-15) return std::nullopt;
    return Vec2{(m_[0] * p.x + m_[1] * p.y + m_[2]) / w,
                (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
  }

  /// Homogeneous denominator; its sign tells which side of the horizon p lies on.
  [[nodiscard]] double w_of(Vec2 p) const { return m_[6] * p.x + m_[7] * p.y + m_[8]; }

  friend bool operator==(const Mat3&, const Mat3&) = default;

 private:
  std::array<double, 9> m_;
};

using Polygon = std::vector<Vec2>;

/// Even-odd rule; points exactly on an edge may land on either side.
bool point_in_polygon(std::span<const Vec2> poly, Vec2 p);

/// True when every vertex of `inner` lies inside or on `outer` (convex outer).
bool convex_contains(std::span<const Vec2> outer, std::span<const Vec2> inner, double tol = 1e-9);

double polygon_area(std::span<const Vec2> poly);

struct Box {
  double x0, y0, x1, y1;
  [[nodiscard]] bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};
Box bounding_box(std::span<const Vec2> poly);

/// Oriented rectangle described by a corner, a unit long axis, and its extents.
struct OrientedRect {
  Vec2 origin;  // corner at the start of the long axis
  Vec2 axis;    // unit vector along the long axis
  Vec2 side;    // unit vector along the short axis
  double length = 0;
  double width = 0;

  [[nodiscard]] bool contains(Vec2 p) const {
    const Vec2 d = p - origin;
    const double a = d.dot(axis);
    const double b = d.dot(side);
    return a >= 0 && a <= length && b >= 0 && b <= width;
  }
  [[nodiscard]] Polygon corners() const {
    return {origin, origin + axis * length, origin + axis * length + side * width,
            origin + side * width};
  }
};

}  // namespace shadowlane
