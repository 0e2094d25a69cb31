#include "shadowlane/geometry.hpp"

#include <algorithm>
#include <limits>

namespace shadowlane {

Mat3 Mat3::inverse() const {
  const double d = det();
  double scale = 0;
  for (double v : m_) scale = std::max(scale, std::abs(v));
  if (scale == 0 || std::abs(d) <= 1e-12 * scale * scale * scale) {
    throw std::invalid_argument("singular homography");
  }
  const auto& a = m_;
  const double inv = 1.0 / d;
  return Mat3({(a[4] * a[8] - a[5] * a[7]) * inv, (a[2] * a[7] - a[1] * a[8]) * inv,
               (a[1] * a[5] - a[2] * a[4]) * inv, (a[5] * a[6] - a[3] * a[8]) * inv,
               (a[0] * a[8] - a[2] * a[6]) * inv, (a[2] * a[3] - a[0] * a[5]) * inv,
               (a[3] * a[7] - a[4] * a[6]) * inv, (a[1] * a[6] - a[0] * a[7]) * inv,
               (a[0] * a[4] - a[1] * a[3]) * inv});
}

bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polygon_area(std::span<const Vec2> poly) {
  double s = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += poly[i].cross(poly[(i + 1) % n]);
  return 0.5 * s;
}

bool convex_contains(std::span<const Vec2> outer, std::span<const Vec2> inner, double tol) {
  if (outer.size() < 3) return false;
  const double orient = polygon_area(outer) >= 0 ? 1.0 : -1.0;
  for (const Vec2& p : inner) {
    for (std::size_t i = 0; i < outer.size(); ++i) {
      const Vec2 a = outer[i];
      const Vec2 b = outer[(i + 1) % outer.size()];
      const double side = (b - a).cross(p - a) * orient;
      if (side < -tol * std::max(1.0, (b - a).norm())) return false;
    }
  }
  return true;
}

Box bounding_box(std::span<const Vec2> poly) {
  Box b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec2& p : poly) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

}  // namespace shadowlane
