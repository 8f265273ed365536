#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace origami {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

namespace geom {

// Collinearity tolerance for hand-placed design points, in meters.
inline constexpr double kCollinearEps = 1e-12;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Twice the signed area of (a, b, c); positive when counterclockwise.
inline double orient_raw(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

// Sign of orientation, with c treated as collinear when it lies within
// kCollinearEps of the line through a and b.
inline int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d = orient_raw(a, b, c);
  const double len = (b - a).norm();
  if (std::abs(d) <= kCollinearEps * std::max(len, 1e-300)) return 0;
  return d > 0 ? 1 : -1;
}

// True if c lies on the closed segment [a, b] (within tolerance).
inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& c) {
  if (orient(a, b, c) != 0) return false;
  const double t = (c - a).dot(b - a);
  const double l2 = (b - a).squaredNorm();
  const double tol = kCollinearEps * std::sqrt(std::max(l2, 1e-300));
  return t >= -tol && t <= l2 + tol;
}

inline bool same_point(const Vec2& a, const Vec2& b) { return (a - b).norm() <= kCollinearEps; }

// Segments [a,b] and [c,d] intersect somewhere other than at an endpoint they
// share. Collinear overlaps count as intersections.
inline bool segments_conflict(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const bool share_ac = same_point(a, c), share_ad = same_point(a, d);
  const bool share_bc = same_point(b, c), share_bd = same_point(b, d);
  const int shared = int(share_ac) + int(share_ad) + int(share_bc) + int(share_bd);
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (shared >= 2) return true;  // identical segment
  if (shared == 1) {
    // Only a collinear overlap beyond the shared endpoint is a conflict.
    if (o1 != 0 || o2 != 0) return false;
    const Vec2 s = (share_ac || share_ad) ? a : b;
    const Vec2 p = (s == a) ? b : a;
    const Vec2 q = (share_ac || share_bc) ? d : c;
    return (p - s).dot(q - s) > 0.0;
  }
  if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

// Strict proper crossing (no tolerance); used inside triangulation.
inline bool segments_properly_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient_raw(a, b, c), o2 = orient_raw(a, b, d);
  const double o3 = orient_raw(c, d, a), o4 = orient_raw(c, d, b);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

inline double signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * orient_raw(a, b, c); }

// Crossing-number point-in-polygon; boundary points are unspecified, callers
// test those separately.
inline bool point_in_polygon(std::span<const Vec2> poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

// No two non-adjacent edges touch, adjacent edges meet only at their shared
// vertex, no repeated vertices, and the polygon has nonzero area.
inline bool polygon_is_simple(std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (poly[i] == poly[j]) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2& c = poly[j];
      const Vec2& d = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges must not fold back over each other.
        const Vec2& s = (j == i + 1) ? b : a;
        const Vec2& p = (j == i + 1) ? a : b;
        const Vec2& q = (j == i + 1) ? d : c;
        if (orient_raw(p, s, q) == 0.0 && (p - s).dot(q - s) > 0.0) return false;
        continue;
      }
      if (segments_properly_cross(a, b, c, d)) return false;
      // touching without a proper crossing
      auto touches = [](const Vec2& u, const Vec2& v, const Vec2& w) {
        return orient_raw(u, v, w) == 0.0 && (w - u).dot(v - u) >= 0.0 && (w - u).dot(v - u) <= (v - u).squaredNorm();
      };
      if (touches(a, b, c) || touches(a, b, d) || touches(c, d, a) || touches(c, d, b)) return false;
    }
  }
  return std::abs(signed_area(poly)) > 0.0;
}

// Interior angles (radians) of triangle (a, b, c).
inline double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(cross(u, v)), u.dot(v));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

// > 0 when d lies strictly inside the circumcircle of CCW triangle (a, b, c).
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

}  // namespace geom
}  // namespace origami
