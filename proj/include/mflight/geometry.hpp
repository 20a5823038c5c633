#pragma once

// Bezier airfoil parameterization: 13 normalized design variables ->
// control polygon -> closed, validated surface polyline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mflight/error.hpp"

namespace mflight {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::size_t kDesignSize = 13;
inline constexpr std::size_t kFreeControlPoints = 3;  // per surface

/// The normalized action: every entry finite and inside [-1, 1].
class DesignVector {
 public:
  DesignVector() { values_.fill(0.0); }

  explicit DesignVector(std::span<const double> values) {
    if (values.size() != kDesignSize)
      throw InvalidAction("design vector must have exactly 13 entries, got " +
                          std::to_string(values.size()));
    for (std::size_t i = 0; i < kDesignSize; ++i) {
      const double v = values[i];
      if (!std::isfinite(v) || v < -1.0 || v > 1.0)
        throw InvalidAction("design entry " + std::to_string(i) + " = " + std::to_string(v) +
                            " outside [-1, 1]");
      values_[i] = v;
    }
  }

  double operator[](std::size_t i) const { return values_[i]; }
  const std::array<double, kDesignSize>& values() const { return values_; }

 private:
  std::array<double, kDesignSize> values_;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

// Entry layout of the design vector (and of GeometryBounds::ranges):
//   0..5   upper control points (x1, y1, x2, y2, x3, y3)
//   6..11  lower control points (x1, y1, x2, y2, x3, y3)
//   12     leading-edge radius
struct GeometryBounds {
  std::array<Range, kDesignSize> ranges;

  static GeometryBounds defaults() {
    GeometryBounds b;
    // x sub-ranges are disjoint and increasing, so decoded abscissae are ordered
    const std::array<Range, 3> xs{Range{0.05, 0.35}, Range{0.35, 0.65}, Range{0.65, 0.95}};
    for (std::size_t i = 0; i < 3; ++i) {
      b.ranges[2 * i] = xs[i];
      b.ranges[2 * i + 1] = Range{0.0, 0.25};
      b.ranges[6 + 2 * i] = xs[i];
      b.ranges[6 + 2 * i + 1] = Range{-0.25, 0.0};
    }
    b.ranges[12] = Range{0.002, 0.05};
    return b;
  }

  void validate() const {
    for (std::size_t i = 0; i < kDesignSize; ++i) {
      const auto& r = ranges[i];
      if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi))
        throw ConfigError("geometry bound " + std::to_string(i) + " must be finite with lo < hi");
    }
    for (std::size_t i = 0; i < 12; i += 2)
      if (ranges[i].lo < 0.0 || ranges[i].hi > 1.0)
        throw ConfigError("control-point x bounds must lie in [0, 1]");
    if (ranges[12].lo <= 0.0) throw ConfigError("leading-edge radius bounds must be positive");
  }
};

struct ControlPolygon {
  static constexpr Point leading_edge{0.0, 0.0};
  static constexpr Point trailing_edge{1.0, 0.0};

  std::array<Point, kFreeControlPoints> upper;
  std::array<Point, kFreeControlPoints> lower;
  double leading_edge_radius = 0.01;

  /// Full Bezier control net of one surface, leading edge to trailing edge.
  std::array<Point, kFreeControlPoints + 2> upper_net() const { return net(upper); }
  std::array<Point, kFreeControlPoints + 2> lower_net() const { return net(lower); }

  void validate() const {
    auto check = [](const Point& p) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.x > 1.0)
        throw DomainError("control point x must be finite and inside [0, 1]");
    };
    for (const auto& p : upper) check(p);
    for (const auto& p : lower) check(p);
    if (!std::isfinite(leading_edge_radius) || leading_edge_radius <= 0.0)
      throw DomainError("leading-edge radius must be positive");
  }

 private:
  static std::array<Point, kFreeControlPoints + 2> net(
      const std::array<Point, kFreeControlPoints>& inner) {
    return {leading_edge, inner[0], inner[1], inner[2], trailing_edge};
  }
};

/// Affine map of each normalized entry onto its geometric range.
inline ControlPolygon decode(const DesignVector& design, const GeometryBounds& bounds) {
  auto map = [&](std::size_t i) {
    const auto& r = bounds.ranges[i];
    return r.lo + 0.5 * (design[i] + 1.0) * (r.hi - r.lo);
  };
  ControlPolygon poly;
  for (std::size_t i = 0; i < kFreeControlPoints; ++i) {
    poly.upper[i] = {map(2 * i), map(2 * i + 1)};
    poly.lower[i] = {map(6 + 2 * i), map(6 + 2 * i + 1)};
  }
  poly.leading_edge_radius = map(12);
  poly.validate();
  return poly;
}

/// Inverse of decode. Entries fall outside [-1, 1] when the polygon is outside the bounds box.
inline std::array<double, kDesignSize> encode(const ControlPolygon& poly,
                                              const GeometryBounds& bounds) {
  std::array<double, kDesignSize> raw{};
  for (std::size_t i = 0; i < kFreeControlPoints; ++i) {
    raw[2 * i] = poly.upper[i].x;
    raw[2 * i + 1] = poly.upper[i].y;
    raw[6 + 2 * i] = poly.lower[i].x;
    raw[6 + 2 * i + 1] = poly.lower[i].y;
  }
  raw[12] = poly.leading_edge_radius;
  for (std::size_t i = 0; i < kDesignSize; ++i) {
    const auto& r = bounds.ranges[i];
    raw[i] = 2.0 * (raw[i] - r.lo) / (r.hi - r.lo) - 1.0;
  }
  return raw;
}

inline double binomial(std::size_t n, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

/// Bernstein-form Bezier evaluation.
inline Point bezier_eval(std::span<const Point> ctrl, double t) {
  if (ctrl.size() < 2) throw DomainError("bezier curve needs at least two control points");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bezier parameter outside [0, 1]");
  const std::size_t n = ctrl.size() - 1;
  // exact endpoint interpolation
  if (t == 0.0) return ctrl.front();
  if (t == 1.0) return ctrl.back();
  Point p;
  for (std::size_t i = 0; i <= n; ++i) {
    const double b = binomial(n, i) * std::pow(t, static_cast<double>(i)) *
                     std::pow(1.0 - t, static_cast<double>(n - i));
    p.x += b * ctrl[i].x;
    p.y += b * ctrl[i].y;
  }
  return p;
}

/// Discrete closed surface. Points run trailing edge -> lower surface ->
/// leading edge -> upper surface -> trailing edge; first == last.
struct AirfoilShape {
  std::vector<Point> points;
  std::size_t leading_edge_index = 0;
  bool valid = false;
  double thickness_min = 0.0;  // minimum interior thickness, chord units
  double thickness_max = 0.0;  // maximum thickness ratio t/c

  std::size_t panel_count() const { return points.empty() ? 0 : points.size() - 1; }

  /// Upper surface, leading edge to trailing edge.
  std::vector<Point> upper() const {
    return {points.begin() + static_cast<std::ptrdiff_t>(leading_edge_index), points.end()};
  }
  /// Lower surface, leading edge to trailing edge.
  std::vector<Point> lower() const {
    std::vector<Point> out(points.begin(),
                           points.begin() + static_cast<std::ptrdiff_t>(leading_edge_index) + 1);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(const Point& p, const Point& a, const Point& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = sign(cross(q1, q2, p1));
  const int d2 = sign(cross(q1, q2, p2));
  const int d3 = sign(cross(p1, p2, q1));
  const int d4 = sign(cross(p1, p2, q2));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

/// True when any two non-adjacent edges of the closed polyline touch.
inline bool self_intersects(std::span<const Point> pts) {
  const std::size_t n = pts.size() - 1;  // edges
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // closing edge is adjacent to the first
      if (segments_intersect(pts[i], pts[i + 1], pts[j], pts[j + 1])) return true;
    }
  }
  return false;
}

inline bool strictly_increasing_x(std::span<const Point> pts) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].x > pts[i - 1].x)) return false;
  return true;
}

inline double interpolate_y(std::span<const Point> pts, double x) {
  auto it = std::lower_bound(pts.begin(), pts.end(), x,
                             [](const Point& p, double v) { return p.x < v; });
  if (it == pts.begin()) return it->y;
  if (it == pts.end()) return pts.back().y;
  const Point& b = *it;
  const Point& a = *(it - 1);
  const double w = (x - a.x) / (b.x - a.x);
  return a.y + w * (b.y - a.y);
}

}  // namespace detail

/// Fills the validity flags and thickness figures of a closed polyline
/// whose leading edge sits at `leading_edge_index`.
inline AirfoilShape analyze_shape(std::vector<Point> points, std::size_t leading_edge_index) {
  AirfoilShape shape;
  shape.points = std::move(points);
  shape.leading_edge_index = leading_edge_index;
  shape.valid = false;
  const auto& pts = shape.points;
  if (pts.size() < 4 || leading_edge_index == 0 || leading_edge_index + 1 >= pts.size()) return shape;
  for (const auto& p : pts)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return shape;

  const auto up = shape.upper();
  const auto lo = shape.lower();
  if (!detail::strictly_increasing_x(up) || !detail::strictly_increasing_x(lo)) return shape;

  double tmin = std::numeric_limits<double>::infinity();
  double tmax = 0.0;
  const double chord = up.back().x - up.front().x;
  for (std::size_t i = 1; i + 1 < up.size(); ++i) {
    const double t = up[i].y - detail::interpolate_y(lo, up[i].x);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  for (std::size_t i = 1; i + 1 < lo.size(); ++i) {
    const double t = detail::interpolate_y(up, lo[i].x) - lo[i].y;
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  shape.thickness_min = tmin;
  shape.thickness_max = tmax / chord;
  if (!(tmin > 0.0)) return shape;
  if (detail::self_intersects(pts)) return shape;
  shape.valid = true;
  return shape;
}

/// Convenience for externally supplied closed polylines: the leading edge is
/// taken as the point of minimum x.
inline AirfoilShape shape_from_points(std::vector<Point> points) {
  std::size_t le = 0;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].x < points[le].x) le = i;
  return analyze_shape(std::move(points), le);
}

/// Builds the closed surface from a control polygon with `n_points` panels
/// (n_points/2 per surface, cosine-clustered in the curve parameter).
///
/// The leading-edge radius enters as an additive half-thickness
/// sqrt(2 r x) (1 - x) on each surface. Near x = 0 the Bezier contribution is
/// O(x), so the nose is osculated by a circle of radius exactly r; the (1 - x)
/// factor closes the term at the trailing edge.
inline AirfoilShape build_airfoil(const ControlPolygon& polygon, std::size_t n_points) {
  if (n_points < 40 || n_points % 2 != 0)
    throw ConfigError("n_points must be even and >= 40, got " + std::to_string(n_points));
  polygon.validate();
  const std::size_t m = n_points / 2;
  const auto up_net = polygon.upper_net();
  const auto lo_net = polygon.lower_net();
  const double r = polygon.leading_edge_radius;

  auto surface_point = [&](const std::array<Point, kFreeControlPoints + 2>& net, double t,
                           double side) {
    Point p = bezier_eval(net, t);
    const double x = std::clamp(p.x, 0.0, 1.0);
    p.y += side * std::sqrt(2.0 * r * x) * (1.0 - x);
    return p;
  };
  auto station = [m](std::size_t i) {
    if (i == 0) return 0.0;
    if (i == m) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
  };

  std::vector<Point> pts;
  pts.reserve(2 * m + 1);
  for (std::size_t i = m + 1; i-- > 0;) pts.push_back(surface_point(lo_net, station(i), -1.0));
  for (std::size_t i = 1; i <= m; ++i) pts.push_back(surface_point(up_net, station(i), 1.0));
  return analyze_shape(std::move(pts), m);
}

/// Two-column coordinates in Selig order (trailing edge -> upper -> leading edge -> lower -> trailing edge).
inline void write_selig(std::ostream& os, const AirfoilShape& shape) {
  os << std::setprecision(17);
  for (auto it = shape.points.rbegin(); it != shape.points.rend(); ++it)
    os << it->x << ' ' << it->y << '\n';
}

}  // namespace mflight
