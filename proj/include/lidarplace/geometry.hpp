#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace lidarplace {

// Lengths are meters throughout.
inline constexpr double kBoundaryTolerance = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Box2 {
  Point2 min;
  Point2 max;

  bool contains(Point2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }

  friend bool operator==(const Box2&, const Box2&) = default;
};

using Polygon = std::vector<Point2>;

// Positive for counter-clockwise vertex order.
double signed_area(std::span<const Point2> polygon);

Box2 bounding_box(std::span<const Point2> points);

double point_segment_distance(Point2 p, Point2 a, Point2 b);

// Closed polygon test: points within kBoundaryTolerance of an edge are inside.
bool point_in_polygon(Point2 p, std::span<const Point2> polygon);

// Distance from p to the open polyline through `points`.
double point_polyline_distance(Point2 p, std::span<const Point2> points);

// No two non-adjacent edges touch and no two adjacent edges overlap.
bool is_simple_polygon(std::span<const Point2> polygon);

// Collinear vertices are tolerated.
bool is_convex_polygon(std::span<const Point2> polygon);

inline double planar_distance(Point2 a, Point2 b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double degrees_to_radians(double deg) { return deg * M_PI / 180.0; }

}  // namespace lidarplace
