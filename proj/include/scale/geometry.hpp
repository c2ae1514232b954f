#pragma once

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace scale::geo {

using Vec2 = Eigen::Vector2d;

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians, kept in (-pi, pi]

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

// Convex polygon, vertices in counter-clockwise order.
struct Polygon {
  std::vector<Vec2> vertices;
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

// Parametric distance t >= 0 along the ray where it first hits the shape,
// or nullopt. Ray direction must be unit length.
std::optional<double> ray_circle(const Vec2& origin, const Vec2& dir, const Circle& c);
std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir, const Segment& s);
std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const Polygon& p);

bool point_in_polygon(const Vec2& p, const Polygon& poly);
bool point_in_circle(const Vec2& p, const Circle& c);

bool segments_intersect(const Segment& s1, const Segment& s2);
double segment_point_distance(const Segment& s, const Vec2& p);

bool segment_hits_circle(const Segment& s, const Circle& c);
bool segment_hits_polygon(const Segment& s, const Polygon& p);

}  // namespace scale::geo
