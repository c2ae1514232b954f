#include "scale/geometry.hpp"

#include <algorithm>

namespace scale::geo {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

std::optional<double> ray_circle(const Vec2& origin, const Vec2& dir, const Circle& c) {
  const Vec2 oc = origin - c.center;
  const double b = oc.dot(dir);
  const double q = oc.squaredNorm() - c.radius * c.radius;
  const double disc = b * b - q;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t < 0.0) t = -b + root;
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<double> ray_segment(const Vec2& origin, const Vec2& dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = dir.x() * e.y() - dir.y() * e.x();
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 d = s.a - origin;
  const double t = (d.x() * e.y() - d.y() * e.x()) / denom;
  const double u = (d.x() * dir.y() - d.y() * dir.x()) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const Polygon& p) {
  std::optional<double> best;
  const size_t n = p.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    Segment edge{p.vertices[i], p.vertices[(i + 1) % n]};
    if (auto t = ray_segment(origin, dir, edge)) {
      if (!best || *t < *best) best = *t;
    }
  }
  return best;
}

bool point_in_polygon(const Vec2& p, const Polygon& poly) {
  const size_t n = poly.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[(i + 1) % n];
    const Vec2 e = b - a;
    const Vec2 d = p - a;
    if (e.x() * d.y() - e.y() * d.x() < 0.0) return false;
  }
  return true;
}

bool point_in_circle(const Vec2& p, const Circle& c) {
  return (p - c.center).squaredNorm() <= c.radius * c.radius;
}

static double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Segment& s1, const Segment& s2) {
  const Vec2 r = s1.b - s1.a;
  const Vec2 s = s2.b - s2.a;
  const double denom = cross2(r, s);
  const Vec2 qp = s2.a - s1.a;
  if (std::abs(denom) < 1e-12) {
    if (std::abs(cross2(qp, r)) > 1e-12) return false;
    // Collinear: check 1-D overlap.
    const double rr = r.squaredNorm();
    if (rr < 1e-18) return segment_point_distance(s2, s1.a) < 1e-9;
    const double t0 = qp.dot(r) / rr;
    const double t1 = t0 + s.dot(r) / rr;
    return std::max(std::min(t0, t1), 0.0) <= std::min(std::max(t0, t1), 1.0);
  }
  const double t = cross2(qp, s) / denom;
  const double u = cross2(qp, r) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

double segment_point_distance(const Segment& s, const Vec2& p) {
  const Vec2 e = s.b - s.a;
  const double len2 = e.squaredNorm();
  if (len2 < 1e-18) return (p - s.a).norm();
  const double t = std::clamp((p - s.a).dot(e) / len2, 0.0, 1.0);
  return (p - (s.a + t * e)).norm();
}

bool segment_hits_circle(const Segment& s, const Circle& c) {
  return segment_point_distance(s, c.center) <= c.radius;
}

bool segment_hits_polygon(const Segment& s, const Polygon& p) {
  if (point_in_polygon(s.a, p) || point_in_polygon(s.b, p)) return true;
  const size_t n = p.vertices.size();
  for (size_t i = 0; i < n; ++i) {
    Segment edge{p.vertices[i], p.vertices[(i + 1) % n]};
    if (segments_intersect(s, edge)) return true;
  }
  return false;
}

}  // namespace scale::geo
