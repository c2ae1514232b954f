#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scale/geometry.hpp"

using namespace scale::geo;

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));  // -pi wraps to the closed end
  CHECK(wrap_angle(3 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(2 * M_PI) == doctest::Approx(0.0));
  CHECK(wrap_angle(M_PI + 0.1) == doctest::Approx(-M_PI + 0.1));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(a(rng));
    CHECK(w > -M_PI - 1e-12);
    CHECK(w <= M_PI + 1e-12);
  }
}

TEST_CASE("ray-circle intersection matches the quadratic solution") {
  Circle c{{5.0, 0.0}, 1.0};
  auto t = ray_circle({0, 0}, {1, 0}, c);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(4.0));

  // Oblique ray: solve |o + t d - c|^2 = r^2 by hand.
  Vec2 o{0, 0.5};
  Vec2 d{1, 0};
  auto t2 = ray_circle(o, d, c);
  REQUIRE(t2.has_value());
  CHECK(*t2 == doctest::Approx(5.0 - std::sqrt(1.0 - 0.25)));

  CHECK_FALSE(ray_circle({0, 0}, {-1, 0}, c).has_value());  // behind the origin
  CHECK_FALSE(ray_circle({0, 3}, {1, 0}, c).has_value());   // misses
}

TEST_CASE("ray-segment intersection against parametric oracle") {
  Segment s{{2, -1}, {2, 1}};
  auto t = ray_segment({0, 0}, {1, 0}, s);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(2.0));

  // Oblique hit at (2, 0.5): t equals the distance to that point.
  Vec2 d_oblique{2.0, 0.5};
  const double len = d_oblique.norm();
  auto t_ob = ray_segment({0, 0}, d_oblique / len, s);
  REQUIRE(t_ob.has_value());
  CHECK(*t_ob == doctest::Approx(len));
  // A 45-degree ray exits above the segment's top endpoint.
  CHECK_FALSE(ray_segment({0, 0}, {std::sqrt(0.5), std::sqrt(0.5)}, s).has_value());

  CHECK_FALSE(ray_segment({0, 0}, {0, 1}, s).has_value());       // parallel miss
  CHECK_FALSE(ray_segment({0, 2}, {1, 0}, s).has_value());       // past the endpoint
  CHECK_FALSE(ray_segment({3, 0}, {1, 0}, s).has_value());       // behind
}

TEST_CASE("ray-polygon returns the nearest face") {
  Polygon box;
  box.vertices = {{1, -1}, {3, -1}, {3, 1}, {1, 1}};  // CCW square
  auto t = ray_polygon({0, 0}, {1, 0}, box);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(1.0));
  // From inside, the exit face is hit.
  auto t_in = ray_polygon({2, 0}, {1, 0}, box);
  REQUIRE(t_in.has_value());
  CHECK(*t_in == doctest::Approx(1.0));
}

TEST_CASE("point_in_polygon on a CCW square") {
  Polygon box;
  box.vertices = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(point_in_polygon({1, 1}, box));
  CHECK_FALSE(point_in_polygon({3, 1}, box));
  CHECK_FALSE(point_in_polygon({-0.1, 1}, box));
}

TEST_CASE("segment intersection and distance helpers") {
  CHECK(segments_intersect({{0, 0}, {2, 2}}, {{0, 2}, {2, 0}}));
  CHECK_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}));
  CHECK(segment_point_distance({{0, 0}, {2, 0}}, {1, 1}) == doctest::Approx(1.0));
  CHECK(segment_point_distance({{0, 0}, {2, 0}}, {4, 0}) == doctest::Approx(2.0));

  Circle c{{1, 0.3}, 0.4};
  CHECK(segment_hits_circle({{0, 0}, {2, 0}}, c));
  CHECK_FALSE(segment_hits_circle({{0, 2}, {2, 2}}, c));
}
