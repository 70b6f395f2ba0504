#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sphereflow/errors.hpp"
#include "sphereflow/geometry.hpp"
#include "sphereflow/rng.hpp"

using namespace sphereflow;

namespace {
Vec3 pt(std::uint32_t i) { return uniform_sphere_point(99, 7, i); }
}

TEST_SUITE("geometry") {
  TEST_CASE("distance is a metric bounded by pi") {
    for (std::uint32_t i = 0; i < 200; ++i) {
      const Vec3 x = pt(3 * i), y = pt(3 * i + 1), z = pt(3 * i + 2);
      const double dxy = geodesic_distance(x, y);
      CHECK(dxy >= 0.0);
      CHECK(dxy <= std::numbers::pi);
      CHECK(dxy == doctest::Approx(geodesic_distance(y, x)).epsilon(1e-15));
      CHECK(dxy <= geodesic_distance(x, z) + geodesic_distance(z, y) + 1e-14);
    }
    CHECK(geodesic_distance(Vec3{0, 0, 1}, Vec3{0, 0, -1}) == doctest::Approx(std::numbers::pi));
  }

  TEST_CASE("chord and arc comparison") {
    for (std::uint32_t i = 0; i < 500; ++i) {
      const Vec3 x = pt(2 * i), y = pt(2 * i + 1);
      const double th = geodesic_distance(x, y), ch = norm(x - y);
      CHECK(ch <= th + 1e-15);
      CHECK(th <= std::numbers::pi / 2 * ch + 1e-15);
    }
  }

  TEST_CASE("small angles resolve below acos precision") {
    const Vec3 x{0.0, 0.0, 1.0};
    for (double a : {1e-12, 1e-9, 1e-6}) {
      const Vec3 y{std::sin(a), 0.0, std::cos(a)};
      CHECK(geodesic_distance(x, y) == doctest::Approx(a).epsilon(1e-6));
    }
  }

  TEST_CASE("sphere point rejects degenerate input") {
    CHECK_THROWS_AS(S2Point(Vec3{0, 0, 0}), GeometryError);
    CHECK_THROWS_AS(S2Point(Vec3{NAN, 0, 1}), GeometryError);
    CHECK(norm(S2Point(Vec3{3, 4, 12}).coords()) == doctest::Approx(1.0));
  }

  TEST_CASE("exp map travels the tangent length") {
    for (std::uint32_t i = 0; i < 100; ++i) {
      const Vec3 x = pt(2 * i);
      const Vec3 v = 0.9 * project_tangent(x, pt(2 * i + 1));
      const Vec3 y = exp_map(x, v);
      CHECK(norm(y) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(geodesic_distance(x, y) == doctest::Approx(norm(v)).epsilon(1e-12));
    }
  }

  TEST_CASE("parallel transport is an isometry onto the target tangent space") {
    for (std::uint32_t i = 0; i < 100; ++i) {
      const Vec3 x = pt(3 * i), y = pt(3 * i + 1);
      if (geodesic_distance(x, y) > 3.0) continue;
      const Vec3 v = project_tangent(x, pt(3 * i + 2));
      const Vec3 w = parallel_transport(x, y, v);
      CHECK(norm(w) == doctest::Approx(norm(v)).epsilon(1e-12));
      CHECK(std::abs(dot(w, y)) < 1e-12);
      const Vec3 back = parallel_transport(y, x, w);
      CHECK(norm(back - v) < 1e-12);
    }
  }

  TEST_CASE("geodesic frame") {
    const Vec3 x = S2Point(Vec3{0.2, 0.3, 0.9}).coords(), y = S2Point(Vec3{-0.4, 0.8, 0.1}).coords();
    const GeodesicFrame f = geodesic_frame(x, y);
    CHECK(norm(f.point(0.0) - x) < 1e-14);
    CHECK(norm(f.point(1.0) - y) < 1e-14);
    CHECK(std::abs(dot(f.e0, x)) < 1e-14);
    CHECK(std::abs(dot(f.normal, x)) < 1e-14);
    CHECK(std::abs(dot(f.normal, f.e0)) < 1e-14);
    CHECK(norm(f.e0) == doctest::Approx(1.0));
    CHECK(norm(exp_map(x, f.theta * f.e0) - y) < 1e-13);
    CHECK_THROWS_AS(geodesic_frame(x, x), DegenerateGeodesic);
    CHECK_THROWS_AS(geodesic_frame(x, -1.0 * x), DegenerateGeodesic);
  }

  TEST_CASE("rotation preserves the axis and angles") {
    const Vec3 axis = S2Point(Vec3{1, 2, 2}).coords();
    const Vec3 v{0.3, -0.1, 0.7};
    const Vec3 r = rotate(axis, 0.8, v);
    CHECK(norm(r) == doctest::Approx(norm(v)));
    CHECK(dot(r, axis) == doctest::Approx(dot(v, axis)));
    CHECK(norm(rotate(axis, 0.8, axis) - axis) < 1e-15);
  }
}
