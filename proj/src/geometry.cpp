#include "sphereflow/geometry.hpp"

#include <numbers>
#include <string>

namespace sphereflow {

Vec3 GeodesicFrame::point(double a) const {
  const double c = std::cos(a * theta), s = std::sin(a * theta);
  return c * x + s * e0;
}

Vec3 GeodesicFrame::tangent(double a) const {
  const double c = std::cos(a * theta), s = std::sin(a * theta);
  return c * e0 - s * x;
}

GeodesicFrame geodesic_frame(const Vec3& x, const Vec3& y, double eps_cut) {
  GeodesicFrame f;
  f.x = x;
  f.y = y;
  f.theta = geodesic_distance(x, y);
  if (f.theta <= eps_cut || f.theta >= std::numbers::pi - eps_cut) {
    throw DegenerateGeodesic("geodesic frame undefined at angle " + std::to_string(f.theta));
  }
  f.cos_theta = std::cos(f.theta);
  f.sin_theta = std::sin(f.theta);
  const double inv = 1.0 / f.sin_theta;
  f.e0 = inv * (y - f.cos_theta * x);
  f.e1 = inv * (f.cos_theta * y - x);
  f.normal = inv * cross(x, y);
  return f;
}

Vec3 rotate(const Vec3& axis, double angle, const Vec3& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec3 kxv = cross(axis, v);
  const double kv = dot(axis, v);
  return c * v + s * kxv + ((1.0 - c) * kv) * axis;
}

Vec3 parallel_transport(const Vec3& x, const Vec3& y, const Vec3& v) {
  // Along a great circle, transport is the rotation about x cross y taking x to y.
  Vec3 axis = cross(x, y);
  const double s = norm(axis);
  if (s < 1e-300) return v;
  axis = (1.0 / s) * axis;
  return rotate(axis, geodesic_distance(x, y), v);
}

}  // namespace sphereflow
