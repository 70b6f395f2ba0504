#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "sphereflow/errors.hpp"

namespace sphereflow {

template <std::size_t N>
using Vec = std::array<double, N>;
using Vec3 = Vec<3>;

template <std::size_t N>
constexpr double dot(const Vec<N>& a, const Vec<N>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t N>
double norm(const Vec<N>& a) {
  return std::sqrt(dot(a, a));
}

template <std::size_t N>
constexpr Vec<N> operator+(Vec<N> a, const Vec<N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
  return a;
}

template <std::size_t N>
constexpr Vec<N> operator-(Vec<N> a, const Vec<N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
  return a;
}

template <std::size_t N>
constexpr Vec<N> operator-(Vec<N> a) {
  for (auto& v : a) v = -v;
  return a;
}

template <std::size_t N>
constexpr Vec<N> operator*(double s, Vec<N> a) {
  for (auto& v : a) v *= s;
  return a;
}

template <std::size_t N>
constexpr Vec<N>& operator+=(Vec<N>& a, const Vec<N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
  return a;
}

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

/// Unit vector of R^N, i.e. a point of S^{N-1}.
template <std::size_t N>
class SpherePoint {
 public:
  SpherePoint() { c_[0] = 1.0; }

  /// Normalizes v; throws GeometryError for a (near) zero vector.
  explicit SpherePoint(const Vec<N>& v) : c_(v) {
    const double r = norm(v);
    if (!(r > 1e-300) || !std::isfinite(r)) throw GeometryError("SpherePoint from zero or non-finite vector");
    for (auto& x : c_) x /= r;
  }

  const Vec<N>& coords() const { return c_; }
  operator const Vec<N>&() const { return c_; }
  double operator[](std::size_t i) const { return c_[i]; }

 private:
  Vec<N> c_{};
};

using S2Point = SpherePoint<3>;

/// Vector of R^N attached to a base point; vec is tangent at base.
template <std::size_t N>
struct TangentVector {
  SpherePoint<N> base;
  Vec<N> vec{};

  bool is_tangent(double rel_tol = 1e-10) const {
    return std::abs(dot(vec, base.coords())) <= rel_tol * std::max(norm(vec), 1e-300);
  }
};

/// Intrinsic distance, i.e. the angle between x and y. The half-angle form
/// keeps full relative precision near 0 and pi, where acos(<x,y>) loses half
/// the digits; it agrees with the clamped arccos elsewhere.
template <std::size_t N>
double geodesic_distance(const Vec<N>& x, const Vec<N>& y) {
  Vec<N> d, s;
  for (std::size_t i = 0; i < N; ++i) {
    d[i] = x[i] - y[i];
    s[i] = x[i] + y[i];
  }
  return 2.0 * std::atan2(norm(d), norm(s));
}

/// Q_x w = w - <w,x> x.
template <std::size_t N>
Vec<N> project_tangent(const Vec<N>& x, const Vec<N>& w) {
  const double p = dot(w, x);
  Vec<N> r = w;
  for (std::size_t i = 0; i < N; ++i) r[i] -= p * x[i];
  return r;
}

template <std::size_t N>
TangentVector<N> project_tangent(const SpherePoint<N>& x, const Vec<N>& w) {
  return {x, project_tangent(x.coords(), w)};
}

/// cos|v| x + sin|v| v/|v|, then renormalized.
template <std::size_t N>
Vec<N> exp_map(const Vec<N>& x, const Vec<N>& v) {
  const double r = norm(v);
  if (r == 0.0) return x;
  const double c = std::cos(r), s = std::sin(r) / r;
  Vec<N> y;
  for (std::size_t i = 0; i < N; ++i) y[i] = c * x[i] + s * v[i];
  const double ny = norm(y);
  for (auto& e : y) e /= ny;
  return y;
}

template <std::size_t N>
SpherePoint<N> exp_map(const SpherePoint<N>& x, const TangentVector<N>& v) {
  return SpherePoint<N>(exp_map(x.coords(), v.vec));
}

inline constexpr double kDefaultCutTolerance = 1e-6;

/// Data of the minimal geodesic a -> gamma(a), a in [0,1], from x to y on S^2.
struct GeodesicFrame {
  Vec3 x{}, y{};
  double theta = 0.0;
  double sin_theta = 0.0;
  double cos_theta = 0.0;
  Vec3 e0{};      // unit tangent at x, pointing to y
  Vec3 e1{};      // unit tangent at y
  Vec3 normal{};  // x cross y / sin(theta)

  Vec3 point(double a) const;
  /// Unit tangent e_a of the geodesic at gamma(a).
  Vec3 tangent(double a) const;
};

/// Throws DegenerateGeodesic when theta <= eps or theta >= pi - eps.
GeodesicFrame geodesic_frame(const Vec3& x, const Vec3& y, double eps_cut = kDefaultCutTolerance);

/// Rotation of v by angle about a unit axis (Rodrigues).
Vec3 rotate(const Vec3& axis, double angle, const Vec3& v);

/// Parallel transport of v (tangent at x) along the minimal geodesic from x to y.
Vec3 parallel_transport(const Vec3& x, const Vec3& y, const Vec3& v);

}  // namespace sphereflow
