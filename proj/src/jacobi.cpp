#include "sphereflow/jacobi.hpp"

#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/kernels.hpp"

namespace sphereflow {

JacobiBoundary make_jacobi_boundary(const GeodesicFrame& frame, const Vec3& X, const Vec3& Y) {
  constexpr double tol = 1e-10;
  if (std::abs(dot(X, frame.x)) > tol * std::max(1.0, norm(X)) ||
      std::abs(dot(Y, frame.y)) > tol * std::max(1.0, norm(Y))) {
    throw NonTangent("Jacobi boundary vectors must be tangent at their base points");
  }
  return {frame, X, Y};
}

JacobiCoefficients jacobi_coefficients(const JacobiBoundary& bnd, double a) {
  const GeodesicFrame& f = bnd.frame;
  const double th = f.theta, s = f.sin_theta, cot = f.cos_theta / f.sin_theta;
  const double xy = dot(bnd.X, f.y), yx = dot(bnd.Y, f.x);
  const double xn = dot(bnd.X, f.normal), yn = dot(bnd.Y, f.normal);
  const double ca = std::cos(a * th), sa = std::sin(a * th);
  JacobiCoefficients c;
  c.J1 = ((1.0 - a) * xy - a * yx) / s;
  c.dJ1 = -(xy + yx) / s;
  c.J2 = sa / s * yn + (ca - cot * sa) * xn;
  c.dJ2 = th * (ca / s * yn - (sa + cot * ca) * xn);
  return c;
}

Vec3 jacobi_field(const JacobiBoundary& bnd, double a) {
  const JacobiCoefficients c = jacobi_coefficients(bnd, a);
  return c.J1 * bnd.frame.tangent(a) + c.J2 * bnd.frame.normal;
}

double normal_jacobi_derivative(const GeodesicFrame& frame, double wx, double wy) {
  return (wy - frame.cos_theta * wx) / frame.sin_theta;
}

FrameSums lemma52_sums(const BasisRegistry& reg, int ell, const GeodesicFrame& frame) {
  const int D = reg.dim_eigenspace(ell);
  FrameSums r;
  for (int k = 1; k <= D; ++k) {
    const double ax = dot(reg.eval({ell, k}, frame.x), frame.normal);
    const double ay = dot(reg.eval({ell, k}, frame.y), frame.normal);
    r.s1 += ax * ax;
    r.s2 += ay * ay;
    r.s3 += ax * ay;
  }
  const double f = 2.0 / D;
  r.s1 *= f;
  r.s2 *= f;
  r.s3 *= f;
  const double t = frame.cos_theta;
  r.s3_closed = t * gamma_ell(2, ell, t) - (1.0 - t * t) * gamma_ell_prime(2, ell, t);
  return r;
}

}  // namespace sphereflow
