#pragma once

#include "sphereflow/basis.hpp"
#include "sphereflow/geometry.hpp"

namespace sphereflow {

// Boundary data J(0) = X at x, J(1) = Y at y along the frame's geodesic.
struct JacobiBoundary {
  GeodesicFrame frame;
  Vec3 X{};
  Vec3 Y{};
};

// Throws NonTangent unless X is tangent at x and Y at y.
JacobiBoundary make_jacobi_boundary(const GeodesicFrame& frame, const Vec3& X, const Vec3& Y);

// J(a) = J1(a) e_a + J2(a) N and the a-derivatives of both coefficients.
struct JacobiCoefficients {
  double J1 = 0.0, J2 = 0.0;
  double dJ1 = 0.0, dJ2 = 0.0;
};
JacobiCoefficients jacobi_coefficients(const JacobiBoundary& bnd, double a);
Vec3 jacobi_field(const JacobiBoundary& bnd, double a);

// N-coefficient of the normal Jacobi derivative: (wy - cos(rho) wx) / sin(rho).
double normal_jacobi_derivative(const GeodesicFrame& frame, double wx, double wy);

// s1 = (2/D) sum_k <A(x),N>^2, s2 the same at y,
// s3 = (2/D) sum_k <A(x),N><A(y),N> and its closed form.
struct FrameSums {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  double s3_closed = 0.0;
};
FrameSums lemma52_sums(const BasisRegistry& reg, int ell, const GeodesicFrame& frame);

}  // namespace sphereflow
