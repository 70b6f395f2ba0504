#pragma once

#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Gauss-Legendre on [a,b]; exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Gauss rule on [-1,1] for the weight sqrt(1-u^2) (Chebyshev, second kind).
QuadratureRule gauss_chebyshev_u(int n);

// Product rule on S^2: Gauss-Legendre in z = cos(colatitude) times a uniform
// longitude grid. Weights are normalized to sum to one.
struct SphereGrid {
  std::vector<Vec3> points;
  std::vector<double> weights;
  int n_polar = 0;
  int n_azimuth = 0;
  std::size_t size() const { return points.size(); }
};

SphereGrid sphere_product_grid(int n_polar, int n_azimuth);

// Grid that integrates polynomials of degree <= 2 L exactly.
SphereGrid sphere_grid_for_degree(int L);

}  // namespace sphereflow
