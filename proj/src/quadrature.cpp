#include "sphereflow/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sphereflow {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (b + a);
  const int m = (n + 1) / 2;
  auto legendre = [n](double z, double& dp) {
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    return p1;
  };
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double dz = legendre(z, dp) / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    legendre(z, dp);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.nodes[i] = mid - half * z;
    r.nodes[n - 1 - i] = mid + half * z;
    r.weights[i] = r.weights[n - 1 - i] = half * w;
  }
  return r;
}

QuadratureRule gauss_chebyshev_u(int n) {
  if (n < 1) throw std::invalid_argument("gauss_chebyshev_u: n < 1");
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double h = std::numbers::pi / (n + 1);
  for (int j = 0; j < n; ++j) {
    const double s = std::sin((j + 1) * h);
    r.nodes[j] = std::cos((j + 1) * h);
    r.weights[j] = h * s * s;
  }
  return r;
}

SphereGrid sphere_product_grid(int n_polar, int n_azimuth) {
  if (n_polar < 1 || n_azimuth < 1) throw std::invalid_argument("sphere_product_grid: empty grid");
  SphereGrid g;
  g.n_polar = n_polar;
  g.n_azimuth = n_azimuth;
  const QuadratureRule gz = gauss_legendre(n_polar);
  g.points.reserve(static_cast<std::size_t>(n_polar) * n_azimuth);
  g.weights.reserve(g.points.capacity());
  for (int i = 0; i < n_polar; ++i) {
    const double z = gz.nodes[i];
    const double s = std::sqrt(std::fmax(0.0, 1.0 - z * z));
    const double w = 0.5 * gz.weights[i] / n_azimuth;
    for (int j = 0; j < n_azimuth; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_azimuth;
      g.points.push_back({s * std::cos(phi), s * std::sin(phi), z});
      g.weights.push_back(w);
    }
  }
  return g;
}

SphereGrid sphere_grid_for_degree(int L) {
  const int n = L + 1;
  return sphere_product_grid(n, 2 * L + 2);
}

}  // namespace sphereflow
