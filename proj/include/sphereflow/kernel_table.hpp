#pragma once

#include <string>
#include <vector>

#include "sphereflow/kernels.hpp"

namespace sphereflow {

// Tabulated kernel functions over a theta grid.
struct KernelTable {
  int d = 2;
  int L_max = 0;
  std::string law;
  int quadrature_nodes = 0;  // nodes for the largest L at theta = pi/2
  double tail_bound = 0.0;
  double c = 0.0;

  std::vector<double> theta;
  std::vector<double> G, dG, G1, G2, phi, psi;
  // gamma[ell-1][i], dgamma[ell-1][i]
  std::vector<std::vector<double>> gamma, dgamma;

  enum class Column { G, dG, G1, G2, phi, psi };

  std::size_t size() const { return theta.size(); }
  const std::vector<double>& column(Column c) const;
  // 4-point Lagrange interpolation on the grid.
  double interpolate(Column c, double th) const;

  // CSV with a leading JSON header line; numbers written with 17 significant digits.
  void write_csv(const std::string& path) const;
  std::string to_csv() const;
  static KernelTable read_csv(const std::string& path);
  static KernelTable from_csv(const std::string& text);
};

// Grid: n_uniform points on [0, pi] plus n_log log-spaced points in
// [log_min, pi/(n_uniform-1)).
std::vector<double> kernel_theta_grid(int n_uniform = 2048, int n_log = 64, double log_min = 1e-6);

KernelTable build_kernel_table(const KernelEvaluator& ev, const std::vector<double>& theta);

}  // namespace sphereflow
