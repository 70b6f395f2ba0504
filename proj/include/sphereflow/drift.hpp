#pragma once

#include <span>
#include <string>
#include <vector>

#include "sphereflow/basis.hpp"

namespace sphereflow {

// u(t, x) = sum_i (1 + c_ell)^(-1/2) u_i(t) A_i(x), with u_i piecewise constant
// on the grid [t0 + j dt_grid, t0 + (j+1) dt_grid). Times past the last cell
// use the last cell.
class DriftField {
 public:
  DriftField() = default;
  DriftField(int L_max, int n_modes, int n_times, double t0, double dt_grid);

  static DriftField zero(const BasisRegistry& reg);
  // Rigid rotation x -> omega x x, constant in time; omega is the angular velocity vector.
  static DriftField rigid_rotation(const BasisRegistry& reg, const Vec3& omega);

  int L_max() const { return L_max_; }
  int n_modes() const { return n_modes_; }
  int n_times() const { return n_times_; }
  double t0() const { return t0_; }
  double dt_grid() const { return dt_grid_; }
  bool is_zero() const;

  // Raw table entry (before scaling).
  double& raw(int mode, int t_index) { return u_[static_cast<std::size_t>(t_index) * n_modes_ + mode]; }
  double raw(int mode, int t_index) const { return u_[static_cast<std::size_t>(t_index) * n_modes_ + mode]; }

  int time_index(double t) const;
  // Scaled coefficients at time t for the first out.size() modes (zero beyond n_modes).
  void coefficients(const BasisRegistry& reg, double t, std::span<double> out) const;
  Vec3 eval(const BasisRegistry& reg, double t, const Vec3& x) const;

  // sum_i sqrt(sum_j u_i(t_j)^2 dt_grid): finite for any table.
  double l2_norm_sum() const;

  std::string to_csv() const;
  static DriftField from_csv(const std::string& text);

 private:
  int L_max_ = 0;
  int n_modes_ = 0;
  int n_times_ = 0;
  double t0_ = 0.0;
  double dt_grid_ = 1.0;
  std::vector<double> u_;
};

}  // namespace sphereflow
