#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sphereflow/flow.hpp"
#include "sphereflow/stats.hpp"

namespace sphereflow {

// Test function with known tangential gradient and Laplace-Beltrami value.
struct HarmonicTest {
  std::string name;
  std::function<double(const Vec3&)> f;
  std::function<Vec3(const Vec3&)> grad;  // tangent at x
  std::function<double(const Vec3&)> laplacian;
};
HarmonicTest constant_function();
HarmonicTest coordinate_function(int i);       // <e_i, x>
HarmonicTest quadratic_function(int i, int j);  // <e_i, x><e_j, x>

struct GeneratorCheck {
  double empirical = 0.0;  // mean of (f(g_dt x) - f(x)) / dt
  double analytic = 0.0;   // nu Lap f + <u(0,x), grad f>
  double se = 0.0;
  double z = 0.0;
};
// Independent one-step samples from x (replica = sample index).
GeneratorCheck generator_check(const FlowModel& model, const HarmonicTest& f, const Vec3& x, double dt,
                               std::uint64_t n_samples, std::uint64_t seed);

struct CovarianceCheck {
  double empirical = 0.0;  // Cov(<dx,u>, <dy,v>) over one step
  double predicted = 0.0;  // dt (nu/c) C((x,u),(y,v))
  double se = 0.0;
  double z = 0.0;
};
CovarianceCheck increment_covariance(const FlowModel& model, const Vec3& x, const Vec3& u, const Vec3& y,
                                     const Vec3& v, double dt, std::uint64_t n_samples, std::uint64_t seed);

// d(x0, g_T x0) samples for each base point; replicas are disjoint across bases.
std::vector<std::vector<double>> one_point_distances(const FlowModel& model, const std::vector<Vec3>& bases,
                                                     std::uint64_t n_steps, double dt, std::uint64_t n_samples,
                                                     std::uint64_t seed);
// Smallest pairwise two-sample KS p-value across base points.
TestResult isotropy_ks(const FlowModel& model, const std::vector<Vec3>& bases, std::uint64_t n_steps, double dt,
                       std::uint64_t n_samples, std::uint64_t seed);

// Particles started uniformly at random; chi-square of terminal positions on
// equal-area cells (bands in z times longitude sectors).
TestResult uniformity_chi2(const FlowModel& model, std::uint64_t n_particles, std::uint64_t n_steps, double dt,
                           int bands, int sectors, std::uint64_t seed);

// Root-mean-square terminal distance to the finest run, for dt_coarse / 2^k,
// k = 0..levels-1; the reference uses dt_coarse / 2^levels on the same path.
struct StrongConvergence {
  std::vector<double> dt;
  std::vector<double> rms_error;
  double order = 0.0;  // fitted slope of log error against log dt
};
StrongConvergence strong_self_convergence(const FlowModel& model, const std::vector<Vec3>& points,
                                          std::uint64_t n_steps_coarse, double dt_coarse, int levels,
                                          std::uint64_t replicas, std::uint64_t seed);

// E int sup_t d^2(g_n, g_nmax) dx for nested truncations sharing one noise.
struct GalerkinRow {
  int n = 0;
  double mean = 0.0;
  double se = 0.0;
};
std::vector<GalerkinRow> galerkin_convergence(const BasisRegistry& reg, const SpectrumConfig& spec,
                                              const DriftField* drift, const std::vector<int>& truncations,
                                              const FlowEnsemble& ensemble, std::uint64_t n_steps, double dt,
                                              std::uint64_t replicas, std::uint64_t seed);

}  // namespace sphereflow
