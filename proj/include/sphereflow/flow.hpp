#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sphereflow/basis.hpp"
#include "sphereflow/drift.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/quadrature.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/simd/kernels.hpp"

namespace sphereflow {

// Coefficients of dg = (u dt + sqrt(nu/c) o dW)(g) truncated to ell <= truncation.
// c is taken from the full spectrum so that truncations share noise amplitudes.
class FlowModel {
 public:
  FlowModel(const BasisRegistry& reg, SpectrumConfig spec, const DriftField* drift = nullptr, int truncation = 0);

  const BasisRegistry& registry() const { return *reg_; }
  const SpectrumConfig& spectrum() const { return spec_; }
  const DriftField* drift() const { return drift_; }
  int truncation() const { return trunc_; }
  int modes() const { return static_cast<int>(amp_.size()); }
  // sqrt(nu/c) sqrt(d b_ell / D_ell) per flat mode.
  const std::vector<double>& amplitudes() const { return amp_; }

  double trust_region = std::numbers::pi / 4;

  // kappa_i = u_i(t) dt + amp_i dw_i.
  void step_coefficients(double t, double dt, std::span<const double> dw, std::span<double> kappa) const;

 private:
  const BasisRegistry* reg_;
  SpectrumConfig spec_;
  const DriftField* drift_;
  int trunc_;
  std::vector<double> amp_;
};

// Brownian increments of every mode, generated at a fine step and summed into
// coarser steps, so runs at dt = factor * dt_fine share one path.
class NoiseRealization {
 public:
  NoiseRealization(std::uint64_t seed, int modes, double dt_fine, std::uint32_t replica = 0, std::uint32_t stream = 0);

  int modes() const { return modes_; }
  double dt_fine() const { return dt_fine_; }
  std::uint64_t seed() const { return seed_; }
  // Increments over [step*factor*dt_fine, (step+1)*factor*dt_fine).
  void increments(std::uint64_t step, int factor, std::span<double> dw) const;

 private:
  std::uint64_t seed_;
  int modes_;
  double dt_fine_;
  NormalStream stream_;
};

struct FlowEnsemble {
  std::vector<Vec3> initial;
  std::vector<double> weights;  // sum to one
  std::vector<Vec3> positions;
  double t = 0.0;

  static FlowEnsemble from_grid(const SphereGrid& grid);
  static FlowEnsemble from_points(std::vector<Vec3> points);
  std::size_t size() const { return positions.size(); }
};

// One Stratonovich Heun step of the field sum_i kappa_i A_i for each point.
// Throws StepTooLarge if a geodesic step exceeds the trust region.
void heun_step(const BasisRegistry& reg, const simd::KernelSet& ks, std::span<const double> kappa,
               std::span<Vec3> pos, double trust_region);

// heun_step over the ensemble, parallel across particles; advances e.t by dt.
void step_flow(FlowEnsemble& e, const FlowModel& model, std::span<const double> kappa, double dt);

struct TestFunction {
  std::string name;
  std::function<double(const Vec3&)> f;
  double exact = 0.0;  // integral against the normalized measure
};
// <e_i,x>^2 (exact 1/3), <e_1,x><e_2,x> and <e_3,x> (exact 0).
std::vector<TestFunction> default_test_functions();

struct FlowPath {
  std::vector<double> times;
  std::vector<std::vector<Vec3>> frames;          // only if keep_frames
  std::vector<std::string> function_names;
  std::vector<std::vector<double>> volume_error;  // [save][function]: sum_j w_j f(g_t x_j) - exact
};

struct SimulateOptions {
  std::uint64_t n_steps = 0;
  int factor = 1;  // dt = factor * noise.dt_fine()
  int save_every = 1;
  bool keep_frames = false;
};

FlowPath simulate_flow(FlowEnsemble& e, const FlowModel& model, const NoiseRealization& noise,
                       const SimulateOptions& opt, const std::vector<TestFunction>& fns = default_test_functions());

// Time-reversed flow g^{t0}(t0, .) applied to points: step j uses -kappa_{N-1-j}.
std::vector<Vec3> simulate_inverse_flow(std::vector<Vec3> points, const FlowModel& model, const NoiseRealization& noise,
                                        std::uint64_t n_steps, int factor = 1);
// Forward flow g(t0, .) applied to points with the same discretization.
std::vector<Vec3> simulate_forward(std::vector<Vec3> points, const FlowModel& model, const NoiseRealization& noise,
                                   std::uint64_t n_steps, int factor = 1);

struct InversionResidual {
  double sup = 0.0;                  // sup_j d(g(t0, g^{t0}(t0, x_j)), x_j)
  std::vector<double> weight_drift;  // per test function, after forward-then-inverse
};
InversionResidual inversion_residual(const FlowEnsemble& e, const FlowModel& model, const NoiseRealization& noise,
                                     std::uint64_t n_steps, int factor = 1,
                                     const std::vector<TestFunction>& fns = default_test_functions());

}  // namespace sphereflow
