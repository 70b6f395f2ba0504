#pragma once

#include <cstdint>
#include <vector>

#include "sphereflow/basis.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/jacobi.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/stats.hpp"

namespace sphereflow {

// d<xi,xi>/dt = 2nu + (2nu/c) cot^2(rho) (G(0) - G(rho)) - (2nu/c) cot(rho) G'(rho).
double rotation_qv_rate(const KernelEvaluator& ev, double nu, double rho);
// (nu / (c sin^2 rho)) sum_ell (2 b_ell / D) sum_k (<A(y),N> - cos(rho) <A(x),N>)^2.
double rotation_qv_rate_bruteforce(const BasisRegistry& reg, const SpectrumConfig& spec, const GeodesicFrame& frame);
// Limit of the rate as rho -> 0 for a C^2 kernel: 2nu - 3 nu G''(0) / c.
double rotation_rate_smooth_limit(const KernelEvaluator& ev, double nu);

// Drift of e at x: -nu e + n_coef N, n_coef = (nu/c) sum (b/D) sum_k <A(x),e0><A(x),N>.
struct CurvatureDrift {
  double e_coef = 0.0;
  double n_coef = 0.0;
  Vec3 vec{};
};
CurvatureDrift curvature_drift(const BasisRegistry& reg, const SpectrumConfig& spec, const GeodesicFrame& frame);

// Closed form of the rotation drift term assembled from G, G' and the
// trigonometric factors; tends to -nu as rho -> 0 for regular spectra.
double lemma53_value(const KernelEvaluator& ev, double nu, double rho);
// (nu / (2 c rho^2)) sum (2b/D) sum_k int_0^1 (|nabla_{T_a} J|^2 - <R(T_a,J)J,T_a>) da
// with the Jacobi fields of boundary values A(x), A(y) and Gauss-Legendre in a.
double lemma53_bruteforce(const BasisRegistry& reg, const SpectrumConfig& spec, const GeodesicFrame& frame,
                          int gauss_points = 24);

// A frame at separation rho in a fixed generic orientation.
GeodesicFrame reference_frame(double rho);

struct RotationOptions {
  double rho0 = 0.5;
  double dt = 1e-3;
  std::uint64_t n_steps = 200;
  std::uint64_t window = 50;  // steps per QV window
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  double eps_cut = kDefaultCutTolerance;
};

struct RotationWindow {
  double t_begin = 0.0, t_end = 0.0;
  std::uint64_t replicas = 0;  // replicas alive over the whole window
  double empirical = 0.0;      // mean sum dxi^2 / window length
  double predicted = 0.0;      // mean sum rate dt / window length
  double se = 0.0;
  double z = 0.0;
  double de_e_mean = 0.0;  // <De, e> proxy per unit time
  double de_e_se = 0.0;
  double de_e_z = 0.0;
};

struct RotationReport {
  std::vector<RotationWindow> windows;
  std::uint64_t stopped = 0;  // replicas that reached the cut tolerance
  double C1 = 0.0;            // sup of the closed-form rate over observed rho
  std::uint64_t dominated_violations = 0;  // paths with sum rate dt > C1 t
  double max_realized_over_C1t = 0.0;
  double rho_min = 0.0, rho_max = 0.0;
};

// Two particles at distance rho0 driven by one noise. Per step the normal
// displacement components wx, wy (against N at the start of the step) give
// dxi = (wy - cos(rho) wx) / sin(rho). The <De,e> proxy is
// (cos(dphi) - 1) + dxi^2 / 2 with dphi the turning of e against parallel transport.
RotationReport simulate_rotation(const FlowModel& model, const KernelEvaluator& ev, const RotationOptions& opt);

// Log-log fits on rho in [rho_min, rho_max] for a rough power law.
struct AsymptoticFit {
  double alpha = 0.0;
  int L = 0;
  double slope_rate = 0.0;  // of rate - 2nu, expected alpha - 2
  double slope_drift = 0.0;   // of lemma53_value + nu, expected alpha
  double K = 0.0;
  double K_gap = 0.0;               // relative gap of the two ratio estimates
  double prefactor_ratio = 0.0;     // (rate - 2nu) / (4 nu K (1+alpha) rho^(alpha-2)) at rho_min
  std::vector<double> rho, rate_excess, l53_excess;
};
AsymptoticFit rough_asymptotic_fit(double alpha, double b, double nu, int L, double rho_min, double rho_max, int points);

}  // namespace sphereflow
