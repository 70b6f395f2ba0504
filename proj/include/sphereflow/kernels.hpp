#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/quadrature.hpp"

namespace sphereflow {

// Spectrum of the driving field: dimension d, truncation L_max, coefficients
// b_ell (ell = 1..L_max) and viscosity nu.
struct SpectrumConfig {
  enum class Law { power, explicit_list };

  int d = 2;
  int L_max = 5;
  Law law = Law::power;
  double alpha = 3.0;         // power law: b_1 = 0, b_ell = b / (ell-1)^(1+alpha)
  double b = 1.0;
  std::vector<double> coeffs;  // explicit law: b_1..b_Lmax
  double nu = 0.1;

  static SpectrumConfig power_law(int d, int L_max, double alpha, double b, double nu);
  static SpectrumConfig explicit_law(int d, std::vector<double> b_ell, double nu);

  // Throws ConfigError on invalid fields.
  void validate() const;
  double b_ell(int ell) const;
  std::vector<double> coefficients() const;  // index ell-1
  double total() const;                      // sum_{ell <= L_max} b_ell = G(0)
  double c() const { return 0.5 * total(); }
  // Upper bound on sum_{ell > L_max} b_ell (0 for explicit lists).
  double tail_bound() const;
  std::string describe() const;
};

// c_d = int_0^pi sin^d phi dphi by Gauss-Legendre.
double c_d_constant(int d);

// Nodes and weights (normalized to sum one) in u = cos(phi) for the gamma_ell
// power sums at a given dimension. Exact for polynomial integrands of degree
// L - 1 at the requested node count.
class GammaQuadrature {
 public:
  explicit GammaQuadrature(int d);
  int d() const { return d_; }
  // Node count that integrates gamma_ell, gamma_ell' exactly for ell <= L.
  int exact_nodes(int L) const;
  // Node count used at angle theta: the exact count, capped by a band-limit
  // estimate for large L on even d.
  int nodes_for(int L, double theta) const;
  // Thread-safe cached rule with n nodes.
  std::shared_ptr<const QuadratureRule> rule(int n) const;

 private:
  int d_;
  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const QuadratureRule>> cache_;
};

const GammaQuadrature& gamma_quadrature(int d);

double gamma_ell(int d, int ell, double t);
double gamma_ell_prime(int d, int ell, double t);

// All gamma_ell(t), gamma_ell'(t) for ell = 1..L. Returns max |imaginary part|.
double gamma_all(int d, int L, double t, std::vector<double>& gamma, std::vector<double>& dgamma);

struct PhiPsi {
  double phi = 0.0;
  double psi = 0.0;
  double phi_series = 0.0;  // the direct series forms
  double psi_series = 0.0;
  double discrepancy = 0.0;  // max |series - G-relation|
};

// Closed-form kernel functions of one spectrum.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(SpectrumConfig spec);

  const SpectrumConfig& spectrum() const { return spec_; }
  int d() const { return spec_.d; }
  int L() const { return spec_.L_max; }
  double c() const { return c_; }
  double G0() const { return g0_; }
  const std::vector<double>& coefficients() const { return coef_; }

  // (G(theta), G'(theta)) in one pass.
  std::pair<double, double> G_and_prime(double theta) const;
  double G(double theta) const { return G_and_prime(theta).first; }
  double G_prime(double theta) const { return G_and_prime(theta).second; }
  double G1(double theta) const;
  double G2(double theta) const;
  // Series and G-relation paths; throws Error if they disagree beyond tol.
  PhiPsi phi_psi(double theta, double tol = 1e-8) const;
  // C((x,u),(y,v)); throws NonTangent unless u is tangent at x and v at y.
  double covariance(const Vec3& x, const Vec3& u, const Vec3& y, const Vec3& v) const;
  // G''(0) by Richardson extrapolation of G'(theta)/theta.
  double G_second_at_zero(double h = 1e-2) const;
  // sup_theta |G'(theta)|/theta on a grid over (0, pi].
  double regularity_constant(int grid = 2048) const;
  // sup_theta G1(theta)/theta^2 (grid plus golden-section refinement).
  double g1_quadratic_constant(int grid = 2048) const;

 private:
  SpectrumConfig spec_;
  std::vector<double> coef_;
  double g0_ = 0.0;
  double c_ = 0.0;
};

// Estimates of the limit K in (G(0)-G(theta))/theta^alpha -> K G(0) and
// G'(theta)/theta^(alpha-1) -> -alpha K G(0) for a rough power law.
// Smallest eigenvalue of the covariance Gram matrix C((x_i,u_i),(x_j,u_j)).
double covariance_gram_min_eigenvalue(const KernelEvaluator& ev, std::span<const Vec3> x, std::span<const Vec3> u);

struct RatioLimits {
  double alpha = 0.0;
  double theta = 0.0;
  double from_values = 0.0;      // extrapolated (G(0)-G)/(theta^alpha G(0))
  double from_derivative = 0.0;  // extrapolated -G'/(alpha theta^(alpha-1) G(0))
  double K() const { return 0.5 * (from_values + from_derivative); }
  double relative_gap() const;
};

RatioLimits rough_ratio_limits(double alpha, double b, int L, double theta);

}  // namespace sphereflow
