#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sphereflow/geometry.hpp"

namespace sphereflow::simd {

enum class Level { scalar, avx2 };

const char* level_name(Level level);

// Best level supported by both the build and the running CPU.
Level detected_level();

// Level used by the dispatching entry points. SPHEREFLOW_SIMD=scalar forces
// the reference path; force_level overrides the environment (nullopt resets).
Level active_level();
void force_level(std::optional<Level> level);

// Quadrature nodes u_j and weights w_j (summing to one) on [-1,1] for the
// power sums behind gamma_ell.
struct PowerSumNodes {
  const double* u = nullptr;
  const double* w = nullptr;
  std::size_t n = 0;
};

// Normalized associated Legendre data for the stream-function synthesis.
// Columns are stored as Qbar_n^m = Pbar_n^m / sin^m theta, triangular index
// tri(n,m) = n(n+1)/2 + m.
struct LegendreTables {
  int degree = 0;
  std::vector<double> diag;    // Qbar_m^m, constant in z
  std::vector<double> a, b;    // three-term recurrence in n at fixed m
  std::vector<double> dratio;  // d/dz Qbar_n^m = dratio * Qbar_n^{m+1}

  static LegendreTables build(int degree);
  static constexpr std::size_t tri(int n, int m) {
    return static_cast<std::size_t>(n) * (n + 1) / 2 + static_cast<std::size_t>(m);
  }
  std::size_t size() const { return tri(degree + 1, 0); }
};

struct KernelSet {
  Level level;

  // gamma[l-1] = sum_j w_j Re z_j^{l-1}, dgamma[l-1] its t-derivative, for
  // z_j = t - i sqrt(1-t^2) u_j and l = 1..L. Returns max |Im| over l.
  double (*gamma_table)(double t, PowerSumNodes nodes, int L, double* gamma, double* dgamma);

  // g = sum_l coef[l-1] gamma_l(t), dg = sum_l coef[l-1] gamma_l'(t).
  void (*gamma_weighted_sums)(double t, PowerSumNodes nodes, int L, const double* coef, double* g,
                              double* dg);

  // out[i] = grad(Phi)(p_i) x p_i with Phi = sum alpha_nm Qbar_n^m C_m + beta_nm Qbar_n^m S_m,
  // where C_m + i S_m = (x + i y)^m. Bit-identical across levels.
  void (*synthesize_field)(const LegendreTables& tab, const double* alpha, const double* beta,
                           const Vec3* points, Vec3* out, std::size_t n);
};

const KernelSet& kernels(Level level);
const KernelSet& active_kernels();

namespace detail {
extern const KernelSet scalar_kernels;
#if defined(SPHEREFLOW_HAVE_AVX2)
extern const KernelSet avx2_kernels;
#endif
}  // namespace detail

}  // namespace sphereflow::simd
