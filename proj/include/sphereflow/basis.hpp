#pragma once

#include <span>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/simd/kernels.hpp"

namespace sphereflow {

struct EigenfieldIndex {
  int ell = 1;
  int k = 1;
  bool operator==(const EigenfieldIndex&) const = default;
};

// Divergence-free eigenfields A_{ell,k} on S^2, orthonormal in L^2 of the
// normalized uniform measure.
//
// A_{ell,k} = s_{ell,k} * grad(Y) x x for the real spherical harmonic Y of
// degree n(ell) with unit mean square; k = 1 is the zonal harmonic, k = 2m
// the cos(m phi) and k = 2m+1 the sin(m phi) harmonic.
class BasisRegistry {
 public:
  // Calibrates the degree map, then fixes normalization constants by product
  // Gauss quadrature of the given polar order (default 4 L_max).
  explicit BasisRegistry(int L_max, int quadrature_order = 0);

  int d() const { return 2; }
  int L_max() const { return L_max_; }
  int quadrature_order() const { return quad_order_; }

  int dim_eigenspace(int ell) const;
  int harmonic_degree(int ell) const;
  // c_{ell,delta} = (ell+1)(ell+d-2).
  double eigenvalue(int ell) const;

  // Modes of degree <= ell_max in the flat order used by all coefficient
  // vectors: (1,1), (1,2), (1,3), (2,1), ... Lower modes keep their index
  // when ell_max grows.
  int mode_count(int ell_max) const;
  int mode_count() const { return mode_count(L_max_); }
  int mode_index(EigenfieldIndex idx) const;
  EigenfieldIndex mode_at(int flat) const;

  Vec3 eval(EigenfieldIndex idx, const Vec3& x) const;
  TangentVector<3> eval_eigenfield(EigenfieldIndex idx, const S2Point& x) const;
  // out[i] = A_i(x) for every flat mode i < mode_count(ell_max).
  void eval_all(const Vec3& x, int ell_max, std::span<Vec3> out) const;

  // Field sum_i coef[i] A_i evaluated on a batch of points with the active
  // SIMD kernels. coef.size() <= mode_count().
  void synthesize(std::span<const double> coef, std::span<const Vec3> points, std::span<Vec3> out) const;
  void synthesize(const simd::KernelSet& ks, std::span<const double> coef, std::span<const Vec3> points,
                  std::span<Vec3> out) const;

  // Multiplicative corrections found by quadrature (1 up to rounding for the
  // analytic normalization).
  const std::vector<double>& normalization() const { return norm_; }

  // Cache of normalization constants keyed by (d, L_max, quadrature order).
  std::string normalization_csv() const;
  // Verifies a cache produced by normalization_csv against this registry.
  bool matches_normalization_csv(const std::string& csv, double tol = 1e-14) const;

 private:
  void calibrate();

  int L_max_;
  int quad_order_;
  int table_degree_;
  simd::LegendreTables tab_;
  std::vector<int> degree_;    // degree_[ell]
  std::vector<double> norm_;   // per flat mode
  std::vector<double> scale_;  // per flat mode: norm / sqrt(n(n+1))
};

// Max |Gram - I| over modes of degree <= L under product Gauss quadrature.
double verify_orthonormality(const BasisRegistry& reg, int L, int quadrature_order = 0);

// Rank of the Gram matrix of the degree-ell fields (eigenvalues above tol).
int gram_rank(const BasisRegistry& reg, int ell, double tol = 1e-10);

// sum_k nabla_{A_k} A_k (x) by central differences along geodesics, projected.
Vec3 sum_gradient_identity(const BasisRegistry& reg, int ell, const Vec3& x, double h = 1e-4);
// One summand nabla_{A} A (x).
Vec3 covariant_self_derivative(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h = 1e-4);

// Brute-force pair sums at one degree:
//   s_a = (d/D) sum_k <A(x),A(y)>, s_b = (d/D) sum_k <A(x),y>^2,
//   s_c = (d/D) sum_k (<A(x),y> + <A(y),x>)^2.
struct PairSums {
  double s_a = 0.0, s_b = 0.0, s_c = 0.0;
};
PairSums spectral_pair_sums(const BasisRegistry& reg, int ell, const Vec3& x, const Vec3& y);

// Weighted mode sums over ell = 1..b.size(), b[ell-1] = b_ell:
//   g1 = sum b_ell (d/D) sum_k |A(x) - A(y)|^2,
//   g2 = sum b_ell (d/D) sum_k <x - y, A(x) - A(y)>^2.
struct DifferenceSums {
  double g1 = 0.0, g2 = 0.0;
};
DifferenceSums spectral_difference_sums(const BasisRegistry& reg, std::span<const double> b, const Vec3& x,
                                        const Vec3& y);
// sum b_ell (d/D) sum_k <A(x),u><A(y),v>.
double spectral_covariance(const BasisRegistry& reg, std::span<const double> b, const Vec3& x, const Vec3& u,
                           const Vec3& y, const Vec3& v);

// Divergence of one field by central differences in a tangent frame.
double numerical_divergence(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h = 1e-4);
// Rough (connection) Laplacian by second differences of the parallel-transported field.
Vec3 rough_laplacian(const BasisRegistry& reg, EigenfieldIndex idx, const Vec3& x, double h = 1e-3);

// Orthonormal tangent frame at x.
std::pair<Vec3, Vec3> tangent_frame(const Vec3& x);

}  // namespace sphereflow
