#include <doctest.h>

#include <cmath>
#include <vector>

#include "sphereflow/basis.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/simd/kernels.hpp"

using namespace sphereflow;

namespace {
const BasisRegistry& reg6() {
  static const BasisRegistry r(6);
  return r;
}
Vec3 pt(std::uint32_t i) { return uniform_sphere_point(2024, 11, i); }
}  // namespace

TEST_SUITE("basis") {
  TEST_CASE("dimensions, degrees and flat indexing") {
    const auto& r = reg6();
    for (int ell = 1; ell <= 6; ++ell) {
      CHECK(r.dim_eigenspace(ell) == 2 * ell + 1);
      CHECK(r.harmonic_degree(ell) == ell);
      CHECK(r.eigenvalue(ell) == doctest::Approx((ell + 1.0) * ell));
    }
    CHECK(r.mode_count(1) == 3);
    CHECK(r.mode_count(6) == 48);
    for (int i = 0; i < r.mode_count(); ++i) CHECK(r.mode_index(r.mode_at(i)) == i);
    CHECK(r.mode_index({2, 1}) == 3);
  }

  TEST_CASE("degree-one fields are scaled rotations") {
    const auto& r = reg6();
    const double s = std::sqrt(1.5);
    for (std::uint32_t i = 0; i < 20; ++i) {
      const Vec3 x = pt(i);
      CHECK(norm(r.eval({1, 1}, x) - s * cross(Vec3{0, 0, 1}, x)) < 1e-14);
      CHECK(norm(r.eval({1, 2}, x) - s * cross(Vec3{1, 0, 0}, x)) < 1e-14);
      CHECK(norm(r.eval({1, 3}, x) - s * cross(Vec3{0, 1, 0}, x)) < 1e-14);
    }
  }

  TEST_CASE("orthonormal under quadrature, full rank per degree") {
    CHECK(verify_orthonormality(reg6(), 6) < 1e-13);
    for (int ell = 1; ell <= 6; ++ell) CHECK(gram_rank(reg6(), ell) == 2 * ell + 1);
  }

  TEST_CASE("fields are tangent and divergence free") {
    const auto& r = reg6();
    for (std::uint32_t i = 0; i < 10; ++i) {
      const Vec3 x = pt(i);
      for (int m = 0; m < r.mode_count(); ++m) {
        const auto idx = r.mode_at(m);
        CHECK(r.eval_eigenfield(idx, S2Point(x)).is_tangent());
        CHECK(std::abs(numerical_divergence(r, idx, x)) < 1e-6);
      }
    }
  }

  TEST_CASE("rough Laplacian eigenvalue") {
    // Hodge eigenvalue c = ell(ell+1) minus the Ricci term on the unit sphere.
    const auto& r = reg6();
    const Vec3 x = pt(77);
    for (int ell = 1; ell <= 5; ++ell) {
      for (int k = 1; k <= r.dim_eigenspace(ell); k += 2) {
        const Vec3 a = r.eval({ell, k}, x);
        if (norm(a) < 0.1) continue;
        const Vec3 lap = rough_laplacian(r, {ell, k}, x);
        CHECK(norm(lap + (r.eigenvalue(ell) - 1.0) * a) < 1e-4 * r.eigenvalue(ell));
      }
    }
  }

  TEST_CASE("sum of self derivatives vanishes per degree") {
    for (std::uint32_t i = 0; i < 10; ++i)
      for (int ell = 1; ell <= 5; ++ell) CHECK(norm(sum_gradient_identity(reg6(), ell, pt(i))) < 1e-5);
  }

  TEST_CASE("pair sums against their closed forms (property over random pairs)") {
    for (std::uint32_t i = 0; i < 100; ++i) {
      const Vec3 x = pt(2 * i), y = pt(2 * i + 1);
      const double t = dot(x, y);
      for (int ell = 1; ell <= 6; ++ell) {
        const auto s = spectral_pair_sums(reg6(), ell, x, y);
        const double g = gamma_ell(2, ell, t), gp = gamma_ell_prime(2, ell, t);
        CHECK(s.s_a == doctest::Approx(2 * t * g - (1 - t * t) * gp).epsilon(1e-10).scale(1.0));
        CHECK(s.s_b == doctest::Approx(1 - t * t).epsilon(1e-10).scale(1.0));
        CHECK(s.s_c == doctest::Approx(2 * (1 - t * t) * (1 - g)).epsilon(1e-10).scale(1.0));
      }
    }
  }

  TEST_CASE("difference sums and covariance equal their spectral forms") {
    const auto spec = SpectrumConfig::power_law(2, 6, 3.0, 1.0, 0.1);
    const KernelEvaluator ev(spec);
    const auto b = spec.coefficients();
    for (std::uint32_t i = 0; i < 30; ++i) {
      const Vec3 x = pt(4 * i), y = pt(4 * i + 1);
      const double th = geodesic_distance(x, y);
      const auto s = spectral_difference_sums(reg6(), b, x, y);
      CHECK(s.g1 == doctest::Approx(ev.G1(th)).epsilon(1e-10).scale(1.0));
      CHECK(s.g2 == doctest::Approx(ev.G2(th)).epsilon(1e-10).scale(1.0));
      const Vec3 u = project_tangent(x, pt(4 * i + 2)), v = project_tangent(y, pt(4 * i + 3));
      CHECK(spectral_covariance(reg6(), b, x, u, y, v) == doctest::Approx(ev.covariance(x, u, y, v)).epsilon(1e-10).scale(1.0));
    }
  }

  TEST_CASE("eval_all matches single evaluation") {
    const auto& r = reg6();
    std::vector<Vec3> all(r.mode_count());
    const Vec3 x = pt(5);
    r.eval_all(x, 6, all);
    for (int m = 0; m < r.mode_count(); ++m) CHECK(norm(all[m] - r.eval(r.mode_at(m), x)) < 1e-14);
  }

  TEST_CASE("normalization cache round trip") {
    const auto csv = reg6().normalization_csv();
    CHECK(reg6().matches_normalization_csv(csv));
    const BasisRegistry other(5);
    CHECK_FALSE(other.matches_normalization_csv(csv));
    for (double n : reg6().normalization()) CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("synthesis equals the mode sum") {
    const auto& r = reg6();
    std::vector<double> coef(r.mode_count());
    for (std::size_t i = 0; i < coef.size(); ++i) coef[i] = std::cos(0.7 * i) / (1.0 + i);
    std::vector<Vec3> pts, out(64);
    for (std::uint32_t i = 0; i < 64; ++i) pts.push_back(pt(i));
    r.synthesize(coef, pts, out);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      Vec3 s{0, 0, 0};
      for (int m = 0; m < r.mode_count(); ++m) s += coef[m] * r.eval(r.mode_at(m), pts[j]);
      CHECK(norm(out[j] - s) < 1e-13);
    }
  }
}

TEST_SUITE("simd") {
  TEST_CASE("synthesis is bit-identical across levels") {
    if (simd::detected_level() != simd::Level::avx2) return;
    const BasisRegistry r(12);
    std::vector<double> coef(r.mode_count());
    for (std::size_t i = 0; i < coef.size(); ++i) coef[i] = std::sin(1.3 * i + 0.2);
    // odd count exercises the scalar tail of the vector loop
    std::vector<Vec3> pts, a(1003), b(1003);
    for (std::uint32_t i = 0; i < 1003; ++i) pts.push_back(pt(i));
    pts[0] = Vec3{0, 0, 1};
    pts[1] = Vec3{0, 0, -1};
    r.synthesize(simd::kernels(simd::Level::scalar), coef, pts, a);
    r.synthesize(simd::kernels(simd::Level::avx2), coef, pts, b);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      for (int c = 0; c < 3; ++c) CHECK(a[j][c] == b[j][c]);
    }
  }
}
