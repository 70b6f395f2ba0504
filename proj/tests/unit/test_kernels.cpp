#include <doctest.h>

#include <boost/math/special_functions/gegenbauer.hpp>
#include <cmath>
#include <numbers>

#include "sphereflow/errors.hpp"
#include "sphereflow/kernel_table.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/simd/kernels.hpp"

using namespace sphereflow;

TEST_SUITE("kernels") {
  // The colatitude integral is Laplace's representation of the Gegenbauer
  // polynomial with lambda = (d+1)/2, normalized to one at t = 1.
  TEST_CASE("gamma matches the normalized Gegenbauer polynomial") {
    for (int d : {2, 3, 4}) {
      const double lambda = 0.5 * (d + 1);
      for (int ell = 1; ell <= 25; ++ell) {
        const unsigned n = static_cast<unsigned>(ell - 1);
        const double at_one = boost::math::gegenbauer(n, lambda, 1.0);
        for (double t : {-1.0, -0.7, -0.1, 0.0, 0.33, 0.9, 0.999, 1.0}) {
          const double expected = boost::math::gegenbauer(n, lambda, t) / at_one;
          CHECK(gamma_ell(d, ell, t) == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
        }
      }
    }
  }

  TEST_CASE("gamma on S2 is a normalized sum of Legendre polynomials") {
    // P'_ell = sum over k = ell-1, ell-3, ... of (2k+1) P_k, and P'_ell(1) = ell(ell+1)/2.
    for (int ell = 1; ell <= 30; ++ell) {
      for (double t : {-0.9, -0.2, 0.4, 0.95}) {
        double s = 0.0;
        for (int k = ell - 1; k >= 0; k -= 2) s += (2 * k + 1) * std::legendre(k, t);
        CHECK(gamma_ell(2, ell, t) == doctest::Approx(2.0 * s / (ell * (ell + 1.0))).epsilon(1e-12).scale(1.0));
      }
    }
  }

  TEST_CASE("gamma derivative against central differences") {
    const double h = 1e-6;
    for (int d : {2, 3, 4}) {
      for (int ell = 1; ell <= 12; ++ell) {
        for (double t : {-0.8, 0.1, 0.6}) {
          const double fd = (gamma_ell(d, ell, t + h) - gamma_ell(d, ell, t - h)) / (2 * h);
          CHECK(gamma_ell_prime(d, ell, t) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
      }
    }
  }

  TEST_CASE("gamma is bounded by one and equals one at t = 1") {
    for (int d : {2, 3, 5}) {
      for (int ell = 1; ell <= 15; ++ell) {
        CHECK(gamma_ell(d, ell, 1.0) == doctest::Approx(1.0));
        for (double t = -1.0; t <= 1.0; t += 0.05) CHECK(std::abs(gamma_ell(d, ell, t)) <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("c_d is the integral of sin^d over [0, pi]") {
    CHECK(c_d_constant(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c_d_constant(2) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
    CHECK(c_d_constant(3) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(c_d_constant(4) == doctest::Approx(3.0 * std::numbers::pi / 8).epsilon(1e-12));
    CHECK_THROWS_AS(c_d_constant(0), Unsupported);
  }

  TEST_CASE("G, G1, G2 structure") {
    const KernelEvaluator ev(SpectrumConfig::power_law(2, 12, 3.0, 1.0, 0.1));
    CHECK(ev.G(0.0) == doctest::Approx(2.0 * ev.c()));
    CHECK(ev.G1(0.0) == 0.0);
    CHECK(ev.G2(0.0) == 0.0);
    for (double th = 0.01; th < std::numbers::pi; th += 0.05) {
      CHECK(ev.G(0.0) - ev.G(th) >= 0.0);
      CHECK(ev.G2(th) >= 0.0);
      CHECK(ev.G1(th) <= ev.g1_quadratic_constant() * th * th * (1 + 1e-9));
      CHECK(std::abs(ev.G_prime(th)) <= ev.regularity_constant() * th * (1 + 1e-9));
    }
  }

  TEST_CASE("phi and psi series agree with their G relations") {
    const KernelEvaluator ev(SpectrumConfig::power_law(2, 10, 3.0, 1.0, 0.1));
    for (double th : {0.05, 0.5, 1.5, 2.5, 3.0}) CHECK(ev.phi_psi(th).discrepancy < 1e-10);
  }

  TEST_CASE("covariance symmetry and diagonal") {
    const KernelEvaluator ev(SpectrumConfig::power_law(2, 8, 3.0, 1.0, 0.1));
    for (std::uint32_t i = 0; i < 50; ++i) {
      const Vec3 x = uniform_sphere_point(1, 0, 4 * i), y = uniform_sphere_point(1, 0, 4 * i + 1);
      const Vec3 u = project_tangent(x, uniform_sphere_point(1, 0, 4 * i + 2));
      const Vec3 v = project_tangent(y, uniform_sphere_point(1, 0, 4 * i + 3));
      CHECK(ev.covariance(x, u, y, v) == doctest::Approx(ev.covariance(y, v, x, u)).epsilon(1e-12));
      CHECK(ev.covariance(x, u, x, u) == doctest::Approx(ev.phi_psi(0.0).phi * dot(u, u)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ev.covariance(Vec3{0, 0, 1}, Vec3{0, 0, 1}, Vec3{1, 0, 0}, Vec3{0, 1, 0}), NonTangent);
  }

  TEST_CASE("spectrum validation") {
    CHECK_THROWS_AS(SpectrumConfig::power_law(2, 5, 3.0, 1.0, -0.1).validate(), ConfigError);
    CHECK_THROWS_AS(SpectrumConfig::explicit_law(2, {1.0, -1.0}, 0.1).validate(), ConfigError);
    CHECK_NOTHROW(SpectrumConfig::explicit_law(2, {0.0, 1.0, 0.5}, 0.0).validate());
  }

  TEST_CASE("kernel table CSV round trip and interpolation") {
    const KernelEvaluator ev(SpectrumConfig::power_law(2, 6, 3.0, 1.0, 0.1));
    const auto t = build_kernel_table(ev, kernel_theta_grid(257, 8, 1e-4));
    const auto back = KernelTable::from_csv(t.to_csv());
    CHECK(back.size() == t.size());
    CHECK(back.G == t.G);
    CHECK(back.gamma == t.gamma);
    CHECK(back.c == t.c);
    CHECK(back.interpolate(KernelTable::Column::G, 1.2345) == doctest::Approx(ev.G(1.2345)).epsilon(1e-8));
    CHECK_THROWS_AS(KernelTable::from_csv("theta,G\n1,2\n"), IoError);
  }

  TEST_CASE("rough spectra: ratio estimates agree") {
    for (double a : {0.5, 1.0, 1.5}) {
      const auto r = rough_ratio_limits(a, 1.0, 20000, 1e-2);
      CHECK(r.K() > 0.0);
      CHECK(r.relative_gap() < 0.05);
    }
  }
}

TEST_SUITE("simd") {
  TEST_CASE("gamma tables agree across levels") {
    if (simd::detected_level() != simd::Level::avx2) return;
    const auto& s = simd::kernels(simd::Level::scalar);
    const auto& v = simd::kernels(simd::Level::avx2);
    const auto rule = gamma_quadrature(2).rule(64);
    const simd::PowerSumNodes nodes{rule->nodes.data(), rule->weights.data(), rule->size()};
    std::vector<double> g1(40), d1(40), g2(40), d2(40), coef(40);
    for (int l = 0; l < 40; ++l) coef[l] = 1.0 / (1.0 + l * l);
    for (double t : {-0.99, -0.3, 0.0, 0.4, 0.97}) {
      s.gamma_table(t, nodes, 40, g1.data(), d1.data());
      v.gamma_table(t, nodes, 40, g2.data(), d2.data());
      for (int l = 0; l < 40; ++l) {
        CHECK(g1[l] == doctest::Approx(g2[l]).epsilon(1e-13).scale(1.0));
        CHECK(d1[l] == doctest::Approx(d2[l]).epsilon(1e-11).scale(1.0));
      }
      double a, da, b, db;
      s.gamma_weighted_sums(t, nodes, 40, coef.data(), &a, &da);
      v.gamma_weighted_sums(t, nodes, 40, coef.data(), &b, &db);
      CHECK(a == doctest::Approx(b).epsilon(1e-13));
      CHECK(da == doctest::Approx(db).epsilon(1e-11).scale(1.0));
    }
  }

  TEST_CASE("forced level is honoured") {
    simd::force_level(simd::Level::scalar);
    CHECK(simd::active_level() == simd::Level::scalar);
    CHECK(simd::active_kernels().level == simd::Level::scalar);
    simd::force_level(std::nullopt);
    CHECK(simd::active_level() == simd::detected_level());
  }
}
