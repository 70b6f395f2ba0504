#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sphereflow/errors.hpp"
#include "sphereflow/jacobi.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/rotation.hpp"

using namespace sphereflow;

namespace {
const BasisRegistry& reg5() {
  static const BasisRegistry r(5);
  return r;
}
const SpectrumConfig kSpec = SpectrumConfig::power_law(2, 5, 3.0, 1.0, 0.1);

GeodesicFrame frame_at(std::uint32_t i) {
  return geodesic_frame(uniform_sphere_point(8, 1, 2 * i), uniform_sphere_point(8, 1, 2 * i + 1), 1e-3);
}

Vec3 tangent_at(const GeodesicFrame& f, double a) { return f.theta * f.tangent(a); }
}  // namespace

TEST_SUITE("jacobi") {
  TEST_CASE("boundary values and the Jacobi equation") {
    for (std::uint32_t i = 0; i < 20; ++i) {
      const auto f = frame_at(i);
      const Vec3 X = project_tangent(f.x, uniform_sphere_point(8, 2, 2 * i));
      const Vec3 Y = project_tangent(f.y, uniform_sphere_point(8, 2, 2 * i + 1));
      const auto bnd = make_jacobi_boundary(f, X, Y);
      CHECK(norm(jacobi_field(bnd, 0.0) - X) < 1e-13);
      CHECK(norm(jacobi_field(bnd, 1.0) - Y) < 1e-13);
      const double h = 1e-4;
      for (double a : {0.2, 0.5, 0.8}) {
        const Vec3 J = jacobi_field(bnd, a), g = f.point(a), gp = tangent_at(f, a);
        CHECK(std::abs(dot(J, g)) < 1e-13);
        const Vec3 acc = (1.0 / (h * h)) * (jacobi_field(bnd, a + h) + jacobi_field(bnd, a - h) - 2.0 * J);
        // covariant second derivative plus the curvature term
        const Vec3 Tn = (1.0 / norm(gp)) * gp;
        const Vec3 res = project_tangent(g, acc) + dot(J, gp) * gp + f.theta * f.theta * (J - dot(J, Tn) * Tn);
        CHECK(norm(res) < 1e-5 * (1.0 + norm(X) + norm(Y)));
      }
    }
  }

  TEST_CASE("coefficient derivatives match differences") {
    const auto f = frame_at(3);
    const auto bnd = make_jacobi_boundary(f, 0.7 * f.normal + 0.2 * f.e0, -0.4 * f.normal + 0.9 * f.e1);
    const double h = 1e-6;
    for (double a : {0.1, 0.5, 0.9}) {
      const auto p = jacobi_coefficients(bnd, a + h), m = jacobi_coefficients(bnd, a - h), c = jacobi_coefficients(bnd, a);
      CHECK(c.dJ1 == doctest::Approx((p.J1 - m.J1) / (2 * h)).epsilon(1e-6));
      CHECK(c.dJ2 == doctest::Approx((p.J2 - m.J2) / (2 * h)).epsilon(1e-6));
    }
  }

  TEST_CASE("normal derivative at the start point") {
    for (std::uint32_t i = 0; i < 10; ++i) {
      const auto f = frame_at(i);
      const double wx = 0.3 + 0.1 * i, wy = -0.5 + 0.07 * i;
      const auto bnd = make_jacobi_boundary(f, wx * f.normal, wy * f.normal);
      const double h = 1e-6;
      const Vec3 d = (1.0 / (2 * h)) * (jacobi_field(bnd, h) - jacobi_field(bnd, -h));
      CHECK(normal_jacobi_derivative(f, wx, wy) == doctest::Approx(dot(d, f.normal) / f.theta).epsilon(1e-7));
    }
  }

  TEST_CASE("non-tangent boundary data is rejected") {
    const auto f = frame_at(0);
    CHECK_THROWS_AS(make_jacobi_boundary(f, f.x, Vec3{0, 0, 0}), NonTangent);
  }

  TEST_CASE("frame sums (property over frames and degrees)") {
    for (std::uint32_t i = 0; i < 25; ++i) {
      const auto f = frame_at(i);
      for (int ell = 1; ell <= 5; ++ell) {
        const auto s = lemma52_sums(reg5(), ell, f);
        CHECK(s.s1 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.s2 == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.s3 == doctest::Approx(s.s3_closed).epsilon(1e-10).scale(1.0));
      }
    }
  }
}

TEST_SUITE("rotation") {
  TEST_CASE("closed forms depend only on the angle") {
    const KernelEvaluator ev(kSpec);
    for (std::uint32_t i = 0; i < 20; ++i) {
      const auto f = frame_at(i);
      CHECK(rotation_qv_rate(ev, kSpec.nu, f.theta) ==
            doctest::Approx(rotation_qv_rate_bruteforce(reg5(), kSpec, f)).epsilon(1e-10));
      CHECK(lemma53_value(ev, kSpec.nu, f.theta) ==
            doctest::Approx(lemma53_bruteforce(reg5(), kSpec, f)).epsilon(1e-9).scale(1.0));
      const auto cd = curvature_drift(reg5(), kSpec, f);
      CHECK(std::abs(cd.n_coef) <= kSpec.nu);
    }
  }

  TEST_CASE("rate is positive with a finite smooth limit") {
    const KernelEvaluator ev(kSpec);
    for (double rho = 0.01; rho < 3.1; rho += 0.1) CHECK(rotation_qv_rate(ev, kSpec.nu, rho) > 0.0);
    CHECK(rotation_qv_rate(ev, kSpec.nu, 1e-3) ==
          doctest::Approx(rotation_rate_smooth_limit(ev, kSpec.nu)).epsilon(1e-4));
  }

  TEST_CASE("drift tends to minus nu for close particles") {
    const KernelEvaluator ev(kSpec);
    double prev = INFINITY;
    for (double rho : {0.2, 0.1, 0.05, 0.02, 0.01}) {
      const double q = std::abs(lemma53_value(ev, kSpec.nu, rho) + kSpec.nu) / rho;
      CHECK(q < prev);
      prev = q;
    }
  }

  TEST_CASE("rough spectra: log-log slopes") {
    for (double a : {0.5, 1.0, 1.5}) {
      const auto fit = rough_asymptotic_fit(a, 1.0, 0.1, 20000, 2e-3, 2e-2, 8);
      CHECK(std::abs(fit.slope_rate - (a - 2.0)) < 0.1);
      CHECK(std::abs(fit.slope_drift - a) < 0.1);
    }
  }

  TEST_CASE("coincident and antipodal pairs are refused") {
    const KernelEvaluator ev(kSpec);
    CHECK_THROWS(reference_frame(std::numbers::pi));
    CHECK_THROWS_AS(rotation_qv_rate(ev, kSpec.nu, 0.0), DegenerateGeodesic);
    CHECK_THROWS_AS(rotation_qv_rate(ev, kSpec.nu, std::numbers::pi), DegenerateGeodesic);
  }

  TEST_CASE("short Monte Carlo run") {
    const FlowModel model(reg5(), kSpec);
    const KernelEvaluator ev(kSpec);
    RotationOptions o;
    o.replicas = 200;
    o.n_steps = 60;
    o.window = 30;
    const auto r = simulate_rotation(model, ev, o);
    CHECK(r.dominated_violations == 0);
    CHECK(r.windows.size() == 2);
    for (const auto& w : r.windows) CHECK(std::abs(w.z) < 4.0);
  }
}
