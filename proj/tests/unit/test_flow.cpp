#include <doctest.h>

#include <cmath>
#include <vector>

#include "sphereflow/drift.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/flow_checks.hpp"
#include "sphereflow/parallel.hpp"
#include "sphereflow/simd/kernels.hpp"

using namespace sphereflow;

namespace {
const BasisRegistry& reg5() {
  static const BasisRegistry r(5);
  return r;
}
SpectrumConfig spec5(double nu = 0.1) { return SpectrumConfig::power_law(2, 5, 3.0, 1.0, nu); }
}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("amplitudes follow the spectrum and are shared by truncations") {
    const auto spec = spec5();
    const FlowModel full(reg5(), spec), trunc(reg5(), spec, nullptr, 3);
    CHECK(trunc.modes() == reg5().mode_count(3));
    for (int i = 0; i < full.modes(); ++i) {
      const int ell = reg5().mode_at(i).ell;
      const double expected = std::sqrt(spec.nu / spec.c() * 2.0 * spec.b_ell(ell) / (2 * ell + 1));
      CHECK(full.amplitudes()[i] == doctest::Approx(expected).epsilon(1e-15));
      if (i < trunc.modes()) CHECK(trunc.amplitudes()[i] == full.amplitudes()[i]);
    }
  }

  TEST_CASE("coarse noise increments are sums of fine ones") {
    const NoiseRealization n(9, 20, 1e-3, 4);
    std::vector<double> coarse(20), fine(20), sum(20, 0.0);
    n.increments(3, 4, coarse);
    for (int k = 0; k < 4; ++k) {
      n.increments(12 + k, 1, fine);
      for (int i = 0; i < 20; ++i) sum[i] += fine[i];
    }
    for (int i = 0; i < 20; ++i) CHECK(coarse[i] == doctest::Approx(sum[i]).epsilon(1e-14));
  }

  TEST_CASE("Heun step stays on the sphere and rejects oversized steps") {
    const FlowModel model(reg5(), spec5());
    auto e = FlowEnsemble::from_grid(sphere_product_grid(6, 12));
    std::vector<double> dw(model.modes()), kappa(model.modes());
    const NoiseRealization noise(1, model.modes(), 1e-2);
    for (std::uint64_t s = 0; s < 50; ++s) {
      noise.increments(s, 1, dw);
      model.step_coefficients(0.01 * s, 0.01, dw, kappa);
      step_flow(e, model, kappa, 0.01);
    }
    for (const auto& p : e.positions) CHECK(norm(p) == doctest::Approx(1.0).epsilon(1e-14));
    std::vector<double> big(model.modes(), 5.0);
    CHECK_THROWS_AS(step_flow(e, model, big, 0.01), StepTooLarge);
  }

  TEST_CASE("rigid rotation drift rotates points with second-order error") {
    const DriftField rot = DriftField::rigid_rotation(reg5(), Vec3{0.3, -0.2, 0.5});
    const FlowModel model(reg5(), spec5(0.0), &rot);
    const auto grid = sphere_product_grid(4, 8);
    const Vec3 w{0.3, -0.2, 0.5};
    auto max_error = [&](double dt, int steps) {
      const NoiseRealization noise(1, model.modes(), dt);
      const auto out = simulate_forward(grid.points, model, noise, steps);
      double e = 0.0;
      for (std::size_t j = 0; j < out.size(); ++j)
        e = std::max(e, norm(out[j] - rotate((1.0 / norm(w)) * w, 0.5 * norm(w), grid.points[j])));
      return e;
    };
    const double coarse = max_error(1e-3, 500);
    const double fine = max_error(5e-4, 1000);
    CHECK(coarse < 1e-7);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
  }

  TEST_CASE("drift field CSV round trip and evaluation") {
    DriftField f = DriftField::rigid_rotation(reg5(), Vec3{0.1, 0.2, 0.3});
    const DriftField g = DriftField::from_csv(f.to_csv());
    CHECK(g.n_modes() == f.n_modes());
    const Vec3 x{0.6, 0.0, 0.8};
    CHECK(norm(g.eval(reg5(), 0.0, x) - f.eval(reg5(), 0.0, x)) == 0.0);
    CHECK(norm(f.eval(reg5(), 0.0, x) - cross(Vec3{0.1, 0.2, 0.3}, x)) < 1e-14);
    CHECK(DriftField::zero(reg5()).is_zero());
  }

  TEST_CASE("results do not depend on the worker count") {
    const FlowModel model(reg5(), spec5());
    const NoiseRealization noise(4, model.modes(), 1e-3);
    SimulateOptions o;
    o.n_steps = 100;
    o.save_every = 50;
    std::vector<std::vector<Vec3>> runs;
    for (int w : {1, 3, 8}) {
      set_worker_count(w);
      auto e = FlowEnsemble::from_grid(sphere_product_grid(10, 20));
      simulate_flow(e, model, noise, o);
      runs.push_back(e.positions);
    }
    set_worker_count(1);
    const auto g1 = generator_check(model, coordinate_function(0), Vec3{0, 0, 1}, 1e-3, 20000, 5);
    set_worker_count(5);
    const auto g5 = generator_check(model, coordinate_function(0), Vec3{0, 0, 1}, 1e-3, 20000, 5);
    set_worker_count(0);
    CHECK(runs[0] == runs[1]);
    CHECK(runs[0] == runs[2]);
    CHECK(g1.empirical == g5.empirical);
    CHECK(g1.se == g5.se);
  }

  TEST_CASE("scalar and vector kernels give the same trajectories") {
    if (simd::detected_level() != simd::Level::avx2) return;
    const FlowModel model(reg5(), spec5());
    const NoiseRealization noise(4, model.modes(), 1e-3);
    SimulateOptions o;
    o.n_steps = 200;
    std::vector<std::vector<Vec3>> runs;
    for (auto lv : {simd::Level::scalar, simd::Level::avx2}) {
      simd::force_level(lv);
      auto e = FlowEnsemble::from_grid(sphere_product_grid(6, 12));
      simulate_flow(e, model, noise, o);
      runs.push_back(e.positions);
    }
    simd::force_level(std::nullopt);
    CHECK(runs[0] == runs[1]);
  }

  TEST_CASE("test-function integrals are conserved") {
    const FlowModel model(reg5(), spec5());
    const NoiseRealization noise(2, model.modes(), 1e-3);
    auto e = FlowEnsemble::from_grid(sphere_product_grid(16, 32));
    SimulateOptions o;
    o.n_steps = 300;
    o.save_every = 100;
    const auto p = simulate_flow(e, model, noise, o);
    for (const auto& row : p.volume_error)
      for (double v : row) CHECK(std::abs(v) < 5e-3);
  }

  TEST_CASE("inverse flow undoes a deterministic rotation") {
    const DriftField rot = DriftField::rigid_rotation(reg5(), Vec3{0.0, 0.0, 1.0});
    const FlowModel model(reg5(), spec5(0.0), &rot);
    const NoiseRealization noise(3, model.modes(), 1e-3);
    const auto r = inversion_residual(FlowEnsemble::from_grid(sphere_product_grid(8, 16)), model, noise, 500);
    CHECK(r.sup < 1e-10);
    for (double v : r.weight_drift) CHECK(std::abs(v) < 1e-10);
  }

  TEST_CASE("stochastic inversion residual shrinks with dt") {
    const FlowModel model(reg5(), spec5());
    const NoiseRealization noise(3, model.modes(), 1e-3);
    const auto ens = FlowEnsemble::from_grid(sphere_product_grid(6, 12));
    const double r4 = inversion_residual(ens, model, noise, 50, 4).sup;
    const double r2 = inversion_residual(ens, model, noise, 100, 2).sup;
    const double r1 = inversion_residual(ens, model, noise, 200, 1).sup;
    CHECK(r4 / r2 > 1.3);
    CHECK(r2 / r1 > 1.3);
  }

  TEST_CASE("generator of the coordinate functions") {
    const DriftField rot = DriftField::rigid_rotation(reg5(), Vec3{0.3, -0.2, 0.5});
    const FlowModel model(reg5(), spec5(), &rot);
    const Vec3 x = S2Point(Vec3{0.3, -0.2, 0.8}).coords();
    for (int i = 0; i < 3; ++i) {
      const auto g = generator_check(model, coordinate_function(i), x, 1e-3, 100000, 21);
      CHECK(g.analytic == doctest::Approx(-2 * 0.1 * x[i] + cross(Vec3{0.3, -0.2, 0.5}, x)[i]));
      CHECK(std::abs(g.z) < 4.0);
    }
  }

  TEST_CASE("harmonic test functions have the stated Laplacians") {
    const Vec3 x = S2Point(Vec3{0.1, 0.7, -0.4}).coords();
    const double h = 1e-4;
    for (const auto& f : {constant_function(), coordinate_function(1), quadratic_function(0, 2), quadratic_function(1, 1)}) {
      // Laplace-Beltrami via second differences along two orthogonal geodesics
      const Vec3 e1 = S2Point(project_tangent(x, Vec3{1, 0, 0})).coords();
      const Vec3 e2 = cross(x, e1);
      double lap = 0.0;
      for (const Vec3& e : {e1, e2}) lap += (f.f(exp_map(x, h * e)) + f.f(exp_map(x, -h * e)) - 2 * f.f(x)) / (h * h);
      CHECK(f.laplacian(x) == doctest::Approx(lap).epsilon(1e-5).scale(1.0));
    }
  }

  TEST_CASE("Galerkin errors shrink with the truncation") {
    const BasisRegistry reg(8);
    const auto rows = galerkin_convergence(reg, SpectrumConfig::power_law(2, 8, 3.0, 1.0, 0.1), nullptr, {2, 4, 8},
                                           FlowEnsemble::from_grid(sphere_product_grid(6, 12)), 100, 5e-3, 8, 3);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mean > rows[1].mean);
    CHECK(rows[2].mean == 0.0);
  }
}
