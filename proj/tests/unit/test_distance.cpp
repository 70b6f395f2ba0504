#include <doctest.h>

#include <cmath>
#include <vector>

#include "sphereflow/distance.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

using namespace sphereflow;

namespace {
struct Setup {
  BasisRegistry reg{4};
  SpectrumConfig spec = SpectrumConfig::power_law(2, 4, 3.0, 1.0, 0.1);
  FlowModel model{reg, spec};
  KernelEvaluator ev{spec};
  FlowEnsemble base = FlowEnsemble::from_grid(sphere_product_grid(4, 8));
};
const Setup& setup() {
  static const Setup s;
  return s;
}
const Vec3 kAxis{0.2, 0.5, 1.0};

// Moves every node of both ensembles a distance eps along mode i.
double gamma_after_push(const CoupledState& s, const BasisRegistry& reg, int i, double eps) {
  std::vector<Vec3> a = s.a.positions, b = s.b.positions;
  const auto idx = reg.mode_at(i);
  for (auto& p : a) p = exp_map(p, eps * reg.eval(idx, p));
  for (auto& p : b) p = exp_map(p, eps * reg.eval(idx, p));
  double g2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) g2 += s.a.weights[j] * dot(a[j] - b[j], a[j] - b[j]);
  return std::sqrt(g2);
}
}  // namespace

TEST_SUITE("distance") {
  TEST_CASE("rotation pairs have the exact L2 distance") {
    for (double d : {0.05, 0.2, 1.0}) {
      const auto s = rotation_pair(setup().base, kAxis, d);
      CHECK(s.gamma == doctest::Approx(rotation_l2_distance(d)).epsilon(1e-13));
    }
  }

  TEST_CASE("rigid pairs carry no martingale part") {
    const auto s = rotation_pair(setup().base, kAxis, 0.2);
    CHECK(sigma_sq(s, setup().model) < 1e-25);
    CHECK(sigma_sq(twist_pair(setup().base, kAxis, 1.0), setup().model) > 1e-6);
  }

  TEST_CASE("sigma squared equals the squared first-order response to each mode") {
    const auto& S = setup();
    const auto s = twist_pair(S.base, kAxis, 1.0);
    const double h = 1e-6;
    double fd = 0.0;
    for (int i = 0; i < S.model.modes(); ++i) {
      const double dg = (gamma_after_push(s, S.reg, i, h) - gamma_after_push(s, S.reg, i, -h)) / (2 * h);
      const double ci = S.model.amplitudes()[i] * dg / s.gamma;
      fd += ci * ci;
    }
    CHECK(sigma_sq(s, S.model) == doctest::Approx(fd).epsilon(1e-6));
  }

  TEST_CASE("bound chain and drift lower bound on a family of pairs") {
    const auto& S = setup();
    const double C0 = S.ev.g1_quadratic_constant();
    for (double d : {0.05, 0.2, 1.0, 2.5}) {
      for (const auto& s : {rotation_pair(S.base, kAxis, d), twist_pair(S.base, kAxis, d)}) {
        const auto diag = distance_diagnostics(s, S.model, S.ev, C0, 0.0);
        CHECK(diag.sigma2 <= diag.qv_bound * (1 + 1e-12));
        CHECK(diag.qv_bound <= diag.const_bound * (1 + 1e-12));
        CHECK(diag.b >= -2 * S.spec.nu);
        CHECK(diag.b == doctest::Approx(b_drift(s, S.model, S.ev)));
      }
    }
  }

  TEST_CASE("identical flows are rejected") {
    const auto& S = setup();
    const auto s = make_coupled(S.base, S.base.positions);
    CHECK(s.gamma == 0.0);
    CHECK_THROWS_AS(sigma_sq(s, S.model), DegenerateDistance);
  }

  TEST_CASE("coupled advance keeps both ensembles on the nodes' flow") {
    const auto& S = setup();
    auto s = twist_pair(S.base, kAxis, 0.5);
    std::vector<double> dw(S.model.modes()), kappa(S.model.modes());
    const NoiseRealization noise(3, S.model.modes(), 1e-3);
    FlowEnsemble a = s.a;
    for (std::uint64_t i = 0; i < 10; ++i) {
      noise.increments(i, 1, dw);
      S.model.step_coefficients(i * 1e-3, 1e-3, dw, kappa);
      advance_coupled(s, S.model, kappa, 1e-3);
      step_flow(a, S.model, kappa, 1e-3);
    }
    CHECK(s.a.positions == a.positions);
    double g2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) g2 += s.a.weights[j] * dot(s.a.positions[j] - s.b.positions[j], s.a.positions[j] - s.b.positions[j]);
    CHECK(s.gamma == doctest::Approx(std::sqrt(g2)).epsilon(1e-14));
  }

  TEST_CASE("regression report is reproducible across worker counts") {
    const auto& S = setup();
    DistanceOptions o;
    o.replicas = 300;
    o.n_steps = 5;
    set_worker_count(1);
    const auto r1 = verify_distance_sde(S.model, S.ev, twist_pair(S.base, kAxis, 1.0), o);
    set_worker_count(4);
    const auto r4 = verify_distance_sde(S.model, S.ev, twist_pair(S.base, kAxis, 1.0), o);
    set_worker_count(0);
    CHECK(r1.drift.mean == r4.drift.mean);
    CHECK(r1.qv_extrapolated.mean == r4.qv_extrapolated.mean);
    CHECK(r1.mean_path.back().gamma == r4.mean_path.back().gamma);
    CHECK(r1.qv_bound_violations + r1.const_bound_violations + r1.b_violations + r1.sandwich_violations == 0);
    CHECK(std::abs(r1.drift.z) < 4.0);
  }
}
