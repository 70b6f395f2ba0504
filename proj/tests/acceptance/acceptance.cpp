// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances, sample sizes and runtime limits are fixed here on purpose and do
// not read any configuration.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sphereflow/basis.hpp"
#include "sphereflow/distance.hpp"
#include "sphereflow/drift.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/flow_checks.hpp"
#include "sphereflow/jacobi.hpp"
#include "sphereflow/kernels.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/rotation.hpp"

using namespace sphereflow;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr std::uint32_t kPairStream = 0xacce0001u;
constexpr std::uint32_t kTangentStream = 0xacce0002u;
constexpr std::uint32_t kFrameStream = 0xacce0003u;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::vector<std::pair<Vec3, Vec3>> random_pairs(std::uint32_t n) {
  std::vector<std::pair<Vec3, Vec3>> p;
  for (std::uint32_t i = 0; i < n; ++i)
    p.emplace_back(uniform_sphere_point(kSeed, kPairStream, 2 * i), uniform_sphere_point(kSeed, kPairStream, 2 * i + 1));
  return p;
}

std::vector<GeodesicFrame> random_frames(std::uint32_t n) {
  std::vector<GeodesicFrame> f;
  for (std::uint32_t i = 0; f.size() < n; ++i) {
    try {
      f.push_back(geodesic_frame(uniform_sphere_point(kSeed, kFrameStream, 2 * i),
                                 uniform_sphere_point(kSeed, kFrameStream, 2 * i + 1), 1e-3));
    } catch (const DegenerateGeodesic&) {
    }
  }
  return f;
}

const SpectrumConfig kBase = SpectrumConfig::power_law(2, 5, 3.0, 1.0, 0.1);

Outcome basis_identities() {
  constexpr double kFdTol = 1e-5, kSumTol = 1e-7;
  const BasisRegistry reg(5);
  const auto pairs = random_pairs(50);
  double fd = 0.0, sums = 0.0;
  for (int ell = 1; ell <= 5; ++ell) {
    for (const auto& [x, y] : pairs) {
      fd = std::max(fd, norm(sum_gradient_identity(reg, ell, x)));
      const double t = dot(x, y), g = gamma_ell(2, ell, t), gp = gamma_ell_prime(2, ell, t);
      const auto s = spectral_pair_sums(reg, ell, x, y);
      sums = std::max({sums, std::abs(s.s_a - (2.0 * t * g - (1.0 - t * t) * gp)), std::abs(s.s_b - (1.0 - t * t)),
                       std::abs(s.s_c - 2.0 * (1.0 - t * t) * (1.0 - g))});
    }
  }
  return {fd <= kFdTol && sums <= kSumTol,
          "self-derivative " + num(fd) + " <= " + num(kFdTol) + ", pair sums " + num(sums) + " <= " + num(kSumTol)};
}

Outcome difference_kernels() {
  constexpr double kTol = 1e-6;
  const BasisRegistry reg(kBase.L_max);
  const KernelEvaluator ev(kBase);
  const auto b = kBase.coefficients();
  double err = 0.0;
  for (const auto& [x, y] : random_pairs(20)) {
    const double th = geodesic_distance(x, y);
    const auto s = spectral_difference_sums(reg, b, x, y);
    err = std::max({err, std::abs(s.g1 - ev.G1(th)), std::abs(s.g2 - ev.G2(th))});
  }
  const bool zero = ev.G1(0.0) == 0.0 && ev.G2(0.0) == 0.0;
  return {err <= kTol && zero, "max error " + num(err) + " <= " + num(kTol) + ", G1(0) = G2(0) = 0: " +
                                   (zero ? "yes" : "no")};
}

Outcome covariance() {
  constexpr double kTol = 1e-6, kEigTol = 1e-8;
  const BasisRegistry reg(kBase.L_max);
  const KernelEvaluator ev(kBase);
  const auto b = kBase.coefficients();
  const auto pairs = random_pairs(50);
  double err = 0.0;
  std::vector<Vec3> xs, us;
  for (std::uint32_t i = 0; i < pairs.size(); ++i) {
    const auto& [x, y] = pairs[i];
    const Vec3 u = project_tangent(x, uniform_sphere_point(kSeed, kTangentStream, 2 * i));
    const Vec3 v = project_tangent(y, uniform_sphere_point(kSeed, kTangentStream, 2 * i + 1));
    err = std::max(err, std::abs(ev.covariance(x, u, y, v) - spectral_covariance(reg, b, x, u, y, v)));
    xs.insert(xs.end(), {x, y});
    us.insert(us.end(), {u, v});
  }
  const double lmin = covariance_gram_min_eigenvalue(ev, xs, us);
  return {err <= kTol && lmin >= -kEigTol,
          "max error " + num(err) + " <= " + num(kTol) + ", Gram min eigenvalue " + num(lmin) + " >= " + num(-kEigTol)};
}

Outcome generator() {
  constexpr double kZ = 3.0;
  const BasisRegistry reg(5);
  const DriftField drift = DriftField::rigid_rotation(reg, Vec3{0.0, 0.0, 1.0});
  const FlowModel model(reg, kBase, &drift);
  const Vec3 x0 = SpherePoint<3>(Vec3{0.3, -0.2, 0.8}).coords();
  double worst = 0.0;
  std::string zs;
  for (int i = 0; i < 3; ++i) {
    const auto g = generator_check(model, coordinate_function(i), x0, 1e-3, 1000000, kSeed);
    worst = std::max(worst, std::abs(g.z));
    zs += (i ? ", " : "") + num(g.z);
  }
  return {worst <= kZ, "z = {" + zs + "}, |z| <= " + num(kZ)};
}

Outcome inverse_flow() {
  constexpr double kRatio = 1.3, kExact = 1e-10;
  constexpr int kLevels = 3;
  constexpr std::uint64_t kBaseSteps = 100;
  const BasisRegistry reg(5);
  const auto ens = FlowEnsemble::from_grid(sphere_product_grid(8, 16));
  const int top = 1 << (kLevels - 1);
  const double h = 4e-3 / top;
  const FlowModel model(reg, kBase);
  const NoiseRealization noise(kSeed, model.modes(), h);
  std::vector<double> res;
  for (int lev = 0; lev < kLevels; ++lev)
    res.push_back(inversion_residual(ens, model, noise, kBaseSteps << lev, top >> lev).sup);
  double ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < res.size(); ++i) ratio = std::min(ratio, res[i - 1] / res[i]);

  SpectrumConfig det = kBase;
  det.nu = 0.0;
  const DriftField rot = DriftField::rigid_rotation(reg, Vec3{0.0, 0.0, 1.0});
  const FlowModel rigid(reg, det, &rot);
  const double exact = inversion_residual(ens, rigid, noise, kBaseSteps * top, 1).sup;
  return {ratio >= kRatio && exact <= kExact, "residuals " + num(res[0]) + " > " + num(res[1]) + " > " + num(res[2]) +
                                                  ", min ratio " + num(ratio) + " >= " + num(kRatio) +
                                                  ", rotation " + num(exact) + " <= " + num(kExact)};
}

Outcome volume() {
  constexpr double kDtFactor = 5.0, kDt = 1e-3;
  const SpectrumConfig spec = SpectrumConfig::power_law(2, 8, 3.0, 1.0, 0.1);
  const BasisRegistry reg(8);
  const FlowModel model(reg, spec);
  auto e = FlowEnsemble::from_grid(sphere_product_grid(32, 64));
  const NoiseRealization noise(kSeed, model.modes(), kDt);
  SimulateOptions o;
  o.n_steps = 1000;
  o.save_every = 100;
  const FlowPath path = simulate_flow(e, model, noise, o);
  double quad = 0.0, worst = 0.0;
  for (double v : path.volume_error.front()) quad = std::max(quad, std::abs(v));
  for (const auto& row : path.volume_error)
    for (double v : row) worst = std::max(worst, std::abs(v));
  const double bound = quad + kDtFactor * kDt;
  return {worst <= bound, "max drift " + num(worst) + " <= quadrature " + num(quad) + " + 5 dt"};
}

Outcome galerkin() {
  constexpr double kSe = 2.0;
  const SpectrumConfig spec = SpectrumConfig::power_law(2, 16, 3.0, 1.0, 0.1);
  const BasisRegistry reg(16);
  const auto e = FlowEnsemble::from_grid(sphere_product_grid(8, 16));
  const auto rows = galerkin_convergence(reg, spec, nullptr, {2, 4, 8, 16}, e, 200, 5e-3, 16, 5);
  double excess = -std::numeric_limits<double>::infinity();
  std::string means;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    means += (i ? ", " : "") + num(rows[i].mean);
    if (i > 0) excess = std::max(excess, (rows[i].mean - rows[i - 1].mean) / std::hypot(rows[i].se, rows[i - 1].se));
  }
  return {excess <= kSe, "errors {" + means + "}, worst rise " + num(excess) + " SE <= " + num(kSe)};
}

Outcome distance_process() {
  constexpr double kZ = 3.0;
  const BasisRegistry reg(5);
  const FlowModel model(reg, kBase);
  const KernelEvaluator ev(kBase);
  const auto base = FlowEnsemble::from_grid(sphere_product_grid(4, 8));
  DistanceOptions o;
  o.n_steps = 20;
  o.dt = 1e-3;
  o.replicas = 10000;
  o.seed = kSeed;
  const auto r = verify_distance_sde(model, ev, rotation_pair(base, Vec3{0.2, 0.5, 1.0}, 0.2), o);
  const std::uint64_t violations =
      r.qv_bound_violations + r.const_bound_violations + r.b_violations + r.sandwich_violations;
  const bool ok = std::abs(r.drift.z) <= kZ && std::abs(r.qv_extrapolated.z) <= kZ && violations == 0;
  return {ok, "drift z " + num(r.drift.z) + ", qv z " + num(r.qv_extrapolated.z) + " (step dt: " + num(r.qv.z) +
                  ", dt/" + std::to_string(r.qv_refine) + ": " + num(r.qv_fine.z) + "), bound violations " +
                  std::to_string(violations) + " of " + std::to_string(r.bound_checks)};
}

Outcome frame_sums() {
  constexpr double kTol = 1e-7;
  const BasisRegistry reg(5);
  const auto frames = random_frames(100);
  double err = 0.0, ncoef = 0.0;
  for (const auto& f : frames) {
    for (int ell = 1; ell <= 5; ++ell) {
      const auto s = lemma52_sums(reg, ell, f);
      err = std::max({err, std::abs(s.s1 - 1.0), std::abs(s.s2 - 1.0), std::abs(s.s3 - s.s3_closed)});
    }
    ncoef = std::max(ncoef, std::abs(curvature_drift(reg, kBase, f).n_coef));
  }
  return {err <= kTol && ncoef <= kBase.nu,
          "frame sums " + num(err) + " <= " + num(kTol) + ", |N coefficient| " + num(ncoef) + " <= nu"};
}

Outcome rotation_drift() {
  constexpr double kTol = 1e-6;
  const BasisRegistry reg(5);
  const KernelEvaluator ev(kBase);
  const double nu = kBase.nu;
  double err = 0.0;
  for (double rho : {0.1, 0.5, 1.0, 2.0})
    err = std::max(err, std::abs(lemma53_value(ev, nu, rho) - lemma53_bruteforce(reg, kBase, reference_frame(rho))));
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::string ratios;
  for (double rho : {0.2, 0.1, 0.05, 0.02}) {
    const double q = std::abs(lemma53_value(ev, nu, rho) + nu) / rho;
    ratios += (ratios.empty() ? "" : ", ") + num(q);
    monotone = monotone && q < prev;
    prev = q;
  }
  return {err <= kTol && monotone, "closed vs brute force " + num(err) + " <= " + num(kTol) +
                                       ", |value + nu| / rho = {" + ratios + "} decreasing"};
}

Outcome rotation_qv() {
  constexpr double kTol = 1e-6, kZ = 3.0;
  const BasisRegistry reg(5);
  const KernelEvaluator ev(kBase);
  double err = 0.0;
  for (double rho : {0.1, 0.5, 1.0, 2.0})
    err = std::max(err, std::abs(rotation_qv_rate(ev, kBase.nu, rho) -
                                 rotation_qv_rate_bruteforce(reg, kBase, reference_frame(rho))));
  const FlowModel model(reg, kBase);
  double wz = 0.0;
  std::uint64_t dominated = 0;
  for (double rho0 : {0.5, 0.02}) {
    RotationOptions o;
    o.rho0 = rho0;
    o.dt = 1e-3;
    o.n_steps = 200;
    o.window = 50;
    o.replicas = 1000;
    o.seed = kSeed;
    const auto r = simulate_rotation(model, ev, o);
    for (const auto& w : r.windows) wz = std::max(wz, std::abs(w.z));
    dominated += r.dominated_violations;
  }
  return {err <= kTol && wz <= kZ && dominated == 0, "closed vs brute force " + num(err) + " <= " + num(kTol) +
                                                         ", worst window |z| " + num(wz) +
                                                         ", dominated violations " + std::to_string(dominated)};
}

Outcome rough_asymptotics() {
  constexpr double kTol = 0.1;
  double worst = 0.0;
  std::string slopes;
  for (double a : {0.5, 1.0, 1.5}) {
    const auto f = rough_asymptotic_fit(a, 1.0, 0.1, 20000, 2e-3, 2e-2, 8);
    worst = std::max({worst, std::abs(f.slope_rate - (a - 2.0)), std::abs(f.slope_drift - a)});
    slopes += (slopes.empty() ? "" : "; ") + ("alpha " + num(a) + ": " + num(f.slope_rate) + ", " + num(f.slope_drift));
  }
  return {worst <= kTol, "slopes {" + slopes + "}, worst deviation " + num(worst) + " <= " + num(kTol)};
}

struct Criterion {
  const char* id;
  const char* title;
  double max_seconds;  // infinity where no runtime limit applies
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  constexpr double kNoLimit = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> criteria = {
      {"C1", "eigenfield identities", 60.0, basis_identities},
      {"C2", "difference kernels", kNoLimit, difference_kernels},
      {"C3", "covariance kernel", kNoLimit, covariance},
      {"C4", "generator", 300.0, generator},
      {"C5", "inverse flow", kNoLimit, inverse_flow},
      {"C6", "volume preservation", kNoLimit, volume},
      {"C7", "Galerkin convergence", kNoLimit, galerkin},
      {"C8", "distance process", 900.0, distance_process},
      {"C9", "frame sums and curvature", kNoLimit, frame_sums},
      {"C10", "rotation drift", 120.0, rotation_drift},
      {"C11", "rotation quadratic variation", kNoLimit, rotation_qv},
      {"C12", "rough-spectrum asymptotics", kNoLimit, rough_asymptotics},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.max_seconds;
    const bool ok = o.passed && in_time;
    failed += ok ? 0 : 1;
    std::printf("%s %-4s %-30s %s [%.1fs%s]\n", ok ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
