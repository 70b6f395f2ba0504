#include "sphereflow/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

void CoupledState::refresh() {
  const std::size_t n = a.size();
  rho.resize(n);
  beta.resize(n);
  double g2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    rho[j] = geodesic_distance(a.positions[j], b.positions[j]);
    beta[j] = norm(a.positions[j] - b.positions[j]);
    g2 += a.weights[j] * beta[j] * beta[j];
  }
  gamma = std::sqrt(g2);
}

CoupledState make_coupled(const FlowEnsemble& base, const std::vector<Vec3>& images) {
  if (images.size() != base.size()) throw Error("make_coupled: image count differs from node count");
  CoupledState s;
  s.a = base;
  s.b = base;
  s.b.positions = images;
  s.refresh();
  return s;
}

CoupledState rotation_pair(const FlowEnsemble& base, const Vec3& axis, double delta) {
  const Vec3 ax = (1.0 / norm(axis)) * axis;
  std::vector<Vec3> img(base.size());
  for (std::size_t j = 0; j < base.size(); ++j) img[j] = rotate(ax, delta, base.positions[j]);
  return make_coupled(base, img);
}

CoupledState twist_pair(const FlowEnsemble& base, const Vec3& axis, double delta) {
  const Vec3 ax = (1.0 / norm(axis)) * axis;
  std::vector<Vec3> img(base.size());
  for (std::size_t j = 0; j < base.size(); ++j) {
    img[j] = rotate(ax, delta * dot(ax, base.positions[j]), base.positions[j]);
  }
  return make_coupled(base, img);
}

double rotation_l2_distance(double delta) { return std::sqrt(4.0 * (1.0 - std::cos(delta)) / 3.0); }

void advance_coupled(CoupledState& s, const FlowModel& model, std::span<const double> kappa, double dt) {
  const auto& ks = simd::active_kernels();
  heun_step(model.registry(), ks, kappa, s.a.positions, model.trust_region);
  heun_step(model.registry(), ks, kappa, s.b.positions, model.trust_region);
  s.a.t += dt;
  s.b.t += dt;
  s.refresh();
}

double sigma_sq(const CoupledState& s, const FlowModel& model) {
  if (!(s.gamma > 1e-14)) throw DegenerateDistance("sigma_sq: gamma vanishes");
  const BasisRegistry& reg = model.registry();
  const int M = model.modes();
  std::vector<Vec3> fa(M), fb(M);
  std::vector<double> inner(M, 0.0);
  const double g2 = s.gamma * s.gamma;
  for (std::size_t j = 0; j < s.a.size(); ++j) {
    reg.eval_all(s.a.positions[j], model.truncation(), fa);
    reg.eval_all(s.b.positions[j], model.truncation(), fb);
    const Vec3 diff = s.a.positions[j] - s.b.positions[j];
    for (int i = 0; i < M; ++i) inner[i] += s.a.weights[j] * dot(diff, fa[i] - fb[i]);
  }
  // amp_i^2 = (nu/c) d b_ell / D_ell
  double r = 0.0;
  for (int i = 0; i < M; ++i) {
    const double a = model.amplitudes()[i];
    r += a * a * inner[i] * inner[i];
  }
  return r / (g2 * g2);
}

namespace {

double g1_integral(const CoupledState& s, const KernelEvaluator& ev) {
  double r = 0.0;
  for (std::size_t j = 0; j < s.a.size(); ++j) r += s.a.weights[j] * ev.G1(s.rho[j]);
  return r;
}

double coupling_term(const CoupledState& s, const FlowModel& model, double t) {
  const DriftField* u = model.drift();
  if (!u || u->is_zero()) return 0.0;
  std::vector<double> coef(model.modes());
  u->coefficients(model.registry(), t, coef);
  std::vector<Vec3> fa(model.modes()), fb(model.modes());
  double r = 0.0;
  for (std::size_t j = 0; j < s.a.size(); ++j) {
    model.registry().eval_all(s.a.positions[j], model.truncation(), fa);
    model.registry().eval_all(s.b.positions[j], model.truncation(), fb);
    Vec3 du{0.0, 0.0, 0.0};
    for (int i = 0; i < model.modes(); ++i) du += coef[i] * (fa[i] - fb[i]);
    r += s.a.weights[j] * dot(s.a.positions[j] - s.b.positions[j], du);
  }
  return r / (s.gamma * s.gamma);
}

}  // namespace

double b_drift(const CoupledState& s, const FlowModel& model, const KernelEvaluator& ev) {
  const double sig2 = sigma_sq(s, model);
  const auto& sp = model.spectrum();
  return -sp.d * sp.nu + sp.nu / (2.0 * sp.c() * s.gamma * s.gamma) * g1_integral(s, ev) - 0.5 * sig2;
}

DistanceDiagnostics distance_diagnostics(const CoupledState& s, const FlowModel& model, const KernelEvaluator& ev,
                                         double C0, double t) {
  DistanceDiagnostics d;
  const auto& sp = model.spectrum();
  d.t = t;
  d.gamma = s.gamma;
  d.sigma2 = sigma_sq(s, model);
  d.g1_integral = g1_integral(s, ev);
  const double c = sp.c();
  d.qv_bound = sp.nu / (c * s.gamma * s.gamma) * d.g1_integral;
  d.b = -sp.d * sp.nu + 0.5 * d.qv_bound - 0.5 * d.sigma2;
  d.coupling = coupling_term(s, model, t);
  d.const_bound = C0 * sp.nu * std::numbers::pi * std::numbers::pi / (4.0 * c);
  return d;
}

namespace {

struct Acc {
  RunningStats drift, qv, qv_fine, qv_extrap, innov;
  std::uint64_t skipped = 0;
  std::uint64_t checks = 0, v_qv = 0, v_const = 0, v_b = 0, v_sandwich = 0;
  double min_b = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  std::vector<DistanceDiagnostics> sum;

  void merge(const Acc& o) {
    drift.merge(o.drift);
    qv.merge(o.qv);
    qv_fine.merge(o.qv_fine);
    qv_extrap.merge(o.qv_extrap);
    innov.merge(o.innov);
    skipped += o.skipped;
    checks += o.checks;
    v_qv += o.v_qv;
    v_const += o.v_const;
    v_b += o.v_b;
    v_sandwich += o.v_sandwich;
    min_b = std::min(min_b, o.min_b);
    max_ratio = std::max(max_ratio, o.max_ratio);
    if (sum.size() < o.sum.size()) sum.resize(o.sum.size());
    for (std::size_t i = 0; i < o.sum.size(); ++i) {
      auto& a = sum[i];
      const auto& b = o.sum[i];
      a.t = b.t;
      a.gamma += b.gamma;
      a.sigma2 += b.sigma2;
      a.b += b.b;
      a.coupling += b.coupling;
      a.g1_integral += b.g1_integral;
      a.qv_bound += b.qv_bound;
      a.const_bound = b.const_bound;
    }
  }

  void check(const CoupledState& s, const DistanceDiagnostics& d, double dnu) {
    ++checks;
    constexpr double rel = 1e-12;
    if (d.sigma2 > d.qv_bound * (1.0 + rel)) ++v_qv;
    if (d.qv_bound > d.const_bound * (1.0 + rel)) ++v_const;
    if (d.b < -dnu * (1.0 + rel)) ++v_b;
    min_b = std::min(min_b, d.b + dnu);
    if (d.qv_bound > 0.0) max_ratio = std::max(max_ratio, d.sigma2 / d.qv_bound);
    for (std::size_t j = 0; j < s.rho.size(); ++j) {
      if (s.beta[j] > s.rho[j] * (1.0 + rel) + 1e-15 ||
          s.rho[j] > std::numbers::pi / 2 * s.beta[j] * (1.0 + rel) + 1e-15) {
        ++v_sandwich;
      }
    }
  }
};

}  // namespace

DistanceReport verify_distance_sde(const FlowModel& model, const KernelEvaluator& ev, const CoupledState& initial,
                                   const DistanceOptions& opt) {
  const double C0 = opt.C0 > 0.0 ? opt.C0 : ev.g1_quadratic_constant();
  const double dnu = model.spectrum().d * model.spectrum().nu;
  const double dt = opt.dt;
  const int refine = 4;
  const double h = dt / refine;
  const Acc acc = blocked_reduce<Acc>(opt.replicas, 64, [&](std::size_t rb, std::size_t re, Acc& a) {
    a.sum.assign(opt.n_steps + 1, {});
    std::vector<double> dw(model.modes()), kappa(model.modes());
    CoupledState fine;
    for (std::size_t r = rb; r < re; ++r) {
      NoiseRealization noise(opt.seed, model.modes(), h, static_cast<std::uint32_t>(r));
      CoupledState s = initial;
      DistanceDiagnostics d = distance_diagnostics(s, model, ev, C0, 0.0);
      a.check(s, d, dnu);
      for (std::uint64_t i = 0; i < opt.n_steps; ++i) {
        auto& m = a.sum[i];
        m.t = d.t;
        m.gamma += d.gamma;
        m.sigma2 += d.sigma2;
        m.b += d.b;
        m.coupling += d.coupling;
        m.g1_integral += d.g1_integral;
        m.qv_bound += d.qv_bound;
        m.const_bound = d.const_bound;
        const double g0 = s.gamma;
        // Fine step of dt/refine from the same state, driven by the first
        // sub-increment of the coarse noise.
        fine = s;
        noise.increments(i * refine, 1, dw);
        model.step_coefficients(d.t, h, dw, kappa);
        advance_coupled(fine, model, kappa, h);
        const double xf = (fine.gamma - g0) / g0;
        const double pred_f = (d.b + d.coupling) * h;
        const double qf = (xf * xf - pred_f * pred_f) / h - d.sigma2;

        noise.increments(i, refine, dw);
        model.step_coefficients(d.t, dt, dw, kappa);
        advance_coupled(s, model, kappa, dt);
        const double x = (s.gamma - g0) / g0;
        const double pred = (d.b + d.coupling) * dt;
        const double qc = (x * x - pred * pred) / dt - d.sigma2;
        a.drift.add(x - pred);
        a.qv.add(qc);
        a.qv_fine.add(qf);
        a.qv_extrap.add((refine * qf - qc) / (refine - 1));
        if (d.sigma2 >= 1e-12) {
          a.innov.add((x - pred) / std::sqrt(d.sigma2 * dt));
        } else {
          ++a.skipped;
        }
        d = distance_diagnostics(s, model, ev, C0, static_cast<double>(i + 1) * dt);
        a.check(s, d, dnu);
      }
      auto& m = a.sum[opt.n_steps];
      m.t = d.t;
      m.gamma += d.gamma;
      m.sigma2 += d.sigma2;
      m.b += d.b;
      m.coupling += d.coupling;
      m.g1_integral += d.g1_integral;
      m.qv_bound += d.qv_bound;
      m.const_bound = d.const_bound;
    }
  });
  DistanceReport rep;
  rep.samples = acc.drift.n;
  rep.drift = {acc.drift.mean, acc.drift.stderr_mean(), z_score(acc.drift.mean, 0.0, acc.drift.stderr_mean())};
  rep.qv = {acc.qv.mean, acc.qv.stderr_mean(), z_score(acc.qv.mean, 0.0, acc.qv.stderr_mean())};
  rep.qv_fine = {acc.qv_fine.mean, acc.qv_fine.stderr_mean(), z_score(acc.qv_fine.mean, 0.0, acc.qv_fine.stderr_mean())};
  rep.qv_extrapolated = {acc.qv_extrap.mean, acc.qv_extrap.stderr_mean(),
                         z_score(acc.qv_extrap.mean, 0.0, acc.qv_extrap.stderr_mean())};
  rep.qv_refine = refine;
  rep.martingale = {acc.innov.mean, acc.innov.stderr_mean(), z_score(acc.innov.mean, 0.0, acc.innov.stderr_mean())};
  rep.martingale_skipped = acc.skipped;
  rep.bound_checks = acc.checks;
  rep.qv_bound_violations = acc.v_qv;
  rep.const_bound_violations = acc.v_const;
  rep.b_violations = acc.v_b;
  rep.sandwich_violations = acc.v_sandwich;
  rep.min_b_plus_dnu = acc.min_b;
  rep.max_sigma2_over_bound = acc.max_ratio;
  rep.mean_path = acc.sum;
  const double R = static_cast<double>(opt.replicas);
  for (auto& m : rep.mean_path) {
    m.gamma /= R;
    m.sigma2 /= R;
    m.b /= R;
    m.coupling /= R;
    m.g1_integral /= R;
    m.qv_bound /= R;
  }
  return rep;
}

}  // namespace sphereflow
