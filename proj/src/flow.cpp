#include "sphereflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

FlowModel::FlowModel(const BasisRegistry& reg, SpectrumConfig spec, const DriftField* drift, int truncation)
    : reg_(&reg), spec_(std::move(spec)), drift_(drift), trunc_(truncation > 0 ? truncation : reg.L_max()) {
  spec_.validate();
  if (spec_.d != 2) throw Unsupported("flow simulation is implemented on S^2 only");
  if (trunc_ > reg.L_max() || trunc_ > spec_.L_max) throw Unsupported("truncation beyond basis or spectrum L_max");
  const double c = spec_.c();
  const int M = reg.mode_count(trunc_);
  amp_.resize(M);
  for (int i = 0; i < M; ++i) {
    const int ell = reg.mode_at(i).ell;
    amp_[i] = std::sqrt(spec_.nu / c) * std::sqrt(spec_.d * spec_.b_ell(ell) / reg.dim_eigenspace(ell));
  }
}

void FlowModel::step_coefficients(double t, double dt, std::span<const double> dw, std::span<double> kappa) const {
  const std::size_t M = amp_.size();
  if (kappa.size() < M || dw.size() < M) throw Error("step_coefficients: span too small");
  if (drift_ && !drift_->is_zero()) {
    drift_->coefficients(*reg_, t, kappa.first(M));
    for (std::size_t i = 0; i < M; ++i) kappa[i] = kappa[i] * dt + amp_[i] * dw[i];
  } else {
    for (std::size_t i = 0; i < M; ++i) kappa[i] = amp_[i] * dw[i];
  }
}

NoiseRealization::NoiseRealization(std::uint64_t seed, int modes, double dt_fine, std::uint32_t replica,
                                   std::uint32_t stream)
    : seed_(seed), modes_(modes), dt_fine_(dt_fine), stream_(seed, replica, stream) {
  if (modes < 0 || !(dt_fine > 0.0)) throw ConfigError("NoiseRealization: invalid modes or dt");
}

void NoiseRealization::increments(std::uint64_t step, int factor, std::span<double> dw) const {
  const std::size_t M = std::min<std::size_t>(dw.size(), modes_);
  std::fill(dw.begin(), dw.end(), 0.0);
  thread_local std::vector<double> z;
  z.resize(modes_);
  const double s = std::sqrt(dt_fine_);
  for (int j = 0; j < factor; ++j) {
    stream_.fill(step * static_cast<std::uint64_t>(factor) + j, z);
    for (std::size_t i = 0; i < M; ++i) dw[i] += s * z[i];
  }
}

FlowEnsemble FlowEnsemble::from_grid(const SphereGrid& grid) {
  FlowEnsemble e;
  e.initial = grid.points;
  e.weights = grid.weights;
  e.positions = grid.points;
  return e;
}

FlowEnsemble FlowEnsemble::from_points(std::vector<Vec3> points) {
  FlowEnsemble e;
  e.weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
  e.initial = points;
  e.positions = std::move(points);
  return e;
}

void heun_step(const BasisRegistry& reg, const simd::KernelSet& ks, std::span<const double> kappa,
               std::span<Vec3> pos, double trust_region) {
  const std::size_t n = pos.size();
  thread_local std::vector<Vec3> v0, v1, pred;
  v0.resize(n);
  v1.resize(n);
  pred.resize(n);
  reg.synthesize(ks, kappa, pos, v0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(norm(v0[j]) <= trust_region)) throw StepTooLarge("predictor step exceeds trust region");
    pred[j] = exp_map(pos[j], v0[j]);
  }
  reg.synthesize(ks, kappa, pred, v1);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec3 v = project_tangent(pos[j], 0.5 * (v0[j] + v1[j]));
    if (!(norm(v) <= trust_region)) throw StepTooLarge("corrector step exceeds trust region");
    pos[j] = exp_map(pos[j], v);
  }
}

void step_flow(FlowEnsemble& e, const FlowModel& model, std::span<const double> kappa, double dt) {
  const auto& ks = simd::active_kernels();
  std::span<Vec3> all(e.positions);
  parallel_for(all.size(), [&](std::size_t b, std::size_t end) {
    heun_step(model.registry(), ks, kappa, all.subspan(b, end - b), model.trust_region);
  });
  e.t += dt;
}

std::vector<TestFunction> default_test_functions() {
  std::vector<TestFunction> f;
  for (int i = 0; i < 3; ++i) {
    f.push_back({"x" + std::to_string(i + 1) + "^2", [i](const Vec3& x) { return x[i] * x[i]; }, 1.0 / 3.0});
  }
  f.push_back({"x1*x2", [](const Vec3& x) { return x[0] * x[1]; }, 0.0});
  f.push_back({"x3", [](const Vec3& x) { return x[2]; }, 0.0});
  return f;
}

namespace {

std::vector<double> volume_errors(const FlowEnsemble& e, const std::vector<TestFunction>& fns) {
  std::vector<double> r;
  for (const auto& fn : fns) {
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) s += e.weights[j] * fn.f(e.positions[j]);
    r.push_back(s - fn.exact);
  }
  return r;
}

}  // namespace

FlowPath simulate_flow(FlowEnsemble& e, const FlowModel& model, const NoiseRealization& noise,
                       const SimulateOptions& opt, const std::vector<TestFunction>& fns) {
  if (opt.factor < 1 || opt.save_every < 1) throw ConfigError("simulate_flow: factor and save_every must be >= 1");
  if (noise.modes() < model.modes()) throw ConfigError("simulate_flow: noise has fewer modes than the model");
  const double dt = opt.factor * noise.dt_fine();
  FlowPath path;
  for (const auto& fn : fns) path.function_names.push_back(fn.name);
  auto save = [&] {
    path.times.push_back(e.t);
    if (opt.keep_frames) path.frames.push_back(e.positions);
    path.volume_error.push_back(volume_errors(e, fns));
  };
  save();
  std::vector<double> dw(model.modes()), kappa(model.modes());
  for (std::uint64_t i = 0; i < opt.n_steps; ++i) {
    noise.increments(i, opt.factor, dw);
    model.step_coefficients(e.t, dt, dw, kappa);
    step_flow(e, model, kappa, dt);
    if ((i + 1) % static_cast<std::uint64_t>(opt.save_every) == 0 || i + 1 == opt.n_steps) save();
  }
  return path;
}

namespace {

std::vector<Vec3> run(std::vector<Vec3> points, const FlowModel& model, const NoiseRealization& noise,
                      std::uint64_t n_steps, int factor, bool inverse) {
  FlowEnsemble e = FlowEnsemble::from_points(std::move(points));
  const double dt = factor * noise.dt_fine();
  std::vector<double> dw(model.modes()), kappa(model.modes());
  for (std::uint64_t j = 0; j < n_steps; ++j) {
    const std::uint64_t i = inverse ? n_steps - 1 - j : j;
    noise.increments(i, factor, dw);
    model.step_coefficients(static_cast<double>(i) * dt, dt, dw, kappa);
    if (inverse) {
      for (auto& k : kappa) k = -k;
    }
    step_flow(e, model, kappa, dt);
  }
  return e.positions;
}

}  // namespace

std::vector<Vec3> simulate_inverse_flow(std::vector<Vec3> points, const FlowModel& model,
                                        const NoiseRealization& noise, std::uint64_t n_steps, int factor) {
  return run(std::move(points), model, noise, n_steps, factor, true);
}

std::vector<Vec3> simulate_forward(std::vector<Vec3> points, const FlowModel& model, const NoiseRealization& noise,
                                   std::uint64_t n_steps, int factor) {
  return run(std::move(points), model, noise, n_steps, factor, false);
}

InversionResidual inversion_residual(const FlowEnsemble& e, const FlowModel& model, const NoiseRealization& noise,
                                     std::uint64_t n_steps, int factor, const std::vector<TestFunction>& fns) {
  InversionResidual r;
  const auto inv = simulate_inverse_flow(e.initial, model, noise, n_steps, factor);
  const auto back = simulate_forward(inv, model, noise, n_steps, factor);
  for (std::size_t j = 0; j < back.size(); ++j) r.sup = std::max(r.sup, geodesic_distance(back[j], e.initial[j]));
  FlowEnsemble round = e;
  round.positions = simulate_inverse_flow(simulate_forward(e.initial, model, noise, n_steps, factor), model, noise,
                                          n_steps, factor);
  r.weight_drift = volume_errors(round, fns);
  return r;
}

}  // namespace sphereflow
