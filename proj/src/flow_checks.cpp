#include "sphereflow/flow_checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sphereflow/errors.hpp"
#include "sphereflow/parallel.hpp"

namespace sphereflow {

namespace {

constexpr std::size_t kBlock = 4096;

Vec3 unit(int i) {
  Vec3 e{0.0, 0.0, 0.0};
  e[i] = 1.0;
  return e;
}

// One Heun step of a single particle with its own Brownian increment.
Vec3 one_step(const FlowModel& model, const simd::KernelSet& ks, const Vec3& x, double dt, std::uint64_t seed,
              std::uint32_t replica, std::vector<double>& dw, std::vector<double>& kappa) {
  NoiseRealization noise(seed, model.modes(), dt, replica);
  noise.increments(0, 1, dw);
  model.step_coefficients(0.0, dt, dw, kappa);
  Vec3 p = x;
  heun_step(model.registry(), ks, kappa, std::span<Vec3>(&p, 1), model.trust_region);
  return p;
}

struct Stats3 {
  RunningStats a, b, ab;
  void merge(const Stats3& o) {
    a.merge(o.a);
    b.merge(o.b);
    ab.merge(o.ab);
  }
};

struct StatsVec {
  std::vector<RunningStats> s;
  void merge(const StatsVec& o) {
    if (s.size() < o.s.size()) s.resize(o.s.size());
    for (std::size_t i = 0; i < o.s.size(); ++i) s[i].merge(o.s[i]);
  }
};

}  // namespace

HarmonicTest constant_function() {
  return {"1", [](const Vec3&) { return 1.0; }, [](const Vec3&) { return Vec3{0.0, 0.0, 0.0}; },
          [](const Vec3&) { return 0.0; }};
}

HarmonicTest coordinate_function(int i) {
  return {"x" + std::to_string(i + 1), [i](const Vec3& x) { return x[i]; },
          [i](const Vec3& x) { return project_tangent(x, unit(i)); }, [i](const Vec3& x) { return -2.0 * x[i]; }};
}

HarmonicTest quadratic_function(int i, int j) {
  // Delta(x_i x_j) = -6 x_i x_j + 2 delta_ij on S^2.
  return {"x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1), [i, j](const Vec3& x) { return x[i] * x[j]; },
          [i, j](const Vec3& x) { return project_tangent(x, x[j] * unit(i) + x[i] * unit(j)); },
          [i, j](const Vec3& x) { return -6.0 * x[i] * x[j] + (i == j ? 2.0 : 0.0); }};
}

GeneratorCheck generator_check(const FlowModel& model, const HarmonicTest& f, const Vec3& x, double dt,
                               std::uint64_t n_samples, std::uint64_t seed) {
  const auto& ks = simd::active_kernels();
  const double fx = f.f(x);
  const RunningStats st = blocked_reduce<RunningStats>(n_samples, kBlock, [&](std::size_t b, std::size_t e,
                                                                               RunningStats& acc) {
    std::vector<double> dw(model.modes()), kappa(model.modes());
    for (std::size_t s = b; s < e; ++s) {
      const Vec3 p = one_step(model, ks, x, dt, seed, static_cast<std::uint32_t>(s), dw, kappa);
      acc.add((f.f(p) - fx) / dt);
    }
  });
  GeneratorCheck r;
  r.empirical = st.mean;
  r.se = st.stderr_mean();
  Vec3 u{0.0, 0.0, 0.0};
  if (model.drift()) u = model.drift()->eval(model.registry(), 0.0, x);
  r.analytic = model.spectrum().nu * f.laplacian(x) + dot(u, f.grad(x));
  r.z = z_score(r.empirical, r.analytic, r.se);
  return r;
}

CovarianceCheck increment_covariance(const FlowModel& model, const Vec3& x, const Vec3& u, const Vec3& y,
                                     const Vec3& v, double dt, std::uint64_t n_samples, std::uint64_t seed) {
  const auto& ks = simd::active_kernels();
  const Stats3 st = blocked_reduce<Stats3>(n_samples, kBlock, [&](std::size_t b, std::size_t e, Stats3& acc) {
    std::vector<double> dw(model.modes()), kappa(model.modes());
    for (std::size_t s = b; s < e; ++s) {
      NoiseRealization noise(seed, model.modes(), dt, static_cast<std::uint32_t>(s));
      noise.increments(0, 1, dw);
      model.step_coefficients(0.0, dt, dw, kappa);
      std::array<Vec3, 2> p{x, y};
      heun_step(model.registry(), ks, kappa, p, model.trust_region);
      const double a = dot(p[0] - x, u), c = dot(p[1] - y, v);
      acc.a.add(a);
      acc.b.add(c);
      acc.ab.add(a * c);
    }
  });
  CovarianceCheck r;
  r.empirical = st.ab.mean - st.a.mean * st.b.mean;
  r.se = st.ab.stderr_mean();
  SpectrumConfig sp = model.spectrum();
  sp.L_max = model.truncation();
  if (sp.law == SpectrumConfig::Law::explicit_list) sp.coeffs.resize(sp.L_max);
  const KernelEvaluator ev(sp);
  r.predicted = dt * model.spectrum().nu / model.spectrum().c() * ev.covariance(x, u, y, v);
  r.z = z_score(r.empirical, r.predicted, r.se);
  return r;
}

std::vector<std::vector<double>> one_point_distances(const FlowModel& model, const std::vector<Vec3>& bases,
                                                     std::uint64_t n_steps, double dt, std::uint64_t n_samples,
                                                     std::uint64_t seed) {
  const auto& ks = simd::active_kernels();
  std::vector<std::vector<double>> out(bases.size(), std::vector<double>(n_samples));
  for (std::size_t q = 0; q < bases.size(); ++q) {
    parallel_for(n_samples, [&](std::size_t b, std::size_t e) {
      std::vector<double> dw(model.modes()), kappa(model.modes());
      for (std::size_t s = b; s < e; ++s) {
        const auto replica = static_cast<std::uint32_t>(q * n_samples + s);
        NoiseRealization noise(seed, model.modes(), dt, replica);
        Vec3 p = bases[q];
        for (std::uint64_t i = 0; i < n_steps; ++i) {
          noise.increments(i, 1, dw);
          model.step_coefficients(static_cast<double>(i) * dt, dt, dw, kappa);
          heun_step(model.registry(), ks, kappa, std::span<Vec3>(&p, 1), model.trust_region);
        }
        out[q][s] = geodesic_distance(bases[q], p);
      }
    });
  }
  return out;
}

TestResult isotropy_ks(const FlowModel& model, const std::vector<Vec3>& bases, std::uint64_t n_steps, double dt,
                       std::uint64_t n_samples, std::uint64_t seed) {
  const auto d = one_point_distances(model, bases, n_steps, dt, n_samples, seed);
  TestResult worst;
  worst.p_value = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      const TestResult r = ks_two_sample(d[i], d[j]);
      if (r.p_value <= worst.p_value) worst = r;
    }
  }
  return worst;
}

TestResult uniformity_chi2(const FlowModel& model, std::uint64_t n_particles, std::uint64_t n_steps, double dt,
                           int bands, int sectors, std::uint64_t seed) {
  const auto& ks = simd::active_kernels();
  const int cells = bands * sectors;
  std::vector<int> cell(n_particles);
  parallel_for(n_particles, [&](std::size_t b, std::size_t e) {
    std::vector<double> dw(model.modes()), kappa(model.modes());
    for (std::size_t s = b; s < e; ++s) {
      const auto replica = static_cast<std::uint32_t>(s);
      // Uniform start from a separate stream of the same replica.
      Vec3 p = uniform_sphere_point(seed, 0xfffffffeu, replica);
      NoiseRealization noise(seed, model.modes(), dt, replica);
      for (std::uint64_t i = 0; i < n_steps; ++i) {
        noise.increments(i, 1, dw);
        model.step_coefficients(static_cast<double>(i) * dt, dt, dw, kappa);
        heun_step(model.registry(), ks, kappa, std::span<Vec3>(&p, 1), model.trust_region);
      }
      const int bi = std::min(bands - 1, static_cast<int>((p[2] + 1.0) * 0.5 * bands));
      double lon = std::atan2(p[1], p[0]);
      if (lon < 0.0) lon += 2.0 * std::numbers::pi;
      const int si = std::min(sectors - 1, static_cast<int>(lon / (2.0 * std::numbers::pi) * sectors));
      cell[s] = bi * sectors + si;
    }
  });
  std::vector<double> obs(cells, 0.0), expct(cells, static_cast<double>(n_particles) / cells);
  for (int c : cell) obs[c] += 1.0;
  return chi_square(obs, expct);
}

StrongConvergence strong_self_convergence(const FlowModel& model, const std::vector<Vec3>& points,
                                          std::uint64_t n_steps_coarse, double dt_coarse, int levels,
                                          std::uint64_t replicas, std::uint64_t seed) {
  if (levels < 2) throw ConfigError("strong_self_convergence: need at least two levels");
  const int fine_factor = 1 << levels;
  const double dt_fine = dt_coarse / fine_factor;
  const StatsVec st = blocked_reduce<StatsVec>(replicas, 1, [&](std::size_t b, std::size_t e, StatsVec& acc) {
    acc.s.resize(levels);
    for (std::size_t r = b; r < e; ++r) {
      NoiseRealization noise(seed, model.modes(), dt_fine, static_cast<std::uint32_t>(r));
      const auto ref = simulate_forward(points, model, noise, n_steps_coarse * fine_factor, 1);
      for (int k = 0; k < levels; ++k) {
        const int factor = fine_factor >> k;
        const auto run = simulate_forward(points, model, noise, n_steps_coarse << k, factor);
        double s = 0.0;
        for (std::size_t j = 0; j < points.size(); ++j) {
          const double dd = geodesic_distance(run[j], ref[j]);
          s += dd * dd;
        }
        acc.s[k].add(s / static_cast<double>(points.size()));
      }
    }
  });
  StrongConvergence out;
  std::vector<double> lx, ly;
  for (int k = 0; k < levels; ++k) {
    out.dt.push_back(dt_coarse / (1 << k));
    out.rms_error.push_back(std::sqrt(st.s[k].mean));
    lx.push_back(std::log(out.dt.back()));
    ly.push_back(std::log(out.rms_error.back()));
  }
  out.order = linear_fit(lx, ly).slope;
  return out;
}

std::vector<GalerkinRow> galerkin_convergence(const BasisRegistry& reg, const SpectrumConfig& spec,
                                              const DriftField* drift, const std::vector<int>& truncations,
                                              const FlowEnsemble& ensemble, std::uint64_t n_steps, double dt,
                                              std::uint64_t replicas, std::uint64_t seed) {
  if (truncations.empty() || !std::is_sorted(truncations.begin(), truncations.end())) {
    throw ConfigError("galerkin_convergence: truncations must be increasing");
  }
  std::vector<FlowModel> models;
  for (int n : truncations) models.emplace_back(reg, spec, drift, n);
  const std::size_t T = truncations.size();
  const FlowModel& top = models.back();
  const auto& ks = simd::active_kernels();
  const StatsVec st = blocked_reduce<StatsVec>(replicas, 1, [&](std::size_t b, std::size_t e, StatsVec& acc) {
    acc.s.resize(T);
    std::vector<double> dw(top.modes()), kappa(top.modes());
    for (std::size_t r = b; r < e; ++r) {
      NoiseRealization noise(seed, top.modes(), dt, static_cast<std::uint32_t>(r));
      std::vector<std::vector<Vec3>> pos(T, ensemble.initial);
      std::vector<std::vector<double>> sup(T, std::vector<double>(ensemble.initial.size(), 0.0));
      for (std::uint64_t i = 0; i < n_steps; ++i) {
        noise.increments(i, 1, dw);
        for (std::size_t q = 0; q < T; ++q) {
          const int M = models[q].modes();
          models[q].step_coefficients(static_cast<double>(i) * dt, dt, std::span<const double>(dw).first(M),
                                      std::span<double>(kappa).first(M));
          heun_step(reg, ks, std::span<const double>(kappa).first(M), pos[q], models[q].trust_region);
        }
        for (std::size_t q = 0; q + 1 < T; ++q) {
          for (std::size_t j = 0; j < pos[q].size(); ++j) {
            const double dd = geodesic_distance(pos[q][j], pos[T - 1][j]);
            sup[q][j] = std::max(sup[q][j], dd * dd);
          }
        }
      }
      for (std::size_t q = 0; q < T; ++q) {
        double s = 0.0;
        for (std::size_t j = 0; j < sup[q].size(); ++j) s += ensemble.weights[j] * sup[q][j];
        acc.s[q].add(s);
      }
    }
  });
  std::vector<GalerkinRow> rows;
  for (std::size_t q = 0; q < T; ++q) rows.push_back({truncations[q], st.s[q].mean, st.s[q].stderr_mean()});
  return rows;
}

}  // namespace sphereflow
