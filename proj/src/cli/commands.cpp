#include "sphereflow/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <limits>
#include <memory>
#include <sstream>

#include "sphereflow/basis.hpp"
#include "sphereflow/distance.hpp"
#include "sphereflow/drift.hpp"
#include "sphereflow/errors.hpp"
#include "sphereflow/flow.hpp"
#include "sphereflow/flow_checks.hpp"
#include "sphereflow/io.hpp"
#include "sphereflow/jacobi.hpp"
#include "sphereflow/kernel_table.hpp"
#include "sphereflow/rng.hpp"
#include "sphereflow/rotation.hpp"

namespace sphereflow::cli {

namespace {

// Random streams of the identity suites; fixed so that suites do not shift
// each other's samples when toggled.
constexpr std::uint32_t kPairStream = 0x51000001u;
constexpr std::uint32_t kFrameStream = 0x51000002u;
constexpr std::uint32_t kTangentStream = 0x51000003u;

struct Context {
  const RunConfig& cfg;
  const SuiteSelection& sel;
  CommandOutcome out;

  bool suite(const std::string& name) {
    if (sel.enabled(name)) return true;
    out.manifest.skipped_suites.push_back(name);
    return false;
  }

  void check(const std::string& suite, const std::string& name, double measured, double tol,
             const std::string& relation) {
    bool ok = false;
    if (relation == "<=") ok = measured <= tol;
    else if (relation == ">=") ok = measured >= tol;
    else if (relation == "|z|<=") ok = std::abs(measured) <= tol;
    out.manifest.checks.push_back({suite, name, ok && std::isfinite(measured), measured, tol, relation});
  }

  void artifact(const std::string& path, std::string content) { out.artifacts[path] = std::move(content); }
};

std::string fmt(double x) { return format_double(x); }

Vec3 random_point(std::uint64_t seed, std::uint32_t stream, std::uint32_t i) {
  return uniform_sphere_point(seed, stream, i);
}

std::unique_ptr<DriftField> make_drift(const RunConfig& cfg, const BasisRegistry& reg) {
  if (cfg.drift.kind == "rotation") return std::make_unique<DriftField>(DriftField::rigid_rotation(reg, cfg.drift.omega));
  if (cfg.drift.kind == "file") return std::make_unique<DriftField>(DriftField::from_csv(read_file(cfg.drift.path)));
  return nullptr;
}

std::uint64_t steps_for(double T, double dt) {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(T / dt)));
}

// Frames at random pairs, avoiding the cut tolerance.
std::vector<GeodesicFrame> random_frames(const RunConfig& cfg, std::uint64_t n) {
  std::vector<GeodesicFrame> frames;
  for (std::uint32_t i = 0; frames.size() < n; ++i) {
    const Vec3 x = random_point(cfg.seed, kFrameStream, 2 * i), y = random_point(cfg.seed, kFrameStream, 2 * i + 1);
    try {
      frames.push_back(geodesic_frame(x, y, std::max(cfg.rotation.eps_cut, 1e-3)));
    } catch (const DegenerateGeodesic&) {
    }
  }
  return frames;
}

// ---------------------------------------------------------------- kernels

void cmd_kernels(Context& c) {
  const auto& cfg = c.cfg;
  KernelEvaluator ev(cfg.spectrum);
  const auto grid = kernel_theta_grid(cfg.kernels.theta_uniform, cfg.kernels.theta_log, cfg.kernels.theta_log_min);
  const KernelTable table = build_kernel_table(ev, grid);
  std::string csv = table.to_csv();

  if (c.suite("table")) {
    const KernelTable back = KernelTable::from_csv(csv);
    double diff = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      diff = std::max({diff, std::abs(back.G[i] - table.G[i]), std::abs(back.G1[i] - table.G1[i]),
                       std::abs(back.G2[i] - table.G2[i])});
    }
    c.check("table", "csv_round_trip", diff, 0.0, "<=");
    double disc = 0.0;
    for (double th : grid) {
      if (th > 1e-3 && th < 3.14) disc = std::max(disc, ev.phi_psi(th).discrepancy);
    }
    c.check("table", "phi_psi_relations", disc, cfg.tolerance("phi_psi"), "<=");
  }

  std::ostringstream rep;
  rep << "quantity,value\n";
  rep << "c," << fmt(ev.c()) << "\n";
  rep << "G0," << fmt(ev.G0()) << "\n";
  rep << "tail_bound," << fmt(cfg.spectrum.tail_bound()) << "\n";
  if (c.suite("positivity")) {
    double worst = 0.0;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double gap = ev.G0() - table.G[i];
      if (gap < 0.0) ++violations;
      worst = std::min(worst, gap);
    }
    rep << "min_G0_minus_G," << fmt(worst) << "\n";
    c.check("positivity", "G0_minus_G_violations", static_cast<double>(violations), 0.0, "<=");
  }
  if (c.suite("asymptotics")) {
    const double g1z = std::abs(ev.G1(0.0)), g2z = std::abs(ev.G2(0.0));
    const double C0 = ev.g1_quadratic_constant();
    const double C = ev.regularity_constant();
    rep << "G1_at_0," << fmt(g1z) << "\nG2_at_0," << fmt(g2z) << "\n";
    rep << "C0_sup_G1_over_theta2," << fmt(C0) << "\n";
    rep << "C_sup_abs_dG_over_theta," << fmt(C) << "\n";
    rep << "G_second_at_0," << fmt(ev.G_second_at_zero()) << "\n";
    c.check("asymptotics", "G1_G2_at_zero", std::max(g1z, g2z), 0.0, "<=");
    c.check("asymptotics", "C0_finite", std::isfinite(C0) ? 1.0 : 0.0, 1.0, ">=");
    c.check("asymptotics", "regularity_constant_finite", std::isfinite(C) ? 1.0 : 0.0, 1.0, ">=");
  }
  c.artifact("kernels.csv", std::move(csv));
  c.artifact("kernel_report.csv", rep.str());
}

// ------------------------------------------------------------- identities

void cmd_identities(Context& c) {
  const auto& cfg = c.cfg;
  const auto& spec = cfg.spectrum;
  if (spec.d != 2) throw Unsupported("identities: the eigenfield basis is implemented for d = 2");
  BasisRegistry reg(spec.L_max);
  KernelEvaluator ev(spec);
  const double nu = spec.nu;
  const auto b = spec.coefficients();
  std::ostringstream rows;
  rows << "suite,case,measured,tolerance,passed\n";
  auto row = [&](const std::string& suite, const std::string& name, double v, double tol) {
    rows << suite << ',' << name << ',' << fmt(v) << ',' << fmt(tol) << ',' << (v <= tol ? 1 : 0) << "\n";
  };

  std::vector<std::pair<Vec3, Vec3>> pairs;
  for (std::uint32_t i = 0; i < cfg.samples.pairs; ++i)
    pairs.emplace_back(random_point(cfg.seed, kPairStream, 2 * i), random_point(cfg.seed, kPairStream, 2 * i + 1));

  if (c.suite("eigenfield_sums")) {
    const double tfd = cfg.tolerance("eigenfield_fd"), ts = cfg.tolerance("eigenfield_sums");
    double fd = 0.0, sums = 0.0;
    for (int ell = 1; ell <= spec.L_max; ++ell) {
      double fd_l = 0.0, s_l = 0.0;
      for (const auto& [x, y] : pairs) {
        fd_l = std::max(fd_l, norm(sum_gradient_identity(reg, ell, x)));
        const double t = dot(x, y), g = gamma_ell(2, ell, t), gp = gamma_ell_prime(2, ell, t);
        const auto ps = spectral_pair_sums(reg, ell, x, y);
        s_l = std::max({s_l, std::abs(ps.s_a - (2.0 * t * g - (1.0 - t * t) * gp)), std::abs(ps.s_b - (1.0 - t * t)),
                        std::abs(ps.s_c - 2.0 * (1.0 - t * t) * (1.0 - g))});
      }
      row("eigenfield_sums", "fd_ell" + std::to_string(ell), fd_l, tfd);
      row("eigenfield_sums", "sums_ell" + std::to_string(ell), s_l, ts);
      fd = std::max(fd, fd_l);
      sums = std::max(sums, s_l);
    }
    c.check("eigenfield_sums", "sum_self_derivative", fd, tfd, "<=");
    c.check("eigenfield_sums", "pair_sums", sums, ts, "<=");
  }

  if (c.suite("difference_sums")) {
    const double tol = cfg.tolerance("difference_sums");
    double err = 0.0;
    for (const auto& [x, y] : pairs) {
      const double th = geodesic_distance(x, y);
      const auto s = spectral_difference_sums(reg, b, x, y);
      err = std::max({err, std::abs(s.g1 - ev.G1(th)), std::abs(s.g2 - ev.G2(th))});
    }
    row("difference_sums", "max_abs", err, tol);
    c.check("difference_sums", "closed_vs_spectral", err, tol, "<=");
    c.check("difference_sums", "vanish_at_zero", std::max(std::abs(ev.G1(0.0)), std::abs(ev.G2(0.0))), 0.0, "<=");
  }

  if (c.suite("covariance")) {
    const double tol = cfg.tolerance("covariance");
    double err = 0.0;
    std::vector<Vec3> xs, us;
    for (std::uint32_t i = 0; i < pairs.size(); ++i) {
      const auto& [x, y] = pairs[i];
      const Vec3 u = project_tangent(x, random_point(cfg.seed, kTangentStream, 2 * i));
      const Vec3 v = project_tangent(y, random_point(cfg.seed, kTangentStream, 2 * i + 1));
      err = std::max(err, std::abs(ev.covariance(x, u, y, v) - spectral_covariance(reg, b, x, u, y, v)));
      xs.push_back(x);
      us.push_back(u);
      xs.push_back(y);
      us.push_back(v);
    }
    const double lmin = covariance_gram_min_eigenvalue(ev, xs, us);
    row("covariance", "max_abs", err, tol);
    row("covariance", "gram_min_eigenvalue_neg", -lmin, cfg.tolerance("gram_min_eigenvalue"));
    c.check("covariance", "closed_vs_spectral", err, tol, "<=");
    c.check("covariance", "gram_min_eigenvalue", lmin, -cfg.tolerance("gram_min_eigenvalue"), ">=");
  }

  const auto frames = random_frames(cfg, cfg.samples.frames);
  if (c.suite("frame_sums")) {
    const double tol = cfg.tolerance("frame_sums");
    double err = 0.0;
    for (int ell = 1; ell <= spec.L_max; ++ell) {
      double e = 0.0;
      for (const auto& f : frames) {
        const auto s = lemma52_sums(reg, ell, f);
        e = std::max({e, std::abs(s.s1 - 1.0), std::abs(s.s2 - 1.0), std::abs(s.s3 - s.s3_closed)});
      }
      row("frame_sums", "ell" + std::to_string(ell), e, tol);
      err = std::max(err, e);
    }
    c.check("frame_sums", "sums", err, tol, "<=");
  }

  if (c.suite("curvature")) {
    const double factor = cfg.tolerance("curvature_n_over_nu");
    double worst = 0.0;
    for (const auto& f : frames) worst = std::max(worst, std::abs(curvature_drift(reg, spec, f).n_coef));
    row("curvature", "max_abs_n_coefficient", worst, factor * nu);
    c.check("curvature", "n_coefficient_bound", worst, factor * nu, "<=");
  }

  const double rhos[] = {0.1, 0.5, 1.0, 2.0};
  if (c.suite("rotation_drift")) {
    const double tol = cfg.tolerance("rotation_drift");
    double err = 0.0;
    for (double rho : rhos) {
      const double e = std::abs(lemma53_value(ev, nu, rho) - lemma53_bruteforce(reg, spec, reference_frame(rho)));
      row("rotation_drift", "rho" + fmt(rho), e, tol);
      err = std::max(err, e);
    }
    c.check("rotation_drift", "closed_vs_bruteforce", err, tol, "<=");
    double prev = std::numeric_limits<double>::infinity();
    int increases = 0;
    for (double rho : {0.2, 0.1, 0.05, 0.02}) {
      const double q = std::abs(lemma53_value(ev, nu, rho) + nu) / rho;
      row("rotation_drift", "small_rho_ratio_" + fmt(rho), q, prev);
      if (!(q < prev)) ++increases;
      prev = q;
    }
    c.check("rotation_drift", "small_rho_monotone", increases, 0.0, "<=");
  }

  if (c.suite("rotation_rate")) {
    const double tol = cfg.tolerance("rotation_rate");
    double err = 0.0;
    for (double rho : rhos) {
      const double e =
          std::abs(rotation_qv_rate(ev, nu, rho) - rotation_qv_rate_bruteforce(reg, spec, reference_frame(rho)));
      row("rotation_rate", "rho" + fmt(rho), e, tol);
      err = std::max(err, e);
    }
    c.check("rotation_rate", "closed_vs_bruteforce", err, tol, "<=");
  }
  c.artifact("identities.csv", rows.str());
}

// --------------------------------------------------------------- simulate

void cmd_simulate(Context& c) {
  const auto& cfg = c.cfg;
  const auto& spec = cfg.spectrum;
  const double dt = cfg.integrator.dt;
  BasisRegistry reg(spec.L_max);
  const auto drift = make_drift(cfg, reg);
  FlowModel model(reg, spec, drift.get());
  model.trust_region = cfg.integrator.trust_region;
  if (drift) c.artifact("drift.csv", drift->to_csv());

  if (c.suite("volume")) {
    auto e = FlowEnsemble::from_grid(sphere_product_grid(cfg.simulate.grid_polar, cfg.simulate.grid_azimuth));
    NoiseRealization noise(cfg.seed, model.modes(), dt);
    SimulateOptions o;
    o.n_steps = steps_for(cfg.integrator.T, dt);
    o.save_every = cfg.simulate.save_every;
    o.keep_frames = cfg.simulate.write_frames;
    const FlowPath path = simulate_flow(e, model, noise, o);
    double quad = 0.0, worst = 0.0;
    for (double v : path.volume_error.front()) quad = std::max(quad, std::abs(v));
    std::ostringstream os;
    os << "t";
    for (const auto& n : path.function_names) os << ',' << n;
    os << "\n";
    for (std::size_t s = 0; s < path.times.size(); ++s) {
      os << fmt(path.times[s]);
      for (double v : path.volume_error[s]) {
        os << ',' << fmt(v);
        worst = std::max(worst, std::abs(v));
      }
      os << "\n";
    }
    c.artifact("volume.csv", os.str());
    if (cfg.simulate.write_frames) {
      std::ostringstream fr;
      nlohmann::ordered_json h = {{"seed", cfg.seed}, {"dt", dt}, {"particles", e.size()}};
      fr << "# " << h.dump() << "\nt,particle,x,y,z\n";
      for (std::size_t s = 0; s < path.frames.size(); ++s) {
        for (std::size_t j = 0; j < path.frames[s].size(); ++j) {
          const Vec3& p = path.frames[s][j];
          fr << fmt(path.times[s]) << ',' << j << ',' << fmt(p[0]) << ',' << fmt(p[1]) << ',' << fmt(p[2]) << "\n";
        }
      }
      c.artifact("frames.csv", fr.str());
    }
    c.check("volume", "integral_drift", worst, quad + cfg.tolerance("volume_dt_factor") * dt, "<=");
  }

  const Vec3 x0 = SpherePoint<3>(cfg.simulate.generator_point).coords();
  if (c.suite("generator")) {
    std::ostringstream os;
    os << "function,empirical,analytic,se,z\n";
    for (int i = 0; i < 3; ++i) {
      const auto f = coordinate_function(i);
      const auto g = generator_check(model, f, x0, dt, cfg.samples.generator, cfg.seed);
      os << f.name << ',' << fmt(g.empirical) << ',' << fmt(g.analytic) << ',' << fmt(g.se) << ',' << fmt(g.z) << "\n";
      c.check("generator", f.name, g.z, cfg.tolerance("z"), "|z|<=");
    }
    c.artifact("generator.csv", os.str());
  }

  if (c.suite("covariance")) {
    const Vec3 y = SpherePoint<3>(x0 + Vec3{0.3, 0.4, -0.2}).coords();
    const Vec3 u = project_tangent(x0, Vec3{1.0, 0.0, 0.0}), v = project_tangent(y, Vec3{0.0, 1.0, 0.5});
    const auto r = increment_covariance(model, x0, u, y, v, dt, std::max<std::uint64_t>(cfg.samples.generator / 10, 1000),
                                        cfg.seed);
    c.check("covariance", "two_point_increment", r.z, cfg.tolerance("z"), "|z|<=");
  }

  if (c.suite("isotropy")) {
    const std::vector<Vec3> bases = {Vec3{0.0, 0.0, 1.0}, SpherePoint<3>(Vec3{1.0, 0.0, 0.2}).coords(),
                                     SpherePoint<3>(Vec3{-0.3, 0.8, -0.5}).coords()};
    const auto r = isotropy_ks(model, bases, steps_for(0.1, dt), dt, 2000, cfg.seed);
    c.check("isotropy", "one_point_ks_min_p", r.p_value, cfg.tolerance("p_value"), ">=");
  }

  if (c.suite("uniformity")) {
    const auto r = uniformity_chi2(model, 20000, steps_for(0.1, dt), dt, 6, 8, cfg.seed);
    c.check("uniformity", "chi2_p", r.p_value, cfg.tolerance("p_value"), ">=");
  }

  if (c.suite("galerkin")) {
    std::vector<int> ns;
    for (int n : cfg.simulate.galerkin_truncations) {
      if (n <= spec.L_max) ns.push_back(n);
    }
    if (ns.size() >= 2) {
      auto e = FlowEnsemble::from_grid(sphere_product_grid(8, 16));
      const auto rows = galerkin_convergence(reg, spec, drift.get(), ns, e, cfg.simulate.galerkin_steps,
                                             cfg.simulate.galerkin_dt, cfg.samples.galerkin_replicas, cfg.seed);
      std::ostringstream os;
      os << "n,mean_sup_sq_error,se\n";
      double excess = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        os << rows[i].n << ',' << fmt(rows[i].mean) << ',' << fmt(rows[i].se) << "\n";
        if (i > 0) {
          const double s = std::hypot(rows[i].se, rows[i - 1].se);
          const double rise = rows[i].mean - rows[i - 1].mean;
          excess = std::max(excess, s > 0.0 ? rise / s : (rise > 0.0 ? INFINITY : 0.0));
        }
      }
      c.artifact("galerkin.csv", os.str());
      c.check("galerkin", "nonincreasing_in_se", excess, cfg.tolerance("galerkin_se"), "<=");
    } else {
      c.out.manifest.skipped_suites.push_back("galerkin");
    }
  }
}

// ---------------------------------------------------------------- inverse

void cmd_inverse(Context& c) {
  const auto& cfg = c.cfg;
  const auto& spec = cfg.spectrum;
  BasisRegistry reg(spec.L_max);
  const auto drift = make_drift(cfg, reg);
  const auto ens = FlowEnsemble::from_grid(sphere_product_grid(cfg.inverse.grid_polar, cfg.inverse.grid_azimuth));
  const int L = cfg.inverse.levels;
  const int top = 1 << (L - 1);
  const double h = cfg.inverse.base_dt / top;

  std::ostringstream os;
  os << "case,dt,steps,residual\n";
  if (c.suite("convergence") && spec.nu > 0.0) {
    FlowModel model(reg, spec, drift.get());
    model.trust_region = cfg.integrator.trust_region;
    NoiseRealization noise(cfg.seed, model.modes(), h);
    std::vector<double> res;
    for (int lev = 0; lev < L; ++lev) {
      const int factor = top >> lev;
      const std::uint64_t steps = cfg.inverse.base_steps << lev;
      const auto r = inversion_residual(ens, model, noise, steps, factor);
      os << "stochastic," << fmt(h * factor) << ',' << steps << ',' << fmt(r.sup) << "\n";
      res.push_back(r.sup);
    }
    double worst = INFINITY;
    for (std::size_t i = 1; i < res.size(); ++i) worst = std::min(worst, res[i - 1] / res[i]);
    c.check("convergence", "min_halving_ratio", worst, cfg.tolerance("inverse_ratio"), ">=");
  } else if (spec.nu == 0.0) {
    c.out.manifest.skipped_suites.push_back("convergence");
  }
  if (c.suite("exact")) {
    // nu = 0 with a rigid rotation drift: the flow is a rotation and the
    // inverse must undo it to integrator precision.
    SpectrumConfig det = spec;
    det.nu = 0.0;
    const Vec3 omega = cfg.drift.kind == "rotation" ? cfg.drift.omega : Vec3{0.0, 0.0, 1.0};
    const DriftField rot = DriftField::rigid_rotation(reg, omega);
    FlowModel model(reg, det, &rot);
    model.trust_region = cfg.integrator.trust_region;
    NoiseRealization noise(cfg.seed, model.modes(), h);
    const auto r = inversion_residual(ens, model, noise, cfg.inverse.base_steps * top, 1);
    os << "deterministic_rotation," << fmt(h) << ',' << cfg.inverse.base_steps * top << ',' << fmt(r.sup) << "\n";
    c.check("exact", "deterministic_rotation", r.sup, cfg.tolerance("inverse_exact"), "<=");
  }
  c.artifact("inverse.csv", os.str());
}

// --------------------------------------------------------------- distance

void cmd_distance(Context& c) {
  const auto& cfg = c.cfg;
  const auto& spec = cfg.spectrum;
  BasisRegistry reg(spec.L_max);
  const auto drift = make_drift(cfg, reg);
  FlowModel model(reg, spec, drift.get());
  model.trust_region = cfg.integrator.trust_region;
  KernelEvaluator ev(spec);
  const auto base = FlowEnsemble::from_grid(sphere_product_grid(cfg.distance.grid_polar, cfg.distance.grid_azimuth));
  const CoupledState st = cfg.distance.pair == "twist" ? twist_pair(base, cfg.distance.axis, cfg.distance.delta)
                                                       : rotation_pair(base, cfg.distance.axis, cfg.distance.delta);
  DistanceOptions o;
  o.n_steps = cfg.distance.n_steps;
  o.dt = cfg.integrator.dt;
  o.replicas = cfg.samples.distance_replicas;
  o.seed = cfg.seed;
  const DistanceReport r = verify_distance_sde(model, ev, st, o);

  std::ostringstream path;
  path << "t,gamma,sigma2,b,coupling,g1_integral,qv_bound,const_bound\n";
  for (const auto& d : r.mean_path) {
    path << fmt(d.t) << ',' << fmt(d.gamma) << ',' << fmt(d.sigma2) << ',' << fmt(d.b) << ',' << fmt(d.coupling)
         << ',' << fmt(d.g1_integral) << ',' << fmt(d.qv_bound) << ',' << fmt(d.const_bound) << "\n";
  }
  c.artifact("distance_path.csv", path.str());
  std::ostringstream rep;
  rep << "statistic,mean,se,z\n";
  auto line = [&](const char* n, const MomentCheck& m) {
    rep << n << ',' << fmt(m.mean) << ',' << fmt(m.se) << ',' << fmt(m.z) << "\n";
  };
  line("drift", r.drift);
  line("qv_dt", r.qv);
  line("qv_dt_over_refine", r.qv_fine);
  line("qv_extrapolated", r.qv_extrapolated);
  line("martingale", r.martingale);
  c.artifact("distance_report.csv", rep.str());

  const double z = cfg.tolerance("z");
  if (c.suite("drift")) c.check("drift", "drift_z", r.drift.z, z, "|z|<=");
  if (c.suite("qv")) c.check("qv", "qv_extrapolated_z", r.qv_extrapolated.z, z, "|z|<=");
  if (c.suite("martingale")) c.check("martingale", "innovation_mean_z", r.martingale.z, z, "|z|<=");
  if (c.suite("bounds")) {
    c.check("bounds", "sigma2_le_g1_bound", static_cast<double>(r.qv_bound_violations), 0.0, "<=");
    c.check("bounds", "g1_bound_le_constant", static_cast<double>(r.const_bound_violations), 0.0, "<=");
    c.check("bounds", "b_ge_minus_d_nu", static_cast<double>(r.b_violations), 0.0, "<=");
    c.check("bounds", "distance_sandwich", static_cast<double>(r.sandwich_violations), 0.0, "<=");
  }
}

// --------------------------------------------------------------- rotation

void cmd_rotation(Context& c) {
  const auto& cfg = c.cfg;
  const auto& spec = cfg.spectrum;
  BasisRegistry reg(spec.L_max);
  const auto drift = make_drift(cfg, reg);
  FlowModel model(reg, spec, drift.get());
  model.trust_region = cfg.integrator.trust_region;
  KernelEvaluator ev(spec);
  const double z = cfg.tolerance("z");

  if (c.suite("rate")) {
    std::ostringstream os;
    os << "rho,closed_form,bruteforce\n";
    double err = 0.0;
    for (double rho : {0.1, 0.5, 1.0, 2.0}) {
      const double a = rotation_qv_rate(ev, spec.nu, rho);
      const double bf = rotation_qv_rate_bruteforce(reg, spec, reference_frame(rho));
      os << fmt(rho) << ',' << fmt(a) << ',' << fmt(bf) << "\n";
      err = std::max(err, std::abs(a - bf));
    }
    c.artifact("rotation_rate.csv", os.str());
    c.check("rate", "closed_vs_bruteforce", err, cfg.tolerance("rotation_rate"), "<=");
  }

  const bool mc = c.suite("monte_carlo");
  const bool dom = c.suite("dominated");
  if (mc || dom) {
    std::ostringstream os;
    os << "rho0,t_begin,t_end,replicas,empirical,predicted,se,z,de_e_mean,de_e_se,de_e_z\n";
    for (double rho0 : cfg.rotation.rho0) {
      RotationOptions o;
      o.rho0 = rho0;
      o.dt = cfg.integrator.dt;
      o.n_steps = cfg.rotation.n_steps;
      o.window = cfg.rotation.window;
      o.replicas = cfg.samples.rotation_replicas;
      o.seed = cfg.seed;
      o.eps_cut = cfg.rotation.eps_cut;
      const RotationReport r = simulate_rotation(model, ev, o);
      double wz = 0.0, ez = 0.0;
      for (const auto& w : r.windows) {
        os << fmt(rho0) << ',' << fmt(w.t_begin) << ',' << fmt(w.t_end) << ',' << w.replicas << ','
           << fmt(w.empirical) << ',' << fmt(w.predicted) << ',' << fmt(w.se) << ',' << fmt(w.z) << ','
           << fmt(w.de_e_mean) << ',' << fmt(w.de_e_se) << ',' << fmt(w.de_e_z) << "\n";
        if (std::abs(w.z) > std::abs(wz)) wz = w.z;
        if (std::abs(w.de_e_z) > std::abs(ez)) ez = w.de_e_z;
      }
      const std::string tag = "rho0_" + fmt(rho0);
      if (mc) {
        c.check("monte_carlo", tag + "_window_qv_worst_z", wz, z, "|z|<=");
        c.check("monte_carlo", tag + "_de_e_worst_z", ez, z, "|z|<=");
      }
      if (dom) c.check("dominated", tag + "_violations", static_cast<double>(r.dominated_violations), 0.0, "<=");
    }
    c.artifact("rotation_windows.csv", os.str());
  }

  if (c.suite("asymptotics")) {
    std::ostringstream os;
    os << "alpha,slope_rate,expected_rate,slope_drift,expected_drift,K,K_gap,prefactor_ratio\n";
    const double tol = cfg.tolerance("slope");
    for (double a : cfg.rotation.fit_alphas) {
      const auto f = rough_asymptotic_fit(a, spec.b, spec.nu, cfg.rotation.fit_L, cfg.rotation.fit_rho_min,
                                  cfg.rotation.fit_rho_max, cfg.rotation.fit_points);
      os << fmt(a) << ',' << fmt(f.slope_rate) << ',' << fmt(a - 2.0) << ',' << fmt(f.slope_drift) << ',' << fmt(a) << ','
         << fmt(f.K) << ',' << fmt(f.K_gap) << ',' << fmt(f.prefactor_ratio) << "\n";
      c.check("asymptotics", "alpha_" + fmt(a) + "_rate_slope", std::abs(f.slope_rate - (a - 2.0)), tol, "<=");
      c.check("asymptotics", "alpha_" + fmt(a) + "_drift_slope", std::abs(f.slope_drift - a), tol, "<=");
    }
    c.artifact("rotation_asymptotics.csv", os.str());
  }
}

using Handler = void (*)(Context&);

const std::map<std::string, std::pair<Handler, std::vector<std::string>>>& registry() {
  static const std::map<std::string, std::pair<Handler, std::vector<std::string>>> r = {
      {"kernels", {cmd_kernels, {"table", "positivity", "asymptotics"}}},
      {"identities",
       {cmd_identities, {"eigenfield_sums", "difference_sums", "covariance", "frame_sums", "curvature", "rotation_drift", "rotation_rate"}}},
      {"simulate", {cmd_simulate, {"volume", "generator", "covariance", "isotropy", "uniformity", "galerkin"}}},
      {"inverse", {cmd_inverse, {"convergence", "exact"}}},
      {"distance", {cmd_distance, {"drift", "qv", "martingale", "bounds"}}},
      {"rotation", {cmd_rotation, {"rate", "monte_carlo", "dominated", "asymptotics"}}},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n = {"kernels", "identities", "simulate", "inverse", "distance", "rotation"};
  return n;
}

const std::vector<std::string>& command_suites(const std::string& command) {
  auto it = registry().find(command);
  if (it == registry().end()) throw ConfigError("unknown command '" + command + "'");
  return it->second.second;
}

bool SuiteSelection::enabled(const std::string& suite) const {
  if (disabled.contains(suite)) return false;
  return only.empty() || only.contains(suite);
}

CommandOutcome execute(const std::string& command, const RunConfig& cfg, const SuiteSelection& sel) {
  const auto& suites = command_suites(command);
  for (const auto* set : {&sel.only, &sel.disabled}) {
    for (const auto& s : *set) {
      if (std::find(suites.begin(), suites.end(), s) == suites.end())
        throw ConfigError("command '" + command + "' has no check suite '" + s + "'");
    }
  }
  if (!cfg.experiment.empty() && cfg.experiment != command)
    throw ConfigError("config is for '" + cfg.experiment + "', not '" + command + "'");
  cfg.validate();
  Context c{cfg, sel, {}};
  auto& m = c.out.manifest;
  m.command = command;
  m.version = code_version();
  m.seed = cfg.seed;
  m.config_hash = config_hash(cfg);
  m.started = utc_timestamp();
  registry().at(command).first(c);
  m.finished = utc_timestamp();
  for (const auto& [path, content] : c.out.artifacts) m.artifacts.push_back({path, git_blob_id(content), content.size()});
  return c.out;
}

int run_command(const std::string& command, const RunConfig& cfg, const SuiteSelection& sel, std::ostream& log) {
  const CommandOutcome out = execute(command, cfg, sel);
  const std::filesystem::path dir(cfg.output_dir);
  for (const auto& [path, content] : out.artifacts) atomic_write((dir / path).string(), content);
  atomic_write((dir / "manifest.json").string(), out.manifest.to_json());
  for (const auto& ch : out.manifest.checks) {
    log << (ch.passed ? "PASS " : "FAIL ") << ch.suite << '/' << ch.name << "  measured=" << fmt(ch.measured) << ' '
        << ch.relation << ' ' << fmt(ch.tolerance) << "\n";
  }
  if (!out.manifest.all_passed()) {
    log << failure_report(out.manifest) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sphereflow::cli
