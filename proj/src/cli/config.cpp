#include "sphereflow/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "sphereflow/errors.hpp"
#include "sphereflow/io.hpp"

namespace sphereflow::cli {

using nlohmann::ordered_json;

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t = {
      {"eigenfield_fd", 1e-5},        // sum of nabla_A A, finite differences
      {"eigenfield_sums", 1e-7},      // pair sums vs closed forms
      {"difference_sums", 1e-6},      // G1, G2 vs spectral sums
      {"covariance", 1e-6},           // covariance vs spectral sum
      {"gram_min_eigenvalue", 1e-8},  // Gram matrix >= -tol
      {"frame_sums", 1e-7},
      {"curvature_n_over_nu", 1.0},   // |N coefficient| <= factor * nu
      {"rotation_drift", 1e-6},
      {"rotation_rate", 1e-6},
      {"phi_psi", 1e-8},              // series vs G relations
      {"z", 3.0},                     // all Monte Carlo z-scores
      {"inverse_ratio", 1.3},         // residual(dt) / residual(dt/2)
      {"inverse_exact", 1e-10},       // deterministic inverse residual
      {"volume_dt_factor", 5.0},      // integral drift <= quadrature error + factor * dt
      {"galerkin_se", 2.0},
      {"slope", 0.1},
      {"p_value", 1e-3},              // goodness-of-fit tests reject below this
  };
  return t;
}

double RunConfig::tolerance(const std::string& name) const {
  if (auto it = tolerances.find(name); it != tolerances.end()) return it->second;
  const auto& d = default_tolerances();
  auto it = d.find(name);
  if (it == d.end()) throw ConfigError("unknown tolerance '" + name + "'");
  return it->second;
}

namespace {

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v[0], v[1], v[2]}); }

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  const auto& s = c.spectrum;
  j["spectrum"] = {{"d", s.d},
                   {"L_max", s.L_max},
                   {"law", s.law == SpectrumConfig::Law::power ? "power" : "explicit"},
                   {"alpha", s.alpha},
                   {"b", s.b},
                   {"coeffs", s.coeffs},
                   {"nu", s.nu}};
  j["integrator"] = {{"dt", c.integrator.dt}, {"T", c.integrator.T}, {"trust_region", c.integrator.trust_region}};
  j["experiment"] = c.experiment;
  j["samples"] = {{"generator", c.samples.generator},
                  {"pairs", c.samples.pairs},
                  {"frames", c.samples.frames},
                  {"distance_replicas", c.samples.distance_replicas},
                  {"rotation_replicas", c.samples.rotation_replicas},
                  {"galerkin_replicas", c.samples.galerkin_replicas}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["tolerances"] = ordered_json::object();
  for (const auto& [k, v] : c.tolerances) j["tolerances"][k] = v;
  j["drift"] = {{"kind", c.drift.kind}, {"omega", vec_json(c.drift.omega)}, {"path", c.drift.path}};
  j["kernels"] = {{"theta_uniform", c.kernels.theta_uniform},
                  {"theta_log", c.kernels.theta_log},
                  {"theta_log_min", c.kernels.theta_log_min}};
  const auto& m = c.simulate;
  j["simulate"] = {{"grid_polar", m.grid_polar},
                   {"grid_azimuth", m.grid_azimuth},
                   {"save_every", m.save_every},
                   {"write_frames", m.write_frames},
                   {"generator_point", vec_json(m.generator_point)},
                   {"galerkin_truncations", m.galerkin_truncations},
                   {"galerkin_dt", m.galerkin_dt},
                   {"galerkin_steps", m.galerkin_steps}};
  const auto& iv = c.inverse;
  j["inverse"] = {{"levels", iv.levels},
                  {"base_steps", iv.base_steps},
                  {"base_dt", iv.base_dt},
                  {"grid_polar", iv.grid_polar},
                  {"grid_azimuth", iv.grid_azimuth}};
  const auto& ds = c.distance;
  j["distance"] = {{"pair", ds.pair},
                   {"axis", vec_json(ds.axis)},
                   {"delta", ds.delta},
                   {"n_steps", ds.n_steps},
                   {"grid_polar", ds.grid_polar},
                   {"grid_azimuth", ds.grid_azimuth}};
  const auto& r = c.rotation;
  j["rotation"] = {{"rho0", r.rho0},
                   {"n_steps", r.n_steps},
                   {"window", r.window},
                   {"eps_cut", r.eps_cut},
                   {"fit_alphas", r.fit_alphas},
                   {"fit_L", r.fit_L},
                   {"fit_rho_min", r.fit_rho_min},
                   {"fit_rho_max", r.fit_rho_max},
                   {"fit_points", r.fit_points}};
  return j;
}

Vec3 vec_from(const ordered_json& j, const std::string& where) {
  if (j.size() != 3) throw ConfigError(where + ": expected 3 components");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

RunConfig from_json(const ordered_json& j) {
  RunConfig c;
  const auto& s = j["spectrum"];
  c.spectrum.d = s["d"].get<int>();
  c.spectrum.L_max = s["L_max"].get<int>();
  const auto law = s["law"].get<std::string>();
  if (law == "power") {
    c.spectrum.law = SpectrumConfig::Law::power;
  } else if (law == "explicit") {
    c.spectrum.law = SpectrumConfig::Law::explicit_list;
  } else {
    throw ConfigError("spectrum.law: expected 'power' or 'explicit'");
  }
  c.spectrum.alpha = s["alpha"].get<double>();
  c.spectrum.b = s["b"].get<double>();
  c.spectrum.coeffs = s["coeffs"].get<std::vector<double>>();
  c.spectrum.nu = s["nu"].get<double>();
  const auto& in = j["integrator"];
  c.integrator.dt = in["dt"].get<double>();
  c.integrator.T = in["T"].get<double>();
  c.integrator.trust_region = in["trust_region"].get<double>();
  c.experiment = j["experiment"].get<std::string>();
  const auto& sm = j["samples"];
  c.samples.generator = sm["generator"].get<std::uint64_t>();
  c.samples.pairs = sm["pairs"].get<std::uint64_t>();
  c.samples.frames = sm["frames"].get<std::uint64_t>();
  c.samples.distance_replicas = sm["distance_replicas"].get<std::uint64_t>();
  c.samples.rotation_replicas = sm["rotation_replicas"].get<std::uint64_t>();
  c.samples.galerkin_replicas = sm["galerkin_replicas"].get<std::uint64_t>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.output_dir = j["output_dir"].get<std::string>();
  for (const auto& [k, v] : j["tolerances"].items()) c.tolerances[k] = v.get<double>();
  const auto& dr = j["drift"];
  c.drift.kind = dr["kind"].get<std::string>();
  c.drift.omega = vec_from(dr["omega"], "drift.omega");
  c.drift.path = dr["path"].get<std::string>();
  const auto& k = j["kernels"];
  c.kernels.theta_uniform = k["theta_uniform"].get<int>();
  c.kernels.theta_log = k["theta_log"].get<int>();
  c.kernels.theta_log_min = k["theta_log_min"].get<double>();
  const auto& m = j["simulate"];
  c.simulate.grid_polar = m["grid_polar"].get<int>();
  c.simulate.grid_azimuth = m["grid_azimuth"].get<int>();
  c.simulate.save_every = m["save_every"].get<int>();
  c.simulate.write_frames = m["write_frames"].get<bool>();
  c.simulate.generator_point = vec_from(m["generator_point"], "simulate.generator_point");
  c.simulate.galerkin_truncations = m["galerkin_truncations"].get<std::vector<int>>();
  c.simulate.galerkin_dt = m["galerkin_dt"].get<double>();
  c.simulate.galerkin_steps = m["galerkin_steps"].get<std::uint64_t>();
  const auto& iv = j["inverse"];
  c.inverse.levels = iv["levels"].get<int>();
  c.inverse.base_steps = iv["base_steps"].get<std::uint64_t>();
  c.inverse.base_dt = iv["base_dt"].get<double>();
  c.inverse.grid_polar = iv["grid_polar"].get<int>();
  c.inverse.grid_azimuth = iv["grid_azimuth"].get<int>();
  const auto& ds = j["distance"];
  c.distance.pair = ds["pair"].get<std::string>();
  c.distance.axis = vec_from(ds["axis"], "distance.axis");
  c.distance.delta = ds["delta"].get<double>();
  c.distance.n_steps = ds["n_steps"].get<std::uint64_t>();
  c.distance.grid_polar = ds["grid_polar"].get<int>();
  c.distance.grid_azimuth = ds["grid_azimuth"].get<int>();
  const auto& r = j["rotation"];
  c.rotation.rho0 = r["rho0"].get<std::vector<double>>();
  c.rotation.n_steps = r["n_steps"].get<std::uint64_t>();
  c.rotation.window = r["window"].get<std::uint64_t>();
  c.rotation.eps_cut = r["eps_cut"].get<double>();
  c.rotation.fit_alphas = r["fit_alphas"].get<std::vector<double>>();
  c.rotation.fit_L = r["fit_L"].get<int>();
  c.rotation.fit_rho_min = r["fit_rho_min"].get<double>();
  c.rotation.fit_rho_max = r["fit_rho_max"].get<double>();
  c.rotation.fit_points = r["fit_points"].get<int>();
  return c;
}

bool same_kind(const ordered_json& schema, const ordered_json& v) {
  if (schema.is_number_float()) return v.is_number();
  if (schema.is_number_unsigned()) return v.is_number_unsigned();
  if (schema.is_number_integer()) return v.is_number_integer();
  if (schema.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v) {
      if (!e.is_number()) return false;
      if (!schema.empty() && schema[0].is_number_integer() && !e.is_number_integer()) return false;
    }
    return true;
  }
  return schema.type() == v.type();
}

// Overlays `in` onto the defaults, rejecting keys and types the schema lacks.
void overlay(ordered_json& dst, const ordered_json& in, const std::string& path) {
  if (!in.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, v] : in.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (path == "tolerances") {
      if (!default_tolerances().contains(key)) throw ConfigError("unknown tolerance '" + key + "'");
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
      dst[key] = v;
      continue;
    }
    if (!dst.contains(key)) throw ConfigError("unknown key '" + where + "'");
    auto& slot = dst[key];
    if (slot.is_object()) {
      overlay(slot, v, where);
    } else {
      if (!same_kind(slot, v)) throw ConfigError(where + ": wrong type");
      slot = v;
    }
  }
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void RunConfig::validate() const {
  spectrum.validate();
  if (!finite_positive(integrator.dt)) throw ConfigError("integrator.dt must be > 0");
  if (!finite_positive(integrator.T)) throw ConfigError("integrator.T must be > 0");
  if (!finite_positive(integrator.trust_region)) throw ConfigError("integrator.trust_region must be > 0");
  static const char* kinds[] = {"", "kernels", "identities", "simulate", "inverse", "distance", "rotation"};
  if (std::find(std::begin(kinds), std::end(kinds), experiment) == std::end(kinds))
    throw ConfigError("experiment: unknown selector '" + experiment + "'");
  if (samples.generator == 0 || samples.pairs == 0 || samples.frames < 2 || samples.distance_replicas < 2 ||
      samples.rotation_replicas < 2 || samples.galerkin_replicas < 2)
    throw ConfigError("samples: sizes too small");
  for (const auto& [k, v] : tolerances) {
    if (!default_tolerances().contains(k)) throw ConfigError("unknown tolerance '" + k + "'");
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("tolerances." + k + " must be finite and >= 0");
  }
  if (drift.kind != "zero" && drift.kind != "rotation" && drift.kind != "file")
    throw ConfigError("drift.kind: expected zero, rotation or file");
  if (drift.kind == "file" && drift.path.empty()) throw ConfigError("drift.path required for kind 'file'");
  if (kernels.theta_uniform < 4 || kernels.theta_log < 0 || !finite_positive(kernels.theta_log_min))
    throw ConfigError("kernels: invalid theta grid");
  if (simulate.grid_polar < 2 || simulate.grid_azimuth < 3 || simulate.save_every < 1)
    throw ConfigError("simulate: invalid grid or save interval");
  if (simulate.galerkin_truncations.empty()) throw ConfigError("simulate.galerkin_truncations is empty");
  int prev = 0;
  for (int n : simulate.galerkin_truncations) {
    if (n <= prev) throw ConfigError("simulate.galerkin_truncations must be positive and increasing");
    prev = n;
  }
  if (!finite_positive(simulate.galerkin_dt) || simulate.galerkin_steps == 0)
    throw ConfigError("simulate: invalid Galerkin step");
  if (inverse.levels < 2 || inverse.base_steps == 0 || !finite_positive(inverse.base_dt) || inverse.grid_polar < 2 ||
      inverse.grid_azimuth < 3)
    throw ConfigError("inverse: invalid settings");
  if (distance.pair != "rotation" && distance.pair != "twist") throw ConfigError("distance.pair: rotation or twist");
  if (!(norm(distance.axis) > 0.0) || !std::isfinite(distance.delta) || distance.n_steps == 0 ||
      distance.grid_polar < 2 || distance.grid_azimuth < 3)
    throw ConfigError("distance: invalid settings");
  if (rotation.rho0.empty() || rotation.window == 0 || rotation.n_steps < rotation.window ||
      !finite_positive(rotation.eps_cut))
    throw ConfigError("rotation: invalid settings");
  for (double r : rotation.rho0) {
    if (!(r > 0.0 && r < 3.141592653589793)) throw ConfigError("rotation.rho0 must lie in (0, pi)");
  }
  for (double a : rotation.fit_alphas) {
    if (!(a > 0.0 && a < 2.0)) throw ConfigError("rotation.fit_alphas must lie in (0, 2)");
  }
  if (rotation.fit_L < 2 || rotation.fit_points < 3 || !finite_positive(rotation.fit_rho_min) ||
      !(rotation.fit_rho_max > rotation.fit_rho_min))
    throw ConfigError("rotation: invalid fit settings");
}

RunConfig parse_config(const std::string& json_text) {
  ordered_json in;
  try {
    in = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ordered_json merged = to_json(RunConfig{});
  overlay(merged, in, "");
  RunConfig c;
  try {
    c = from_json(merged);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string canonical_json(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::string config_hash(const RunConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("output_dir");
  return sha1_hex(j.dump());
}

}  // namespace sphereflow::cli
