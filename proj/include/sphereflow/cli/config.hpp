#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sphereflow/geometry.hpp"
#include "sphereflow/kernels.hpp"

namespace sphereflow::cli {

// One JSON document; every key is optional and unknown keys are rejected.
// Defaults are the member initializers below and default_tolerances().
struct RunConfig {
  SpectrumConfig spectrum = SpectrumConfig::power_law(2, 5, 3.0, 1.0, 0.1);

  struct Integrator {
    double dt = 1e-3;
    double T = 1.0;
    double trust_region = 0.7853981633974483;
  } integrator;

  // Empty, or the subcommand the file is meant for.
  std::string experiment;

  struct Samples {
    std::uint64_t generator = 1000000;
    std::uint64_t pairs = 50;
    std::uint64_t frames = 100;
    std::uint64_t distance_replicas = 10000;
    std::uint64_t rotation_replicas = 1000;
    std::uint64_t galerkin_replicas = 16;
  } samples;

  std::uint64_t seed = 1;
  std::string output_dir = "sphereflow-out";
  std::map<std::string, double> tolerances;  // overrides only

  struct Drift {
    std::string kind = "zero";  // zero | rotation | file
    Vec3 omega{0.0, 0.0, 1.0};
    std::string path;
  } drift;

  struct Kernels {
    int theta_uniform = 2049;
    int theta_log = 64;
    double theta_log_min = 1e-6;
  } kernels;

  struct Simulate {
    int grid_polar = 32;
    int grid_azimuth = 64;
    int save_every = 100;
    bool write_frames = false;
    Vec3 generator_point{0.3, -0.2, 0.8};
    std::vector<int> galerkin_truncations{2, 4, 8, 16};  // entries above L_max are dropped
    double galerkin_dt = 5e-3;
    std::uint64_t galerkin_steps = 200;
  } simulate;

  struct Inverse {
    int levels = 3;
    std::uint64_t base_steps = 100;
    double base_dt = 4e-3;
    int grid_polar = 8;
    int grid_azimuth = 16;
  } inverse;

  struct Distance {
    std::string pair = "rotation";  // rotation | twist
    Vec3 axis{0.2, 0.5, 1.0};
    double delta = 0.2;
    std::uint64_t n_steps = 20;
    int grid_polar = 4;
    int grid_azimuth = 8;
  } distance;

  struct Rotation {
    std::vector<double> rho0{0.5, 0.02};
    std::uint64_t n_steps = 200;
    std::uint64_t window = 50;
    double eps_cut = kDefaultCutTolerance;
    std::vector<double> fit_alphas{0.5, 1.0, 1.5};
    int fit_L = 20000;
    double fit_rho_min = 2e-3;
    double fit_rho_max = 2e-2;
    int fit_points = 8;
  } rotation;

  double tolerance(const std::string& name) const;
  void validate() const;
};

// Named tolerances used by the command suites.
const std::map<std::string, double>& default_tolerances();

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
// Canonical JSON of the fully defaulted config; the manifest hash is taken over this.
std::string canonical_json(const RunConfig& cfg);
// SHA-1 of the canonical JSON without output_dir, which never affects results.
std::string config_hash(const RunConfig& cfg);

}  // namespace sphereflow::cli
