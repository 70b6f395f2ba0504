#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sphereflow::cli {

struct CheckRecord {
  std::string suite;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  // how measured is compared with tolerance, e.g. "<=", "|z|<="
};

struct ArtifactRecord {
  std::string path;  // relative to the output directory
  std::string content_id;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> skipped_suites;
  std::vector<CheckRecord> checks;
  std::vector<ArtifactRecord> artifacts;

  bool all_passed() const;
  std::vector<const CheckRecord*> failures() const;
  std::string to_json() const;
};

// Machine-readable list of failed checks: {"command": ..., "failures": [...]}.
std::string failure_report(const RunManifest& m);

std::string utc_timestamp();
const char* code_version();

}  // namespace sphereflow::cli
