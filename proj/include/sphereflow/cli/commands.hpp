#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "sphereflow/cli/config.hpp"
#include "sphereflow/cli/manifest.hpp"

namespace sphereflow::cli {

const std::vector<std::string>& command_names();
// Check suites of one command, in execution order.
const std::vector<std::string>& command_suites(const std::string& command);

struct SuiteSelection {
  std::set<std::string> only;      // empty: all suites
  std::set<std::string> disabled;
  bool enabled(const std::string& suite) const;
};

struct CommandOutcome {
  RunManifest manifest;
  std::map<std::string, std::string> artifacts;  // relative path -> content
};

// Runs one command without touching the file system. Throws ConfigError on
// unknown commands or suite names.
CommandOutcome execute(const std::string& command, const RunConfig& cfg, const SuiteSelection& sel);

// execute() plus atomic artifact and manifest writes under cfg.output_dir.
// Returns the process exit code: 0 iff every enabled check passed.
int run_command(const std::string& command, const RunConfig& cfg, const SuiteSelection& sel, std::ostream& log);

}  // namespace sphereflow::cli
