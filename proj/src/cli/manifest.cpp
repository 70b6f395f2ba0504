#include "sphereflow/cli/manifest.hpp"

#include <chrono>
#include <ctime>
#include <json.hpp>

#ifndef SPHEREFLOW_VERSION
#define SPHEREFLOW_VERSION "unknown"
#endif

namespace sphereflow::cli {

using nlohmann::ordered_json;

namespace {

ordered_json check_json(const CheckRecord& c) {
  return {{"suite", c.suite},         {"name", c.name},           {"passed", c.passed},
          {"measured", c.measured},   {"tolerance", c.tolerance}, {"relation", c.relation}};
}

}  // namespace

bool RunManifest::all_passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::vector<const CheckRecord*> RunManifest::failures() const {
  std::vector<const CheckRecord*> f;
  for (const auto& c : checks) {
    if (!c.passed) f.push_back(&c);
  }
  return f;
}

std::string RunManifest::to_json() const {
  ordered_json j;
  j["command"] = command;
  j["version"] = version;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["started"] = started;
  j["finished"] = finished;
  j["passed"] = all_passed();
  j["skipped_suites"] = skipped_suites;
  j["checks"] = ordered_json::array();
  for (const auto& c : checks) j["checks"].push_back(check_json(c));
  j["artifacts"] = ordered_json::array();
  for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a.path}, {"content_id", a.content_id}, {"bytes", a.bytes}});
  return j.dump(2) + "\n";
}

std::string failure_report(const RunManifest& m) {
  ordered_json j;
  j["command"] = m.command;
  j["failures"] = ordered_json::array();
  for (const auto* c : m.failures()) j["failures"].push_back(check_json(*c));
  return j.dump();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* code_version() { return SPHEREFLOW_VERSION; }

}  // namespace sphereflow::cli
