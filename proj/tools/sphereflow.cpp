#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <json.hpp>

#include "sphereflow/cli/commands.hpp"
#include "sphereflow/cli/config.hpp"
#include "sphereflow/errors.hpp"

namespace sf = sphereflow;

int main(int argc, char** argv) {
  CLI::App app{"Isotropic stochastic flows on the sphere: identity suites and Monte Carlo checks"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> only, disabled;
  for (const auto& name : sf::cli::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    std::string suites;
    for (const auto& s : sf::cli::command_suites(name)) suites += (suites.empty() ? "" : ", ") + s;
    sub->add_option("--check", only, "run only these check suites: " + suites)->take_all();
    sub->add_option("--no-check", disabled, "skip these check suites")->take_all();
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();

  try {
    sf::cli::RunConfig cfg = config_path.empty() ? sf::cli::RunConfig{} : sf::cli::load_config(config_path);
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--out")) cfg.output_dir = out_dir;
    cfg.validate();
    sf::cli::SuiteSelection sel{{only.begin(), only.end()}, {disabled.begin(), disabled.end()}};
    return sf::cli::run_command(command, cfg, sel, std::cout);
  } catch (const sf::ConfigError& e) {
    std::cerr << nlohmann::json{{"command", command}, {"error", "config"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const sf::Error& e) {
    std::cerr << nlohmann::json{{"command", command}, {"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}
