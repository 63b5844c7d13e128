#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "helmray/cli.hpp"
#include "helmray/oracles.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ray and particle trajectories of Helmholtz and matter waves with the wave potential"};
  std::string config_path;
  std::vector<std::string> settings;
  std::string output_dir;
  bool list = false;
  app.add_option("config", config_path, "configuration file in key = value format");
  app.add_option("-s,--set", settings, "extra top-level 'key = value' line; a key may not also appear in the file");
  app.add_option("-o,--output", output_dir, "output directory (overrides [output] dir)");
  app.add_flag("--list-scenarios", list, "print the scenario registry and exit");
  app.footer("Configuration keys:\n" + helmray::cli::config_reference() +
             "\nExit status: 0 success, 2 invalid configuration (no files written),\n"
             "3 numerical abort (summary.txt still written).");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& name : helmray::scenario_names()) std::cout << name << '\n';
    return 0;
  }

  std::ostringstream text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "validation error: cannot read " << config_path << '\n';
      return helmray::cli::exit_validation;
    }
    text << in.rdbuf() << '\n';
  }
  // Command-line settings go first so that they sit at the top level; a key
  // given both here and in the file is rejected as a repeat.
  std::string body = text.str();
  if (!settings.empty()) {
    std::string top;
    for (const auto& s : settings) top += s + '\n';
    body = top + body;
  }

  helmray::cli::CliConfig cfg;
  try {
    cfg = helmray::cli::parse_config(body);
  } catch (const helmray::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return helmray::cli::exit_validation;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  return helmray::cli::execute(cfg, std::cerr);
}
