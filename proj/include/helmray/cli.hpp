#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "helmray/beamcore.hpp"
#include "helmray/integrator.hpp"
#include "helmray/medium.hpp"

namespace helmray::cli {

/// Which files execute() writes besides summary.txt, which is always written.
struct EmitFlags {
  bool trajectories = true;
  bool fronts = true;
  bool intensity = true;
  bool envelope = true;
  bool svg = false;
};

struct CliConfig {
  std::string scenario;  // registry name; empty for an inline setup
  LaunchConfig launch;
  MediumSpec medium = MediumSpec::vacuum();
  RunConfig run;
  std::vector<double> compare_planes;
  std::filesystem::path output_dir = "helmray_out";
  EmitFlags emit;
};

/// Parses the line-oriented `key = value` format. `[section]` headers are
/// optional; a key under a header must belong to that section. `#` and `;`
/// start comments. Throws ValidationError with the offending line number.
[[nodiscard]] CliConfig parse_config(const std::string& text);

/// Every key with its section, default and meaning, one per line.
[[nodiscard]] std::string config_reference();

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_numerical = 3 };

/// Runs the configured problem and writes the requested files into
/// cfg.output_dir. A validation failure writes nothing; a numerical abort
/// still writes summary.txt. Diagnostics also go to `log`.
[[nodiscard]] int execute(const CliConfig& cfg, std::ostream& log);

}  // namespace helmray::cli
