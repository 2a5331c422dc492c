#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hopfcal/cli/config.hpp"

namespace hopfcal::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_data = 3,
  exit_numeric = 4,
  exit_not_above_threshold = 5,
};

// Maps the exception currently being handled to an exit code.
int exit_code_for_current_exception();

struct CommandResult {
  nlohmann::json report;
  int exit_code = exit_ok;
};

// Derived quantities of the configured system.
CommandResult cmd_derive(const RunConfig& cfg);

// One run per power (the pump power of the system when `powers` is empty).
CommandResult cmd_simulate(const RunConfig& cfg, const std::vector<double>& powers);

// Slope-vs-power fit of a slope table, plus the linear threshold fit and
// the model curve on a power grid.
CommandResult cmd_fit(const RunConfig& cfg, const std::filesystem::path& slope_csv);

struct ToneInputs {
  std::optional<std::filesystem::path> spectrum;
  std::optional<double> area_mech;  // V^2, replaces the spectrum integration
  std::optional<double> area_tone;
  std::optional<double> detection_factor;
  std::optional<double> n_bar;
};
CommandResult cmd_calibrate_tone(const RunConfig& cfg, const ToneInputs& in);

// simulate -> demodulate -> extract -> fit over the sweep and seed ensemble,
// plus the threshold and calibration-tone estimates.
CommandResult cmd_pipeline(const RunConfig& cfg);

// Writes manifest.json (command, config hash, seed, version, file hashes).
void write_manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::filesystem::path>& files);

std::string config_hash(const RunConfig& cfg);

}  // namespace hopfcal::cli
