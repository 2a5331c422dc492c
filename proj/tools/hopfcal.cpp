#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "hopfcal/cli/commands.hpp"
#include "hopfcal/cli/config.hpp"
#include "hopfcal/errors.hpp"

using namespace hopfcal;
using namespace hopfcal::cli;

namespace {

std::vector<double> parse_power_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const double p = parse_power(item);
    if (!(p > 0.0)) throw ConfigError("--powers: powers must be > 0");
    out.push_back(p);
  }
  if (out.empty()) throw ConfigError("--powers: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radiation-pressure limit-cycle simulation and g0 estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string powers;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "base random seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--powers", powers, "comma-separated pump powers, e.g. 6.1uW,21uW");

  app.add_subcommand("derive", "print derived quantities as JSON");
  app.add_subcommand("simulate", "simulate and write trajectory and envelope CSVs");
  auto* fit = app.add_subcommand("fit", "fit a slope table (power_W,slope_V_per_s,sigma)");
  std::string slope_csv;
  fit->add_option("slopes", slope_csv, "slope CSV")->required();
  auto* tone = app.add_subcommand("calibrate-tone", "g0 from mechanical and calibration-tone peak areas");
  std::string spectrum_csv;
  ToneInputs tone_in;
  tone->add_option("spectrum", spectrum_csv, "spectrum CSV (freq_Hz,psd_V2_per_Hz)");
  tone->add_option("--area-mech", tone_in.area_mech, "mechanical peak area, V^2");
  tone->add_option("--area-tone", tone_in.area_tone, "calibration peak area, V^2");
  tone->add_option("--detection-factor", tone_in.detection_factor, "override the detection factor K");
  tone->add_option("--n-bar", tone_in.n_bar, "override the thermal occupation");
  app.add_subcommand("pipeline", "simulate, demodulate, extract and fit over the power sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    RunConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    std::vector<double> power_list;
    if (!powers.empty()) {
      power_list = parse_power_list(powers);
      for (double& p : power_list) p *= cfg.system.pump.mode_match;
      cfg.sweep.powers = power_list;
    }

    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    CommandResult res;
    if (name == "derive") {
      res = cmd_derive(cfg);
    } else if (name == "simulate") {
      res = cmd_simulate(cfg, power_list);
    } else if (name == "fit") {
      res = cmd_fit(cfg, slope_csv);
    } else if (name == "calibrate-tone") {
      if (!spectrum_csv.empty()) tone_in.spectrum = spectrum_csv;
      res = cmd_calibrate_tone(cfg, tone_in);
    } else {
      res = cmd_pipeline(cfg);
    }
    std::cout << res.report.dump(2) << "\n";
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "hopfcal: " << e.what() << "\n";
    return exit_code_for_current_exception();
  }
}
