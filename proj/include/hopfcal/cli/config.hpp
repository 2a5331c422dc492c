#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "hopfcal/estimation.hpp"
#include "hopfcal/langevin.hpp"
#include "hopfcal/model.hpp"
#include "hopfcal/spectral.hpp"

namespace hopfcal::cli {

enum class Backend { envelope, full };

struct SimulationSettings {
  Backend backend = Backend::envelope;
  SimulationConfig sim;       // duration 0 selects an automatic duration per power
  double record_interval = 1e-4;  // s, spacing of the emitted envelope samples
};

struct AnalysisSettings {
  double lockin_bandwidth = 200.0;  // Hz
  int lockin_order = 4;
  SlopeExtractionOptions extraction;
  double threshold_tolerance = 0.15;  // reported agreement band for the linear-threshold estimate
  double slope_tolerance = 0.05;
  double tone_tolerance = 0.02;
};

struct SweepSettings {
  std::vector<double> powers;  // W, effective
  int seeds = 1;
};

struct CalibrationSettings {
  CalibrationTone tone{0.0195, 0.0};
  std::pair<double, double> band_mech{0.0, 0.0};  // Hz; zero selects f_m -/+ 200 Hz
  std::pair<double, double> band_tone{0.0, 0.0};  // Hz; zero selects f_b -/+ 200 Hz
  double resolution = 0.1;  // Hz, bin spacing of synthetic spectra
  double background = 0.0;  // V^2/Hz white floor of synthetic spectra
  int averages = 0;         // periodogram averages for synthetic noise; 0 = noiseless
  DetectionChain chain;
};

struct RunConfig {
  SystemParams system;
  SimulationSettings simulation;
  AnalysisSettings analysis;
  SweepSettings sweep;
  CalibrationSettings calibration;
  std::string output_dir = "hopfcal_out";
  std::uint64_t seed = 1;
};

// Reference parameters, the 5..30 uW sweep and a 237 kHz, 19.5 mrad tone.
RunConfig default_config();

// Parses and validates a JSON document layered over default_config().
// Unknown keys, wrong types and invalid values raise ConfigError with the
// line of the offending entry.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Canonical JSON form (rates in rad/s, powers in W); used for hashing.
nlohmann::json to_json(const RunConfig& cfg);

// "6.1uW", "21 µW", "6.1e-6", "1mW" -> watts.
double parse_power(const std::string& text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& data);

}  // namespace hopfcal::cli
