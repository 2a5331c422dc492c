#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hopfcal/cli/config.hpp"
#include "hopfcal/demod.hpp"
#include "hopfcal/estimation.hpp"

namespace hopfcal::cli {

struct RunTiming {
  double pump_on_time = 0.0;  // s
  double duration = 0.0;      // s
};

// Pump switch-on and total duration for one run. Explicit values from the
// config win; otherwise the duration covers an initial plateau, the rise
// from the thermal amplitude and the settled limit cycle.
RunTiming run_timing(const RunConfig& cfg, const SystemParams& sys);

// Deterministic per-run seed from the base seed, ensemble member and power index.
std::uint64_t run_seed(std::uint64_t base, std::size_t member, std::size_t power_index);

struct PowerRun {
  double power = 0.0;
  std::uint64_t seed = 0;
  RunTiming timing;
  EnvelopeTrace envelope;                 // displacement envelope, m
  std::optional<SlopeEstimate> slope;     // empty when no rise was found
  std::optional<Trajectory> trajectory;   // full backend, when requested
  std::optional<EnvelopeTrajectory> amplitude;  // envelope backend, when requested
};

// Simulate at `power`, demodulate and extract the maximum rise slope.
PowerRun run_power(const RunConfig& cfg, double power, std::uint64_t seed, bool keep_raw = false);

struct SeedResult {
  std::size_t member = 0;
  std::vector<SlopeMeasurement> slopes;
  std::optional<FitResult> fit;
  std::optional<ThresholdFit> threshold;
  std::optional<double> g0_threshold;  // g0 from the linear-fit threshold
  std::string failure;                 // stage and message when a fit failed
};

struct ToneEstimate {
  double area_mech = 0.0, area_mech_sigma = 0.0;
  double area_tone = 0.0, area_tone_sigma = 0.0;
  double detection_factor = 0.0;
  double n_bar = 0.0;
  double g0 = 0.0, g0_sigma = 0.0;
};

struct PipelineResult {
  double g0_true = 0.0;
  std::vector<SeedResult> seeds;
  std::optional<double> g0_slope_median;
  double g0_slope_spread = 0.0;  // sample standard deviation over seeds
  std::optional<double> g0_threshold_median;
  std::optional<ToneEstimate> tone;
  std::string tone_failure;
  bool threshold_crossed = false;
};

// Bands default to f -/+ 200 Hz around the mechanical and tone frequencies.
std::pair<double, double> mech_band(const RunConfig& cfg);
std::pair<double, double> tone_band(const RunConfig& cfg);

// Calibration-tone g0 from two measured areas with first-order uncertainty.
ToneEstimate tone_estimate(const RunConfig& cfg, double area_mech, double sigma_mech, double area_tone,
                           double sigma_tone, std::optional<double> K = {}, std::optional<double> n_bar = {});

// Synthetic resonant-probe spectrum for the configured system and tone.
SpectrumRecord synthetic_tone_spectrum(const RunConfig& cfg, std::uint64_t seed);

// Runs every (seed, power) simulation concurrently, then the fits. When
// `artifacts` is set, envelopes, slope tables and the spectrum are written
// there as each stage completes.
PipelineResult run_pipeline(const RunConfig& cfg, const std::optional<std::filesystem::path>& artifacts = {});

}  // namespace hopfcal::cli
