#include "hopfcal/cli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/cli/io.hpp"
#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/parallel.hpp"

namespace hopfcal::cli {

namespace {

using constants::two_pi;

// Re-throws an Error with the failing stage prepended, keeping its type.
[[noreturn]] void rethrow_with_stage(const std::string& stage) {
  try {
    throw;
  } catch (const NotAboveThresholdError& e) {
    throw NotAboveThresholdError(stage + ": " + e.what());
  } catch (const NoThresholdError& e) {
    throw NoThresholdError(stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(stage + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(stage + ": " + e.what());
  }
}

std::string power_label(double power) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", power * 1e6);
  return std::string(buf) + "uW";
}

template <typename T>
void decimate(std::vector<T>& v, std::size_t stride) {
  if (stride <= 1) return;
  std::size_t j = 0;
  for (std::size_t i = 0; i < v.size(); i += stride) v[j++] = v[i];
  v.resize(j);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunTiming run_timing(const RunConfig& cfg, const SystemParams& sys) {
  const auto& sim = cfg.simulation.sim;
  if (sim.duration > 0.0) return {sim.pump_on_time, sim.duration};
  const double gamma = sys.mech.gamma_m;
  const double growth = -origin_slope(sys) * gamma;
  double rise = 10.0 / gamma;
  if (growth > 0.0) {
    const double xi_st = steady_state_amplitude(sys).value_or(1.0);
    const double xi_th = 2.0 * sys.coupling(Beam::pump) * std::sqrt(sys.mech.n_bar() + 0.5) / sys.mech.omega_m;
    rise = (std::max(0.0, std::log(xi_st / xi_th)) + 2.0) / growth;
  }
  const double on = sim.pump_on_time > 0.0 ? sim.pump_on_time : (sim.thermal_noise ? 0.5 * rise : 0.0);
  return {on, on + 2.5 * rise};
}

std::uint64_t run_seed(std::uint64_t base, std::size_t member, std::size_t power_index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (1 + member) + 0xBF58476D1CE4E5B9ULL * (1 + power_index);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

PowerRun run_power(const RunConfig& cfg, double power, std::uint64_t seed, bool keep_raw) {
  PowerRun run;
  run.power = power;
  run.seed = seed;
  const SystemParams sys = cfg.system.with_pump_power(power);
  run.timing = run_timing(cfg, sys);

  SimulationConfig sc = cfg.simulation.sim;
  sc.duration = run.timing.duration;
  sc.pump_on_time = run.timing.pump_on_time;
  sc.seed = seed;
  sc.record_stride = 1;
  if (!sc.thermal_noise && !sc.initial_beta) sc.initial_beta = cplx(std::sqrt(sys.mech.n_bar() + 0.5), 0.0);

  const double x_zpf = sys.mech.x_zpf();
  const double f_m = sys.mech.omega_m / two_pi;
  const auto& an = cfg.analysis;

  if (cfg.simulation.backend == Backend::envelope) {
    const double dt = sc.dt > 0.0 ? sc.dt : 1e-3 / sys.mech.gamma_m;
    sc.dt = dt;
    auto amp = simulate_envelope(sys, sc);
    run.envelope = envelope_from_baseband(amp, x_zpf, f_m, an.lockin_bandwidth, an.lockin_order);
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(cfg.simulation.record_interval / dt)));
    decimate(run.envelope.times, stride);
    decimate(run.envelope.V, stride);
    if (keep_raw) {
      decimate(amp.times, stride);
      decimate(amp.amplitude, stride);
      run.amplitude = std::move(amp);
    }
  } else {
    const double dt = sc.dt > 0.0 ? sc.dt : default_time_step(sys);
    sc.dt = dt;
    const auto stride = static_cast<std::int64_t>(std::max(1.0, std::round(cfg.simulation.record_interval / dt)));
    LockInAmplifier lockin(f_m, an.lockin_bandwidth, dt, an.lockin_order);
    run.envelope.bandwidth = an.lockin_bandwidth;
    run.envelope.reference_frequency = f_m;
    if (keep_raw) run.trajectory.emplace();
    simulate_full(sys, sc, [&](std::int64_t step, const FullState& s) {
      const auto z = lockin.push(s.t, 2.0 * x_zpf * s.beta.real());
      if (step % stride != 0) return;
      run.envelope.times.push_back(s.t);
      run.envelope.V.push_back(std::abs(z));
      if (run.trajectory) {
        run.trajectory->times.push_back(s.t);
        run.trajectory->alpha_pr.push_back(s.alpha_pr);
        run.trajectory->alpha_pm.push_back(s.alpha_pm);
        run.trajectory->beta.push_back(s.beta);
      }
    });
  }
  run.slope = extract_max_slope(run.envelope, an.extraction);
  return run;
}

std::pair<double, double> mech_band(const RunConfig& cfg) {
  const auto& b = cfg.calibration.band_mech;
  if (b.second > b.first) return b;
  const double f = cfg.system.mech.omega_m / two_pi;
  return {f - 200.0, f + 200.0};
}

std::pair<double, double> tone_band(const RunConfig& cfg) {
  const auto& b = cfg.calibration.band_tone;
  if (b.second > b.first) return b;
  const double f = cfg.calibration.tone.omega_b / two_pi;
  return {f - 200.0, f + 200.0};
}

ToneEstimate tone_estimate(const RunConfig& cfg, double area_mech, double sigma_mech, double area_tone,
                           double sigma_tone, std::optional<double> K, std::optional<double> n_bar) {
  const auto& sys = cfg.system;
  const auto& tone = cfg.calibration.tone;
  tone.validate();
  ToneEstimate t;
  t.area_mech = area_mech;
  t.area_mech_sigma = sigma_mech;
  t.area_tone = area_tone;
  t.area_tone_sigma = sigma_tone;
  t.detection_factor =
      K.value_or(detection_factor(sys.probe.kappa(), sys.probe.kappa_in, sys.mech.omega_m, tone.omega_b));
  t.n_bar = n_bar.value_or(sys.mech.n_bar());
  t.g0 = g0_from_calibration(area_mech, area_tone, tone, t.n_bar, t.detection_factor);
  t.g0_sigma = 0.5 * t.g0 * std::hypot(sigma_mech / area_mech, sigma_tone / area_tone);
  return t;
}

SpectrumRecord synthetic_tone_spectrum(const RunConfig& cfg, std::uint64_t seed) {
  const auto& sys = cfg.system;
  const auto& cal = cfg.calibration;
  const ReflectionParams probe{sys.detuning(Beam::probe), sys.probe.kappa(), sys.probe.kappa_in, sys.mech.omega_m};
  const double xi = sys.coupling(Beam::probe) * std::sqrt(2.0 * sys.mech.n_bar()) / sys.mech.omega_m;
  const auto bm = mech_band(cfg);
  const auto bt = tone_band(cfg);
  SyntheticSpectrumOptions o;
  o.f_low = std::max(0.0, std::min(bm.first, bt.first) - 50.0);
  o.f_high = std::max(bm.second, bt.second) + 50.0;
  o.resolution = cal.resolution;
  o.background = cal.background;
  o.averages = cal.averages;
  o.seed = seed;
  return synthesize_calibration_spectrum(probe, xi, cal.tone, sys.mech.gamma_m, cal.chain, o);
}

PipelineResult run_pipeline(const RunConfig& cfg, const std::optional<std::filesystem::path>& artifacts) {
  const auto& powers = cfg.sweep.powers;
  if (powers.empty()) throw ConfigError("pipeline: the power sweep is empty");
  const auto members = static_cast<std::size_t>(cfg.sweep.seeds);
  const std::size_t n_runs = members * powers.size();

  std::vector<std::optional<SlopeEstimate>> slopes(n_runs);
  parallel_for(n_runs, [&](std::size_t job) {
    const std::size_t m = job / powers.size();
    const std::size_t k = job % powers.size();
    const std::string stage =
        "simulate (member " + std::to_string(m) + ", P = " + power_label(powers[k]) + ")";
    try {
      const PowerRun run = run_power(cfg, powers[k], run_seed(cfg.seed, m, k));
      slopes[job] = run.slope;
      if (artifacts)
        write_envelope_csv(*artifacts / "envelopes" / ("seed" + std::to_string(m) + "_" + power_label(powers[k]) + ".csv"),
                           run.envelope);
    } catch (...) {
      rethrow_with_stage(stage);
    }
  });

  PipelineResult out;
  out.g0_true = cfg.system.g0;
  std::vector<double> g0_fit, g0_thr;
  for (std::size_t m = 0; m < members; ++m) {
    SeedResult s;
    s.member = m;
    for (std::size_t k = 0; k < powers.size(); ++k) {
      const auto& e = slopes[m * powers.size() + k];
      s.slopes.push_back({powers[k], e ? e->slope : 0.0, 0.0, "seed" + std::to_string(m) + "_" + power_label(powers[k])});
      if (e) out.threshold_crossed = true;
    }
    if (artifacts) write_slope_csv(*artifacts / ("slopes_seed" + std::to_string(m) + ".csv"), s.slopes);

    try {
      s.fit = fit_slope_power(s.slopes, cfg.system);
      if (s.fit->converged) g0_fit.push_back(s.fit->g0);
    } catch (const Error& e) {
      s.failure = std::string("fit: ") + e.what();
    }
    std::vector<SlopeMeasurement> rising;
    for (const auto& d : s.slopes)
      if (d.max_slope > 0.0) rising.push_back(d);
    if (rising.size() >= 2) {
      try {
        s.threshold = fit_threshold_linear(rising);
        s.g0_threshold = g0_from_threshold(s.threshold->threshold, cfg.system);
        g0_thr.push_back(*s.g0_threshold);
      } catch (const Error& e) {
        s.failure += (s.failure.empty() ? "" : "; ") + std::string("threshold fit: ") + e.what();
      }
    }
    out.seeds.push_back(std::move(s));
  }
  if (!g0_fit.empty()) {
    out.g0_slope_median = median(g0_fit);
    if (g0_fit.size() > 1) {
      const double mean = std::accumulate(g0_fit.begin(), g0_fit.end(), 0.0) / g0_fit.size();
      double ss = 0.0;
      for (double g : g0_fit) ss += (g - mean) * (g - mean);
      out.g0_slope_spread = std::sqrt(ss / (g0_fit.size() - 1));
    }
  }
  if (!g0_thr.empty()) out.g0_threshold_median = median(g0_thr);

  try {
    const auto spec = synthetic_tone_spectrum(cfg, run_seed(cfg.seed, members, powers.size()));
    if (artifacts) write_spectrum_csv(*artifacts / "spectrum.csv", spec);
    const auto am = integrated_area(spec, mech_band(cfg));
    const auto at = integrated_area(spec, tone_band(cfg));
    out.tone = tone_estimate(cfg, am.area, am.sigma, at.area, at.sigma);
  } catch (const Error& e) {
    out.tone_failure = std::string("calibration tone: ") + e.what();
  }
  return out;
}

}  // namespace hopfcal::cli
