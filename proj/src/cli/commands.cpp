#include "hopfcal/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/cli/io.hpp"
#include "hopfcal/cli/pipeline.hpp"
#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/parallel.hpp"

#ifndef HOPFCAL_VERSION
#define HOPFCAL_VERSION "unknown"
#endif

namespace hopfcal::cli {

namespace {

using nlohmann::json;
using constants::two_pi;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string power_label(double power) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", power * 1e6);
  return std::string(buf) + "uW";
}

json fit_json(const FitResult& f) {
  return {{"g0_rad_s", f.g0},
          {"g0_Hz", f.g0 / two_pi},
          {"a_V_per_s", f.a},
          {"cov", {{f.covariance(0, 0), f.covariance(0, 1)}, {f.covariance(1, 0), f.covariance(1, 1)}}},
          {"chi2", f.chi2},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"message", f.message}};
}

json tone_json(const ToneEstimate& t) {
  return {{"area_mech_V2", t.area_mech},   {"area_mech_sigma_V2", t.area_mech_sigma},
          {"area_tone_V2", t.area_tone},   {"area_tone_sigma_V2", t.area_tone_sigma},
          {"detection_factor", t.detection_factor}, {"n_bar", t.n_bar},
          {"g0_rad_s", t.g0},              {"g0_Hz", t.g0 / two_pi},
          {"g0_sigma_rad_s", t.g0_sigma}};
}

std::filesystem::path out_dir(const RunConfig& cfg) { return cfg.output_dir; }

}  // namespace

int exit_code_for_current_exception() {
  try {
    throw;
  } catch (const NotAboveThresholdError&) {
    return exit_not_above_threshold;
  } catch (const ConfigError&) {
    return exit_config;
  } catch (const DomainError&) {
    return exit_config;
  } catch (const DataError&) {
    return exit_data;
  } catch (const NumericError&) {
    return exit_numeric;
  } catch (const nlohmann::json::exception&) {
    return exit_config;
  } catch (const std::filesystem::filesystem_error&) {
    return exit_data;
  } catch (...) {
    return exit_numeric;
  }
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a(to_json(cfg).dump())); }

void write_manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::filesystem::path>& files) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["seed"] = cfg.seed;
  m["version"] = HOPFCAL_VERSION;
  m["threads_affect_output"] = false;
  json f = json::array();
  for (const auto& p : files)
    f.push_back({{"path", std::filesystem::relative(p, out_dir(cfg)).generic_string()},
                 {"fnv1a", hex64(fnv1a(read_file(p)))}});
  m["files"] = f;
  m["config"] = to_json(cfg);
  write_text(out_dir(cfg) / "manifest.json", m.dump(2) + "\n");
}

CommandResult cmd_derive(const RunConfig& cfg) {
  const auto& sys = cfg.system;
  json r;
  r["n_bar"] = sys.mech.n_bar();
  r["x_zpf_m"] = sys.mech.x_zpf();
  r["E2_pump_per_s2"] = sys.drive_squared(Beam::pump);
  r["E2_probe_per_s2"] = sys.drive_squared(Beam::probe);
  r["alpha"] = sys.alpha();
  r["detection_factor"] =
      detection_factor(sys.probe.kappa(), sys.probe.kappa_in, sys.mech.omega_m, cfg.calibration.tone.omega_b);
  try {
    r["threshold_constant_W"] = threshold_constant(sys);
  } catch (const NoThresholdError&) {
    r["threshold_constant_W"] = nullptr;
  }
  try {
    r["threshold_power_W"] = threshold_power(sys, Beam::pump);
  } catch (const NoThresholdError&) {
    r["threshold_power_W"] = "none (no antidamping)";
  }
  r["pump_power_W"] = sys.pump.power;
  const auto xi_st = steady_state_amplitude(sys);
  const auto mx = max_slope_point(sys);
  r["xi_st"] = xi_st ? json(*xi_st) : json(nullptr);
  r["xi_mx"] = mx ? json(mx->xi_mx) : json(nullptr);
  r["S_mx"] = mx ? json(mx->S_mx) : json(nullptr);
  r["g0_rad_s"] = sys.g0;
  return {r, exit_ok};
}

CommandResult cmd_simulate(const RunConfig& cfg, const std::vector<double>& powers_in) {
  const std::vector<double> powers = powers_in.empty() ? std::vector<double>{cfg.system.pump.power} : powers_in;
  const auto dir = out_dir(cfg);
  std::vector<PowerRun> runs(powers.size());
  parallel_for(powers.size(), [&](std::size_t k) {
    runs[k] = run_power(cfg, powers[k], run_seed(cfg.seed, 0, k), true);
    const auto label = power_label(powers[k]);
    if (runs[k].trajectory) write_trajectory_csv(dir / ("trajectory_" + label + ".csv"), *runs[k].trajectory);
    if (runs[k].amplitude) write_envelope_amplitude_csv(dir / ("amplitude_" + label + ".csv"), *runs[k].amplitude);
    write_envelope_csv(dir / ("envelope_" + label + ".csv"), runs[k].envelope);
  });

  json report = json::array();
  std::vector<std::filesystem::path> files;
  for (std::size_t k = 0; k < powers.size(); ++k) {
    const auto& run = runs[k];
    const auto label = power_label(powers[k]);
    json item = {{"power_W", powers[k]},
                 {"seed", run.seed},
                 {"pump_on_time_s", run.timing.pump_on_time},
                 {"duration_s", run.timing.duration},
                 {"envelope_file", "envelope_" + label + ".csv"}};
    const double v0 = run.envelope.V.empty() ? 0.0 : run.envelope.V.front();
    const double vmax = run.envelope.V.empty() ? 0.0 : *std::max_element(run.envelope.V.begin(), run.envelope.V.end());
    item["grew_tenfold"] = v0 > 0.0 && vmax > 10.0 * v0;
    if (run.slope) {
      item["max_slope_m_per_s"] = run.slope->slope;
      item["max_slope_sigma"] = run.slope->sigma;
      item["max_slope_time_s"] = run.slope->time;
    } else {
      item["max_slope_m_per_s"] = nullptr;
      item["note"] = "no rise detected (not above threshold)";
    }
    report.push_back(item);
    if (run.trajectory) files.push_back(dir / ("trajectory_" + label + ".csv"));
    if (run.amplitude) files.push_back(dir / ("amplitude_" + label + ".csv"));
    files.push_back(dir / ("envelope_" + label + ".csv"));
  }
  write_manifest(cfg, "simulate", files);
  return {{{"runs", report}, {"config_hash", config_hash(cfg)}}, exit_ok};
}

CommandResult cmd_fit(const RunConfig& cfg, const std::filesystem::path& slope_csv) {
  const auto data = read_slope_csv(slope_csv);
  json r;
  std::vector<SlopeMeasurement> rising;
  for (const auto& d : data)
    if (d.max_slope > 0.0) rising.push_back(d);
  if (rising.empty()) throw NotAboveThresholdError("fit: no point shows a rise; data are not fittable");

  if (data.size() >= 2) {
    const auto lin = fit_threshold_linear(data);
    r["threshold_linear_W"] = lin.threshold;
    r["threshold_linear_sigma_W"] = lin.sigma;
    try {
      r["g0_threshold_rad_s"] = g0_from_threshold(lin.threshold, cfg.system);
    } catch (const Error&) {
      r["g0_threshold_rad_s"] = nullptr;
    }
  }
  if (data.size() < 3) {
    r["fit"] = nullptr;
    r["note"] = "slope fit needs at least 3 points";
    return {r, exit_ok};
  }

  const FitResult fit = fit_slope_power(data, cfg.system);
  r["fit"] = fit_json(fit);

  const auto dir = out_dir(cfg);
  const MaxSlopeModel model(cfg.system);
  double p_max = 0.0;
  for (const auto& d : data) p_max = std::max(p_max, d.pump_power);
  std::string curve = "power_W,model_slope_V_per_s\n";
  const int n_grid = 200;
  for (int i = 0; i <= n_grid; ++i) {
    const double p = 1.1 * p_max * i / n_grid;
    const double s = i == 0 ? 0.0 : fit.a * model.evaluate(p, fit.g0).S_mx;
    curve += format_number(p) + "," + format_number(s) + "\n";
  }
  write_text(dir / "model_curve.csv", curve);
  write_text(dir / "fit.json", r.dump(2) + "\n");
  write_manifest(cfg, "fit", {dir / "model_curve.csv", dir / "fit.json"});
  return {r, fit.converged ? exit_ok : exit_numeric};
}

CommandResult cmd_calibrate_tone(const RunConfig& cfg, const ToneInputs& in) {
  cfg.calibration.tone.validate();
  double am = 0.0, sm = 0.0, at = 0.0, st = 0.0;
  json r;
  if (in.area_mech || in.area_tone) {
    if (!in.area_mech || !in.area_tone) throw ConfigError("calibrate-tone: give both --area-mech and --area-tone");
    am = *in.area_mech;
    at = *in.area_tone;
  } else if (in.spectrum) {
    const auto spec = read_spectrum_csv(*in.spectrum);
    const auto bm = mech_band(cfg);
    const auto bt = tone_band(cfg);
    auto integrate = [&](std::pair<double, double> band, const char* name) {
      try {
        return integrated_area(spec, band);
      } catch (const DataError& e) {
        throw DataError(std::string("calibrate-tone: ") + name + " band [" + format_number(band.first) + ", " +
                        format_number(band.second) + "] Hz: " + e.what());
      }
    };
    const auto a1 = integrate(bm, "mechanical");
    const auto a2 = integrate(bt, "tone");
    am = a1.area;
    sm = a1.sigma;
    at = a2.area;
    st = a2.sigma;
    r["band_mech_Hz"] = {bm.first, bm.second};
    r["band_tone_Hz"] = {bt.first, bt.second};
  } else {
    throw ConfigError("calibrate-tone: give a spectrum CSV or --area-mech/--area-tone");
  }
  const auto t = tone_estimate(cfg, am, sm, at, st, in.detection_factor, in.n_bar);
  r.update(tone_json(t));
  r["beta_rad"] = cfg.calibration.tone.beta;
  r["omega_b_rad_s"] = cfg.calibration.tone.omega_b;
  return {r, exit_ok};
}

CommandResult cmd_pipeline(const RunConfig& cfg) {
  const auto dir = out_dir(cfg);
  const auto res = run_pipeline(cfg, dir);
  const double g_true = res.g0_true;
  const auto& an = cfg.analysis;

  json seeds = json::array();
  std::vector<std::filesystem::path> files;
  for (const auto& s : res.seeds) {
    json j = {{"member", s.member}};
    j["fit"] = s.fit ? fit_json(*s.fit) : json(nullptr);
    j["threshold_linear_W"] = s.threshold ? json(s.threshold->threshold) : json(nullptr);
    j["g0_threshold_rad_s"] = s.g0_threshold ? json(*s.g0_threshold) : json(nullptr);
    if (!s.failure.empty()) j["failure"] = s.failure;
    seeds.push_back(j);
    files.push_back(dir / ("slopes_seed" + std::to_string(s.member) + ".csv"));
    for (const auto& d : s.slopes) files.push_back(dir / "envelopes" / (d.trace_id + ".csv"));
  }

  auto row = [&](const char* method, std::optional<double> g, double tol) {
    json j = {{"method", method}, {"tolerance", tol}};
    if (g) {
      j["g0_rad_s"] = *g;
      j["g0_Hz"] = *g / two_pi;
      j["relative_error"] = *g / g_true - 1.0;
      j["within_tolerance"] = std::abs(*g / g_true - 1.0) <= tol;
    } else {
      j["g0_rad_s"] = nullptr;
      j["within_tolerance"] = false;
    }
    return j;
  };
  json table = json::array();
  table.push_back(row("slope", res.g0_slope_median, an.slope_tolerance));
  table.push_back(row("threshold", res.g0_threshold_median, an.threshold_tolerance));
  table.push_back(row("calibration_tone", res.tone ? std::optional<double>(res.tone->g0) : std::nullopt,
                      an.tone_tolerance));

  json r;
  r["g0_true_rad_s"] = g_true;
  r["g0_true_Hz"] = g_true / two_pi;
  r["comparison"] = table;
  r["slope_g0_spread_rad_s"] = res.g0_slope_spread;
  r["members"] = seeds;
  r["threshold_crossed"] = res.threshold_crossed;
  if (res.tone) {
    r["calibration_tone"] = tone_json(*res.tone);
    files.push_back(dir / "spectrum.csv");
  } else {
    r["calibration_tone"] = {{"failure", res.tone_failure}};
  }
  write_text(dir / "report.json", r.dump(2) + "\n");
  files.push_back(dir / "report.json");
  write_manifest(cfg, "pipeline", files);

  int code = exit_ok;
  if (!res.threshold_crossed) {
    r["note"] = "threshold not crossed at any power";
    code = exit_not_above_threshold;
  } else if (!res.g0_slope_median) {
    code = exit_numeric;
  }
  return {r, code};
}

}  // namespace hopfcal::cli
