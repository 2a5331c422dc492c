#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/cli/commands.hpp"
#include "hopfcal/cli/config.hpp"
#include "hopfcal/cli/io.hpp"
#include "hopfcal/cli/pipeline.hpp"
#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"

using namespace hopfcal;
using namespace hopfcal::cli;
using constants::two_pi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hopfcal_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("power strings") {
  CHECK(parse_power("6.1uW") == doctest::Approx(6.1e-6));
  CHECK(parse_power("21 µW") == doctest::Approx(21e-6));
  CHECK(parse_power("1mW") == doctest::Approx(1e-3));
  CHECK(parse_power("6.1e-6") == doctest::Approx(6.1e-6));
  CHECK(parse_power("3 nW") == doctest::Approx(3e-9));
  CHECK_THROWS_AS(parse_power("5 kW"), ConfigError);
  CHECK_THROWS_AS(parse_power("uW"), ConfigError);
  CHECK_THROWS_AS(parse_power("-1uW"), ConfigError);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config overlays the defaults") {
  const auto d = default_config();
  const auto c = parse_config(R"({
  "system": {
    "mechanical": {"omega_m_2pi": 230000.0},
    "pump": {"power": "10 uW", "mode_match": 0.5}
  },
  "sweep": {"powers": ["10uW", 2e-5]},
  "seed": 7
})");
  CHECK(c.system.mech.omega_m == doctest::Approx(two_pi * 230000.0));
  CHECK(c.system.pump.power == doctest::Approx(5e-6));
  REQUIRE(c.sweep.powers.size() == 2);
  CHECK(c.sweep.powers[0] == doctest::Approx(5e-6));
  CHECK(c.sweep.powers[1] == doctest::Approx(1e-5));
  CHECK(c.seed == 7);
  CHECK(c.system.mech.gamma_m == d.system.mech.gamma_m);
  CHECK(c.analysis.lockin_bandwidth == d.analysis.lockin_bandwidth);
}

TEST_CASE("config errors cite the line") {
  const std::string unknown = "{\n  \"system\": {\n    \"mechanical\": {\n      \"omega_mm\": 1.0\n    }\n  }\n}";
  const auto msg = error_of(unknown);
  CHECK(msg.find("omega_mm") != std::string::npos);
  CHECK(msg.find(":4") != std::string::npos);
  CHECK(error_of("{\"seed\": 1,\n \"sweep\": {\"seeds\": 0}}").find(":2") != std::string::npos);
  CHECK_FALSE(error_of("{\"system\": {\"g0\": 2.0, \"g0_2pi\": 0.3}}").empty());
  CHECK_FALSE(error_of("{\"system\": {\"g0\": -1.0}}").empty());
  CHECK_FALSE(error_of("{\"simulation\": {\"backend\": \"gpu\"}}").empty());
  CHECK_FALSE(error_of("{ not json").empty());
  CHECK_FALSE(error_of("{\"calibration\": {\"beta\": \"big\"}}").empty());
}

TEST_CASE("config round trip through canonical JSON") {
  const auto d = default_config();
  const auto again = parse_config(to_json(d).dump());
  CHECK(to_json(again) == to_json(d));
  CHECK(config_hash(again) == config_hash(d));
  auto other = d;
  other.seed = 99;
  CHECK(config_hash(other) != config_hash(d));
}

TEST_CASE("derive reports the reference quantities") {
  const auto r = cmd_derive(default_config()).report;
  CHECK(r["n_bar"].get<double>() == doctest::Approx(2.6753960e7).epsilon(1e-6));
  CHECK(r["x_zpf_m"].get<double>() == doctest::Approx(4.5817135e-16).epsilon(1e-6));
  CHECK(r["threshold_constant_W"].get<double>() == doctest::Approx(2.643423e-12).epsilon(1e-5));
  CHECK(r["detection_factor"].get<double>() == doctest::Approx(5.652597).epsilon(1e-5));

  auto resonant = default_config();
  resonant.system.pump.bare_detuning = 0.0;
  resonant.system.static_shift = {0.0, 0.0};
  CHECK(cmd_derive(resonant).report["threshold_power_W"] == "none (no antidamping)");

  auto doubled = default_config();
  doubled.system.g0 *= 2.0;
  const double p1 = r["threshold_power_W"].get<double>();
  const double p2 = cmd_derive(doubled).report["threshold_power_W"].get<double>();
  CHECK(p2 == doctest::Approx(p1 / 4.0).epsilon(1e-9));
}

TEST_CASE("CSV readers reject malformed input") {
  const auto dir = scratch("csv");
  write_text(dir / "bad_header.csv", "power,slope\n1,2\n");
  CHECK_THROWS_AS(read_slope_csv(dir / "bad_header.csv"), DataError);
  write_text(dir / "bad_cell.csv", "power_W,slope_V_per_s,sigma\n1e-5,abc,0\n");
  try {
    read_slope_csv(dir / "bad_cell.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  write_text(dir / "short.csv", "freq_Hz,psd_V2_per_Hz\n1.0\n");
  CHECK_THROWS_AS(read_spectrum_csv(dir / "short.csv"), DataError);
  CHECK_THROWS_AS(read_spectrum_csv(dir / "missing.csv"), DataError);

  const std::vector<SlopeMeasurement> data{{5e-6, 1.5e-4, 0.0, ""}, {1e-5, 3.25e-4, 1e-6, ""}};
  write_slope_csv(dir / "ok.csv", data);
  const auto back = read_slope_csv(dir / "ok.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].pump_power == data[1].pump_power);
  CHECK(back[1].max_slope == data[1].max_slope);
  CHECK(back[1].uncertainty == data[1].uncertainty);
}

TEST_CASE("calibrate-tone from areas") {
  auto cfg = default_config();
  ToneInputs in;
  in.area_mech = 2.8e-10;
  in.area_tone = 1.669e-8;
  in.detection_factor = 5.65;
  in.n_bar = 2.676e7;
  const auto r = cmd_calibrate_tone(cfg, in).report;
  CHECK(r["g0_Hz"].get<double>() == doctest::Approx(0.327).epsilon(0.01));

  cfg.calibration.tone.beta = 0.0;
  CHECK_THROWS_AS(cmd_calibrate_tone(cfg, in), DomainError);
  ToneInputs half;
  half.area_mech = 1.0;
  CHECK_THROWS_AS(cmd_calibrate_tone(default_config(), half), ConfigError);
}

TEST_CASE("calibrate-tone from a synthetic spectrum file") {
  auto cfg = default_config();
  const auto dir = scratch("tone");
  write_spectrum_csv(dir / "spectrum.csv", synthetic_tone_spectrum(cfg, 1));
  ToneInputs in;
  in.spectrum = dir / "spectrum.csv";
  const auto r = cmd_calibrate_tone(cfg, in).report;
  CHECK(r["g0_rad_s"].get<double>() == doctest::Approx(cfg.system.g0).epsilon(0.02));
}

TEST_CASE("simulate is deterministic and flags sub-threshold runs") {
  auto cfg = default_config();
  const auto dir_a = scratch("sim_a"), dir_b = scratch("sim_b");
  cfg.output_dir = dir_a.string();
  const auto a = cmd_simulate(cfg, {3e-6, 21e-6});
  cfg.output_dir = dir_b.string();
  cmd_simulate(cfg, {3e-6, 21e-6});
  for (const char* f : {"envelope_3uW.csv", "envelope_21uW.csv", "amplitude_21uW.csv"}) {
    const auto text = slurp(dir_a / f);
    CHECK(text.size() > 100);
    CHECK(text == slurp(dir_b / f));
  }
  CHECK(fs::exists(dir_a / "manifest.json"));
  const auto& runs = a.report["runs"];
  REQUIRE(runs.size() == 2);
  CHECK_FALSE(runs[0]["grew_tenfold"].get<bool>());
  CHECK(runs[0]["max_slope_m_per_s"].is_null());
  CHECK(runs[1]["grew_tenfold"].get<bool>());
  CHECK(runs[1]["max_slope_m_per_s"].get<double>() > 0.0);
}

TEST_CASE("fit command on a model slope table") {
  auto cfg = default_config();
  const auto dir = scratch("fit");
  cfg.output_dir = dir.string();
  const MaxSlopeModel model(cfg.system);
  std::vector<SlopeMeasurement> data;
  for (double p : {8e-6, 12e-6, 16e-6, 20e-6, 25e-6, 30e-6}) data.push_back({p, 3e-4 * model(p, cfg.system.g0), 0.0, ""});
  write_slope_csv(dir / "slopes.csv", data);
  const auto r = cmd_fit(cfg, dir / "slopes.csv");
  CHECK(r.exit_code == exit_ok);
  CHECK(r.report["fit"]["g0_rad_s"].get<double>() == doctest::Approx(cfg.system.g0).epsilon(1e-6));
  CHECK(fs::exists(dir / "model_curve.csv"));

  write_slope_csv(dir / "dead.csv", {{1e-6, 0.0, 0.0, ""}, {2e-6, 0.0, 0.0, ""}, {3e-6, 0.0, 0.0, ""}});
  CHECK_THROWS_AS(cmd_fit(cfg, dir / "dead.csv"), NotAboveThresholdError);
}
