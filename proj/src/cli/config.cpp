#include "hopfcal/cli/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"

namespace hopfcal::cli {

namespace {

using nlohmann::json;
using constants::two_pi;

std::size_t line_of(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Walks the JSON tree alongside the raw text so diagnostics can cite a line.
class Reader {
 public:
  Reader(const json& node, std::vector<std::string> path, const std::string& text, const std::string& source)
      : node_(node), path_(std::move(path)), text_(text), source_(source) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what, const std::string& key = "") const {
    auto path = path_;
    if (!key.empty()) path.push_back(key);
    std::size_t pos = 0;
    bool found = true;
    for (const auto& k : path) {
      const auto at = text_.find("\"" + k + "\"", pos);
      if (at == std::string::npos) {
        found = false;
        break;
      }
      pos = at;
    }
    std::string dotted;
    for (const auto& k : path) dotted += (dotted.empty() ? "" : ".") + k;
    std::ostringstream msg;
    msg << source_;
    if (found && !path.empty()) msg << ":" << line_of(text_, pos);
    msg << ": " << (dotted.empty() ? "<root>" : dotted) << ": " << what;
    throw ConfigError(msg.str());
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json* take(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail("expected a number", key);
      out = v->get<double>();
      if (!std::isfinite(out)) fail("must be finite", key);
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail("expected an integer", key);
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail("expected true or false", key);
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail("expected a string", key);
      out = v->get<std::string>();
    }
  }

  // `key` in rad/s or `key_2pi` in Hz.
  void rate(const std::string& key, double& out) {
    const bool plain = has(key);
    const bool hz = has(key + "_2pi");
    if (plain && hz) fail("give either " + key + " or " + key + "_2pi, not both", key);
    if (plain) {
      number(key, out);
    } else if (hz) {
      double f = 0.0;
      number(key + "_2pi", f);
      out = two_pi * f;
    }
    seen_.insert(key);
    seen_.insert(key + "_2pi");
  }

  void power(const std::string& key, double& out) {
    if (const json* v = take(key)) out = power_value(*v, key);
  }

  double power_value(const json& v, const std::string& key) const {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return parse_power(v.get<std::string>());
      } catch (const ConfigError& e) {
        fail(e.what(), key);
      }
    }
    fail("expected a power (number in W or string such as \"6.1uW\")", key);
  }

  void band(const std::string& key, std::pair<double, double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        fail("expected [f_low, f_high] in Hz", key);
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
      const bool automatic = out.first == 0.0 && out.second == 0.0;
      if (!automatic && (!(out.second > out.first) || !(out.first >= 0.0)))
        fail("need 0 <= f_low < f_high, or [0, 0] for the automatic band", key);
    }
  }

  Reader child(const std::string& key) {
    const json* v = take(key);
    auto path = path_;
    path.push_back(key);
    static const json empty = json::object();
    return Reader(v ? *v : empty, path, text_, source_);
  }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!seen_.count(key)) fail("unknown key", key);
  }

  const std::vector<std::string>& path() const { return path_; }

 private:
  const json& node_;
  std::vector<std::string> path_;
  const std::string& text_;
  const std::string& source_;
  std::set<std::string> seen_;
};

void read_mode(Reader r, OpticalModeParams& m) {
  r.rate("kappa_in", m.kappa_in);
  if (r.has("kappa") || r.has("kappa_2pi")) {
    if (r.has("kappa_ex") || r.has("kappa_ex_2pi")) r.fail("give either kappa or kappa_ex, not both", "kappa");
    double total = 0.0;
    r.rate("kappa", total);
    m.kappa_ex = total - m.kappa_in;
  }
  r.rate("kappa_ex", m.kappa_ex);
  r.rate("detuning", m.bare_detuning);
  r.number("wavelength", m.wavelength);
  r.power("power", m.power);
  r.number("mode_match", m.mode_match);
  if (!(m.mode_match > 0.0 && m.mode_match <= 1.0)) r.fail("mode_match must lie in (0, 1]", "mode_match");
  m.power *= m.mode_match;
  if (r.has("coupling") || r.has("coupling_2pi")) {
    double g = 0.0;
    r.rate("coupling", g);
    m.coupling = g;
  }
  r.finish();
}

void read_system(Reader r, SystemParams& s) {
  {
    Reader m = r.child("mechanical");
    m.rate("omega_m", s.mech.omega_m);
    m.rate("gamma_m", s.mech.gamma_m);
    m.number("m_eff", s.mech.m_eff);
    m.number("temperature", s.mech.temperature);
    std::string occ = s.mech.occupation == OccupationModel::bose ? "bose" : "classical";
    m.string("occupation", occ);
    if (occ == "classical") s.mech.occupation = OccupationModel::classical;
    else if (occ == "bose") s.mech.occupation = OccupationModel::bose;
    else m.fail("expected \"classical\" or \"bose\"", "occupation");
    m.finish();
  }
  read_mode(r.child("pump"), s.pump);
  read_mode(r.child("probe"), s.probe);
  r.rate("g0", s.g0);
  if (const json* v = r.take("static_shift")) {
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
      r.fail("expected [re, im]", "static_shift");
    s.static_shift = {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }
  r.finish();
  try {
    s.validate();
  } catch (const DomainError& e) {
    r.fail(e.what());
  }
}

void read_simulation(Reader r, SimulationSettings& s) {
  std::string backend = s.backend == Backend::full ? "full" : "envelope";
  r.string("backend", backend);
  if (backend == "envelope") s.backend = Backend::envelope;
  else if (backend == "full") s.backend = Backend::full;
  else r.fail("expected \"envelope\" or \"full\"", "backend");
  r.number("dt", s.sim.dt);
  r.number("duration", s.sim.duration);
  r.number("pump_on_time", s.sim.pump_on_time);
  r.boolean("thermal_noise", s.sim.thermal_noise);
  r.boolean("optical_noise", s.sim.optical_noise);
  r.number("record_interval", s.record_interval);
  r.finish();
  if (s.sim.dt < 0.0) r.fail("must be >= 0 (0 selects the default step)", "dt");
  if (s.sim.duration < 0.0) r.fail("must be >= 0 (0 selects an automatic duration)", "duration");
  if (s.sim.pump_on_time < 0.0) r.fail("must be >= 0", "pump_on_time");
  if (!(s.record_interval > 0.0)) r.fail("must be > 0", "record_interval");
}

void read_analysis(Reader r, AnalysisSettings& a) {
  r.number("lockin_bandwidth", a.lockin_bandwidth);
  r.integer("lockin_order", a.lockin_order);
  r.number("plateau_fraction", a.extraction.plateau_fraction);
  r.number("rise_low", a.extraction.rise_low);
  r.number("rise_high", a.extraction.rise_high);
  r.number("window_fraction", a.extraction.window_fraction);
  if (r.has("window")) {
    double w = 0.0;
    r.number("window", w);
    if (!(w > 0.0)) r.fail("must be > 0", "window");
    a.extraction.window = w;
  }
  r.number("min_growth", a.extraction.min_growth);
  r.boolean("log_scale", a.extraction.log_scale);
  r.number("threshold_tolerance", a.threshold_tolerance);
  r.number("slope_tolerance", a.slope_tolerance);
  r.number("tone_tolerance", a.tone_tolerance);
  r.finish();
  if (!(a.lockin_bandwidth > 0.0)) r.fail("must be > 0", "lockin_bandwidth");
  if (a.lockin_order < 1 || a.lockin_order > 8) r.fail("must lie in 1..8", "lockin_order");
  const auto& e = a.extraction;
  if (!(e.plateau_fraction > 0.0 && e.plateau_fraction < 0.5)) r.fail("must lie in (0, 0.5)", "plateau_fraction");
  if (!(e.rise_low > 0.0 && e.rise_low < e.rise_high && e.rise_high < 1.0))
    r.fail("need 0 < rise_low < rise_high < 1", "rise_low");
  if (!(e.window_fraction > 0.0 && e.window_fraction <= 1.0)) r.fail("must lie in (0, 1]", "window_fraction");
  if (!(e.min_growth > 1.0)) r.fail("must be > 1", "min_growth");
}

void read_sweep(Reader r, SweepSettings& s, double mode_match) {
  if (const json* v = r.take("powers")) {
    if (!v->is_array() || v->empty()) r.fail("expected a non-empty list of powers", "powers");
    s.powers.clear();
    for (const auto& p : *v) {
      const double w = r.power_value(p, "powers");
      if (!(w > 0.0)) r.fail("powers must be > 0", "powers");
      s.powers.push_back(w * mode_match);
    }
  }
  r.integer("seeds", s.seeds);
  r.finish();
  if (s.seeds < 1) r.fail("must be >= 1", "seeds");
}

void read_calibration(Reader r, CalibrationSettings& c) {
  r.number("beta", c.tone.beta);
  r.rate("omega_b", c.tone.omega_b);
  r.band("band_mech", c.band_mech);
  r.band("band_tone", c.band_tone);
  r.number("resolution", c.resolution);
  r.number("background", c.background);
  r.integer("averages", c.averages);
  {
    Reader d = r.child("detection");
    d.number("photodiode_sensitivity", c.chain.photodiode_sensitivity);
    d.number("transimpedance", c.chain.transimpedance);
    d.number("local_oscillator_power", c.chain.local_oscillator_power);
    d.number("input_power", c.chain.input_power);
    d.number("termination", c.chain.termination);
    d.finish();
    try {
      c.chain.validate();
    } catch (const DomainError& e) {
      d.fail(e.what());
    }
  }
  r.finish();
  if (!(c.tone.beta >= 0.0)) r.fail("must be >= 0", "beta");
  if (!(c.tone.omega_b > 0.0)) r.fail("must be > 0", "omega_b");
  if (!(c.resolution > 0.0)) r.fail("must be > 0", "resolution");
  if (!(c.background >= 0.0)) r.fail("must be >= 0", "background");
  if (c.averages < 0) r.fail("must be >= 0", "averages");
}

json mode_json(const OpticalModeParams& m) {
  json j = {{"kappa_in", m.kappa_in}, {"kappa_ex", m.kappa_ex}, {"detuning", m.bare_detuning},
            {"wavelength", m.wavelength}, {"power", m.power}, {"mode_match", 1.0}};
  if (m.coupling) j["coupling"] = *m.coupling;
  return j;
}

}  // namespace

double parse_power(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse power '" + text + "'");
  }
  const std::string unit = s.substr(used);
  double scale = 0.0;
  if (unit.empty() || unit == "W") scale = 1.0;
  else if (unit == "mW") scale = 1e-3;
  else if (unit == "uW" || unit == "\xC2\xB5W" || unit == "\xCE\xBCW") scale = 1e-6;
  else if (unit == "nW") scale = 1e-9;
  else if (unit == "pW") scale = 1e-12;
  else throw ConfigError("unknown power unit '" + unit + "' in '" + text + "' (use W, mW, uW, nW, pW)");
  if (!std::isfinite(value) || value < 0.0) throw ConfigError("power must be finite and >= 0: '" + text + "'");
  return value * scale;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RunConfig default_config() {
  RunConfig c;
  c.system = reference_system();
  c.sweep.powers = {5e-6, 10e-6, 15e-6, 20e-6, 25e-6, 30e-6};
  c.calibration.tone = {0.0195, two_pi * 237.0e3};
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON: " + e.what());
  }
  RunConfig cfg = default_config();
  Reader root(doc, {}, text, source);
  read_system(root.child("system"), cfg.system);
  read_simulation(root.child("simulation"), cfg.simulation);
  read_analysis(root.child("analysis"), cfg.analysis);
  read_sweep(root.child("sweep"), cfg.sweep, cfg.system.pump.mode_match);
  read_calibration(root.child("calibration"), cfg.calibration);
  root.string("output_dir", cfg.output_dir);
  if (const json* v = root.take("seed")) {
    if (!v->is_number_unsigned()) root.fail("expected a non-negative integer", "seed");
    cfg.seed = v->get<std::uint64_t>();
  }
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

json to_json(const RunConfig& c) {
  const auto& s = c.system;
  json j;
  j["system"] = {
      {"mechanical",
       {{"omega_m", s.mech.omega_m}, {"gamma_m", s.mech.gamma_m}, {"m_eff", s.mech.m_eff},
        {"temperature", s.mech.temperature},
        {"occupation", s.mech.occupation == OccupationModel::bose ? "bose" : "classical"}}},
      {"pump", mode_json(s.pump)},
      {"probe", mode_json(s.probe)},
      {"g0", s.g0},
      {"static_shift", {s.static_shift.real(), s.static_shift.imag()}}};
  const auto& sim = c.simulation;
  j["simulation"] = {{"backend", sim.backend == Backend::full ? "full" : "envelope"},
                     {"dt", sim.sim.dt},
                     {"duration", sim.sim.duration},
                     {"pump_on_time", sim.sim.pump_on_time},
                     {"thermal_noise", sim.sim.thermal_noise},
                     {"optical_noise", sim.sim.optical_noise},
                     {"record_interval", sim.record_interval}};
  const auto& a = c.analysis;
  j["analysis"] = {{"lockin_bandwidth", a.lockin_bandwidth},
                   {"lockin_order", a.lockin_order},
                   {"plateau_fraction", a.extraction.plateau_fraction},
                   {"rise_low", a.extraction.rise_low},
                   {"rise_high", a.extraction.rise_high},
                   {"window_fraction", a.extraction.window_fraction},
                   {"min_growth", a.extraction.min_growth},
                   {"log_scale", a.extraction.log_scale},
                   {"threshold_tolerance", a.threshold_tolerance},
                   {"slope_tolerance", a.slope_tolerance},
                   {"tone_tolerance", a.tone_tolerance}};
  if (a.extraction.window) j["analysis"]["window"] = *a.extraction.window;
  j["sweep"] = {{"powers", c.sweep.powers}, {"seeds", c.sweep.seeds}};
  const auto& cal = c.calibration;
  j["calibration"] = {{"beta", cal.tone.beta},
                      {"omega_b", cal.tone.omega_b},
                      {"band_mech", {cal.band_mech.first, cal.band_mech.second}},
                      {"band_tone", {cal.band_tone.first, cal.band_tone.second}},
                      {"resolution", cal.resolution},
                      {"background", cal.background},
                      {"averages", cal.averages},
                      {"detection",
                       {{"photodiode_sensitivity", cal.chain.photodiode_sensitivity},
                        {"transimpedance", cal.chain.transimpedance},
                        {"local_oscillator_power", cal.chain.local_oscillator_power},
                        {"input_power", cal.chain.input_power},
                        {"termination", cal.chain.termination}}}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

}  // namespace hopfcal::cli
