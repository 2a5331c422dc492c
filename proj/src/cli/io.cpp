#include "hopfcal/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hopfcal/errors.hpp"

namespace hopfcal::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string joined(const std::vector<std::string>& cols) {
  std::string s;
  for (const auto& c : cols) s += (s.empty() ? "" : ",") + c;
  return s;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      if (cells != expected)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected header '" + joined(expected) +
                        "', found '" + joined(cells) + "'");
      t.header = cells;
      continue;
    }
    if (cells.size() != expected.size())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(expected.size()) + " columns, found " + std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = 0.0;
      const auto* first = cells[i].data();
      const auto* last = first + cells[i].size();
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": column '" + expected[i] +
                        "' is not a finite number: '" + cells[i] + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw DataError(path.string() + ": empty file, expected header '" + joined(expected) + "'");
  return t;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::string s = "t_s,alpha_pr_re,alpha_pr_im,alpha_pm_re,alpha_pm_im,beta_re,beta_im\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    s += format_number(traj.times[i]);
    for (const auto& z : {traj.alpha_pr[i], traj.alpha_pm[i], traj.beta[i]})
      s += "," + format_number(z.real()) + "," + format_number(z.imag());
    s += "\n";
  }
  write_text(path, s);
}

void write_envelope_amplitude_csv(const std::filesystem::path& path, const EnvelopeTrajectory& env) {
  std::string s = "t_s,A_re,A_im\n";
  for (std::size_t i = 0; i < env.times.size(); ++i)
    s += format_number(env.times[i]) + "," + format_number(env.amplitude[i].real()) + "," +
         format_number(env.amplitude[i].imag()) + "\n";
  write_text(path, s);
}

void write_envelope_csv(const std::filesystem::path& path, const EnvelopeTrace& env) {
  std::string s = "t_s,envelope_m\n";
  for (std::size_t i = 0; i < env.times.size(); ++i)
    s += format_number(env.times[i]) + "," + format_number(env.V[i]) + "\n";
  write_text(path, s);
}

EnvelopeTrace read_envelope_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"t_s", "envelope_m"});
  EnvelopeTrace env;
  for (const auto& r : t.rows) {
    env.times.push_back(r[0]);
    env.V.push_back(r[1]);
  }
  return env;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumRecord& spec) {
  std::string s = "freq_Hz,psd_V2_per_Hz\n";
  for (std::size_t i = 0; i < spec.freqs.size(); ++i)
    s += format_number(spec.freqs[i]) + "," + format_number(spec.psd[i]) + "\n";
  write_text(path, s);
}

SpectrumRecord read_spectrum_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"freq_Hz", "psd_V2_per_Hz"});
  SpectrumRecord spec;
  for (const auto& r : t.rows) {
    spec.freqs.push_back(r[0]);
    spec.psd.push_back(r[1]);
  }
  spec.metadata = path.filename().string();
  try {
    spec.validate();
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return spec;
}

void write_slope_csv(const std::filesystem::path& path, const std::vector<SlopeMeasurement>& data) {
  std::string s = "power_W,slope_V_per_s,sigma\n";
  for (const auto& d : data)
    s += format_number(d.pump_power) + "," + format_number(d.max_slope) + "," + format_number(d.uncertainty) + "\n";
  write_text(path, s);
}

std::vector<SlopeMeasurement> read_slope_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"power_W", "slope_V_per_s", "sigma"});
  std::vector<SlopeMeasurement> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    if (!(r[0] > 0.0) || r[1] < 0.0 || r[2] < 0.0)
      throw DataError(path.string() + ": row " + std::to_string(i + 1) +
                      ": need power_W > 0, slope_V_per_s >= 0, sigma >= 0");
    out.push_back({r[0], r[1], r[2], "row" + std::to_string(i + 1)});
  }
  if (out.empty()) throw DataError(path.string() + ": no data rows");
  return out;
}

}  // namespace hopfcal::cli
