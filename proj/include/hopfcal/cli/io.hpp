#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hopfcal/demod.hpp"
#include "hopfcal/estimation.hpp"
#include "hopfcal/langevin.hpp"
#include "hopfcal/spectral.hpp"

namespace hopfcal::cli {

// Numeric CSV with a fixed header. Throws DataError naming the file and line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

// Columns: t_s, then re/im of alpha_pr, alpha_pm and beta (dimensionless).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
// Columns: t_s, A_re, A_im (rotating-frame amplitude, dimensionless).
void write_envelope_amplitude_csv(const std::filesystem::path& path, const EnvelopeTrajectory& env);
// Columns: t_s, envelope_m.
void write_envelope_csv(const std::filesystem::path& path, const EnvelopeTrace& env);
EnvelopeTrace read_envelope_csv(const std::filesystem::path& path);

// Columns: freq_Hz, psd_V2_per_Hz.
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumRecord& spec);
SpectrumRecord read_spectrum_csv(const std::filesystem::path& path);

// Columns: power_W, slope_V_per_s, sigma.
void write_slope_csv(const std::filesystem::path& path, const std::vector<SlopeMeasurement>& data);
std::vector<SlopeMeasurement> read_slope_csv(const std::filesystem::path& path);

// Full-precision, locale-independent number formatting.
std::string format_number(double v);

// Writes text, creating parent directories. Throws DataError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hopfcal::cli
