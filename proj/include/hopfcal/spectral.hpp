#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hopfcal {

// Homodyne readout chain. Only ratios of peak areas enter g0, so S_0 acts
// as an arbitrary positive scale.
struct DetectionChain {
  double photodiode_sensitivity = 1.0;  // A/W
  double transimpedance = 1.0;          // V/A
  double local_oscillator_power = 1.0;  // W
  double input_power = 1.0;             // W
  double termination = 1.0;             // ohm

  void validate() const;
  // (2 g_T S)^2 P_lo P_in / R_0
  double scale() const;
};

struct CalibrationTone {
  double beta = 0.0;     // rad
  double omega_b = 0.0;  // rad/s

  // Throws DomainError unless beta > 0 and omega_b > 0.
  void validate() const;
  // True when the small-depth closed forms start to lose accuracy.
  bool beyond_small_depth() const { return beta > 0.2; }
};

struct SpectrumRecord {
  std::vector<double> freqs;  // Hz, strictly increasing
  std::vector<double> psd;    // V^2/Hz, single-sided
  std::string metadata;

  void validate() const;
};

struct Sidebands {
  std::complex<double> plus;
  std::complex<double> minus;
};

// Optical cavity seen by the homodyne probe.
struct ReflectionParams {
  double detuning = 0.0;  // rad/s
  double kappa = 0.0;     // rad/s
  double kappa_in = 0.0;  // rad/s
  double omega_m = 0.0;   // rad/s
};

// Reflection sidebands at the mechanical frequency. The default closed form
// keeps only J_0(-xi) J_1(-xi) (xi << 1); `general` sums the full Bessel
// series over n (small beta).
Sidebands reflection_sidebands_mech(double xi, double beta, const ReflectionParams& p);
Sidebands reflection_sidebands_mech_general(double xi, double beta, const ReflectionParams& p);

// Reflection sidebands at the calibration tone omega_b.
Sidebands reflection_sidebands_cal(double beta, double xi, double omega_b, const ReflectionParams& p);
Sidebands reflection_sidebands_cal_general(double beta, double xi, double omega_b,
                                           const ReflectionParams& p);

// (S_0 / 4) |R_+ - R_-^*|^2: the integrated single-sided peak.
double homodyne_psd_peak(const Sidebands& r, const DetectionChain& chain);

// sqrt(2) (kappa / 2 kappa_in) sqrt(1 + (kappa - 2 kappa_in)^2 / omega_b^2)
//   sqrt((kappa^2 + omega_m^2) / (kappa^2 + omega_b^2)).
double detection_factor(double kappa, double kappa_in, double omega_m, double omega_b);

// Calibration-tone estimate
// g0 = (1 / sqrt(2 n_bar)) (beta omega_b / sqrt 2) sqrt(dV2_m / dV2_b) K.
double g0_from_calibration(double dV2_m, double dV2_b, const CalibrationTone& tone, double n_bar,
                           double K);

// Closed-form sqrt(dV2_m / dV2_b) for a resonant probe with xi = g0 sqrt(2 n_bar) / omega_m.
double calibration_ratio(double g0, double n_bar, const CalibrationTone& tone, double kappa,
                         double kappa_in, double omega_m);

struct AreaOptions {
  double plateau_fraction = 0.2;  // share of the band used for each baseline fit
};

struct AreaEstimate {
  double area = 0.0;       // V^2
  double sigma = 0.0;      // standard error from the two baseline fits
  double peak_frequency = 0.0;
  std::vector<double> cumulative;  // running integral over the band
};

// Background-subtracted peak area: cumulative integral over the band,
// straight lines through its lower and upper plateaus, distance between the
// lines at the peak.
AreaEstimate integrated_area(const SpectrumRecord& spec, std::pair<double, double> band,
                             const AreaOptions& opts = {});

// Inverts J_1(beta) / J_0(beta) = ratio on [0, j_{0,1}).
double modulation_depth_from_ratio(double ratio);

struct SyntheticSpectrumOptions {
  double f_low = 0.0;        // Hz
  double f_high = 0.0;       // Hz
  double resolution = 0.1;   // Hz
  double background = 0.0;   // V^2/Hz
  double mech_linewidth = 0.0;  // Hz FWHM; 0 selects gamma_m / pi
  double tone_linewidth = 0.0;  // Hz FWHM; 0 selects 3 bins
  int averages = 0;             // > 0 draws averaged-periodogram scatter
  std::uint64_t seed = 1;
};

// Homodyne spectrum of the resonant probe: Lorentzian mechanical and tone
// peaks whose areas follow the small-signal reflection sidebands, on a flat floor.
SpectrumRecord synthesize_calibration_spectrum(const ReflectionParams& probe, double xi, const CalibrationTone& tone,
                                               double gamma_m, const DetectionChain& chain,
                                               const SyntheticSpectrumOptions& opts);

// Single-sided Welch estimate, periodic Hann window, density scaling.
SpectrumRecord welch_psd(std::span<const double> trace, double sample_rate, std::size_t segment_length,
                         double overlap = 0.5);

}  // namespace hopfcal
