#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/demod.hpp"
#include "hopfcal/levenberg_marquardt.hpp"

namespace hopfcal {

struct SlopeMeasurement {
  double pump_power = 0.0;   // W, effective
  double max_slope = 0.0;    // V/s (m/s once calibrated)
  double uncertainty = 0.0;  // same units; 0 means "not provided"
  std::string trace_id;
};

struct SlopeExtractionOptions {
  double plateau_fraction = 0.1;  // head/tail share of the trace averaged as plateaus
  double rise_low = 0.1;          // rise is bracketed by these fractions of the plateau span
  double rise_high = 0.9;
  double window_fraction = 0.05;  // of the rise duration
  std::optional<double> window;   // seconds; overrides window_fraction
  double min_growth = 3.0;        // final / initial plateau required for a rise
  bool log_scale = false;         // fit ln V instead of V (slope then in 1/s)
};

struct SlopeEstimate {
  double slope = 0.0;
  double sigma = 0.0;
  double time = 0.0;  // center of the best window
  std::size_t window_samples = 0;
  double rise_start = 0.0;  // low crossing
  double rise_end = 0.0;    // high crossing
};

// Largest sliding-window least-squares slope during the rise. Empty when the
// trace shows no rise (not above threshold). Throws DataError on malformed
// traces.
std::optional<SlopeEstimate> extract_max_slope(const EnvelopeTrace& env,
                                               const SlopeExtractionOptions& opts = {});

struct FitResult {
  double g0 = 0.0;  // rad/s
  double a = 0.0;   // V/s
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // order (g0, a)
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

struct SlopeFitOptions {
  std::optional<double> g0_start;  // default: from the linear threshold fit
  std::optional<double> a_start;   // default: closed form at the starting g0
  std::optional<double> fixed_g0;  // fit a only
  LmOptions lm;
  RootSearchOptions search;
};

// Weighted fit of slope_k = a S_mx(P_k; g0) over (g0, a) by Levenberg-Marquardt.
// `sys` supplies everything but g0 (and the pump power). With no per-point
// uncertainties the weights are equal and the covariance is scaled by the
// reduced chi^2.
FitResult fit_slope_power(const std::vector<SlopeMeasurement>& data, const SystemParams& sys,
                          const SlopeFitOptions& opts = {});

struct ThresholdFit {
  double threshold = 0.0;  // W
  double sigma = 0.0;      // W
  double slope = 0.0;      // c in slope = c (P - P_th)
};

// Weighted least-squares line through (P_k, slope_k); returns the abscissa intercept.
ThresholdFit fit_threshold_linear(const std::vector<SlopeMeasurement>& data);

// sqrt(2 n_bar) x_zpf / RMS(V) for a thermal, pump-off segment (m per unit of V).
double displacement_calibration(const EnvelopeTrace& thermal, double n_bar, double x_zpf);

}  // namespace hopfcal
