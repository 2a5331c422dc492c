#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"
#include "hopfcal/spectral.hpp"

namespace hopfcal {

namespace {

using cd = std::complex<double>;

void check_reflection(double xi, double beta, const ReflectionParams& p) {
  if (!std::isfinite(xi) || xi < 0.0) throw DomainError("reflection: xi must be >= 0");
  if (!std::isfinite(beta) || beta < 0.0) throw DomainError("reflection: beta must be >= 0");
  if (!(p.kappa > 0.0) || p.kappa_in < 0.0 || !(p.omega_m > 0.0) || !std::isfinite(p.detuning))
    throw DomainError("reflection: need kappa > 0, kappa_in >= 0, omega_m > 0");
}

// Least-squares line through (x, y); returns value and standard error at x0.
struct LinePrediction {
  double value;
  double sigma;
};

LinePrediction fit_line_at(std::span<const double> x, std::span<const double> y, double x0) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double value = my + slope * (x0 - mx);
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + slope * (x[i] - mx));
    rss += r * r;
  }
  double sigma = 0.0;
  if (x.size() > 2 && sxx > 0.0) {
    const double s2 = rss / (n - 2.0);
    sigma = std::sqrt(s2 * (1.0 / n + (x0 - mx) * (x0 - mx) / sxx));
  }
  return {value, sigma};
}

}  // namespace

void DetectionChain::validate() const {
  if (!(photodiode_sensitivity > 0.0 && transimpedance > 0.0 && local_oscillator_power > 0.0 &&
        input_power > 0.0 && termination > 0.0))
    throw DomainError("detection chain: all entries must be > 0");
}

double DetectionChain::scale() const {
  validate();
  const double gs = 2.0 * transimpedance * photodiode_sensitivity;
  return gs * gs * local_oscillator_power * input_power / termination;
}

void CalibrationTone::validate() const {
  if (!std::isfinite(beta) || !(beta > 0.0)) throw DomainError("calibration tone: beta must be > 0");
  if (!std::isfinite(omega_b) || !(omega_b > 0.0))
    throw DomainError("calibration tone: omega_b must be > 0");
}

void SpectrumRecord::validate() const {
  if (freqs.size() != psd.size() || freqs.size() < 2)
    throw DataError("spectrum: freqs and psd must have equal length >= 2");
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (!(freqs[i] > freqs[i - 1])) throw DataError("spectrum: frequencies must be strictly increasing");
  for (double v : psd)
    if (!(v >= 0.0)) throw DataError("spectrum: PSD must be non-negative (non-monotonic cumulative)");
}

Sidebands reflection_sidebands_mech(double xi, double beta, const ReflectionParams& p) {
  check_reflection(xi, beta, p);
  const cd loss(p.kappa, -p.detuning);  // kappa - i Delta
  const cd i(0.0, 1.0);
  const cd common = bessel_j(0, -beta) * bessel_j(0, -xi) * bessel_j(1, -xi) * (2.0 * p.kappa_in) / loss;
  const cd w = i * p.omega_m;
  return {common * (-w) / (w + loss), common * w / (w - loss)};
}

Sidebands reflection_sidebands_mech_general(double xi, double beta, const ReflectionParams& p) {
  check_reflection(xi, beta, p);
  const int n_max = kernel_truncation(xi);
  cd plus, minus;
  for (int n = -n_max; n <= n_max; ++n) {
    const cd den(p.kappa, n * p.omega_m - p.detuning);
    const double jn = bessel_j(n, -xi);
    plus += jn * bessel_j(n - 1, -xi) / den;
    minus += jn * bessel_j(n + 1, -xi) / den;
  }
  const double pre = bessel_j(0, -beta) * 2.0 * p.kappa_in;
  return {pre * plus, pre * minus};
}

// The closed form is written with J_{+-1}(-beta), the same sign convention as
// the general sum; the overall sign does not reach the PSD.
Sidebands reflection_sidebands_cal(double beta, double xi, double omega_b, const ReflectionParams& p) {
  check_reflection(xi, beta, p);
  if (!(omega_b > 0.0)) throw DomainError("reflection: omega_b must be > 0");
  const cd loss(p.kappa, -p.detuning);
  const double j0sq = std::pow(bessel_j(0, -xi), 2);
  const cd i(0.0, 1.0);
  const cd plus = bessel_j(1, -beta) * (-1.0 + 2.0 * p.kappa_in * j0sq / (i * omega_b + loss));
  const cd minus = bessel_j(-1, -beta) * (-1.0 + 2.0 * p.kappa_in * j0sq / (-i * omega_b + loss));
  return {plus, minus};
}

Sidebands reflection_sidebands_cal_general(double beta, double xi, double omega_b,
                                           const ReflectionParams& p) {
  check_reflection(xi, beta, p);
  if (!(omega_b > 0.0)) throw DomainError("reflection: omega_b must be > 0");
  const int n_max = kernel_truncation(xi);
  cd sum_plus, sum_minus;
  for (int n = -n_max; n <= n_max; ++n) {
    const double j2 = std::pow(bessel_j(n, -xi), 2);
    sum_plus += j2 / cd(p.kappa, n * p.omega_m + omega_b - p.detuning);
    sum_minus += j2 / cd(p.kappa, n * p.omega_m - omega_b - p.detuning);
  }
  return {bessel_j(1, -beta) * (-1.0 + 2.0 * p.kappa_in * sum_plus),
          bessel_j(-1, -beta) * (-1.0 + 2.0 * p.kappa_in * sum_minus)};
}

double homodyne_psd_peak(const Sidebands& r, const DetectionChain& chain) {
  return 0.25 * chain.scale() * std::norm(r.plus - std::conj(r.minus));
}

double detection_factor(double kappa, double kappa_in, double omega_m, double omega_b) {
  if (!(kappa > 0.0 && kappa_in > 0.0 && omega_m > 0.0 && omega_b > 0.0))
    throw DomainError("detection_factor: all rates must be > 0");
  const double mismatch = (kappa - 2.0 * kappa_in) / omega_b;
  return std::sqrt(2.0) * (kappa / (2.0 * kappa_in)) * std::sqrt(1.0 + mismatch * mismatch) *
         std::sqrt((kappa * kappa + omega_m * omega_m) / (kappa * kappa + omega_b * omega_b));
}

double g0_from_calibration(double dV2_m, double dV2_b, const CalibrationTone& tone, double n_bar,
                           double K) {
  tone.validate();
  if (!(dV2_m > 0.0 && dV2_b > 0.0 && n_bar > 0.0 && K > 0.0))
    throw DomainError("g0_from_calibration: areas, n_bar and K must be > 0");
  return (1.0 / std::sqrt(2.0 * n_bar)) * (tone.beta * tone.omega_b / std::sqrt(2.0)) *
         std::sqrt(dV2_m / dV2_b) * K;
}

double calibration_ratio(double g0, double n_bar, const CalibrationTone& tone, double kappa,
                         double kappa_in, double omega_m) {
  tone.validate();
  const double wb = tone.omega_b;
  const double mismatch = (kappa - 2.0 * kappa_in) / wb;
  return g0 * std::sqrt(2.0 * n_bar) / (tone.beta * wb) * (2.0 * kappa_in / kappa) /
         std::sqrt(1.0 + mismatch * mismatch) *
         std::sqrt((kappa * kappa + wb * wb) / (kappa * kappa + omega_m * omega_m));
}

AreaEstimate integrated_area(const SpectrumRecord& spec, std::pair<double, double> band,
                             const AreaOptions& opts) {
  spec.validate();
  const auto [f_lo, f_hi] = band;
  if (!(f_hi > f_lo)) throw DataError("integrated_area: band must have f_hi > f_lo");
  if (f_lo < spec.freqs.front() || f_hi > spec.freqs.back())
    throw DataError("integrated_area: band lies outside the spectrum");
  if (!(opts.plateau_fraction > 0.0 && opts.plateau_fraction < 0.5))
    throw DataError("integrated_area: plateau fraction must lie in (0, 0.5)");

  const auto first = std::lower_bound(spec.freqs.begin(), spec.freqs.end(), f_lo) - spec.freqs.begin();
  const auto last = std::upper_bound(spec.freqs.begin(), spec.freqs.end(), f_hi) - spec.freqs.begin();
  const auto n = static_cast<std::size_t>(last - first);
  if (n < 8) throw DataError("integrated_area: fewer than 8 spectral points in the band");
  std::span<const double> f(spec.freqs.data() + first, n);
  std::span<const double> p(spec.psd.data() + first, n);

  AreaEstimate out;
  out.cumulative.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    out.cumulative[i] = out.cumulative[i - 1] + 0.5 * (p[i] + p[i - 1]) * (f[i] - f[i - 1]);
  out.peak_frequency = f[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];

  const double span = f.back() - f.front();
  const double lower_edge = f.front() + opts.plateau_fraction * span;
  const double upper_edge = f.back() - opts.plateau_fraction * span;
  const auto n_low = static_cast<std::size_t>(std::upper_bound(f.begin(), f.end(), lower_edge) - f.begin());
  const auto n_up_start =
      static_cast<std::size_t>(std::lower_bound(f.begin(), f.end(), upper_edge) - f.begin());
  if (n_low < 2 || n - n_up_start < 2) throw DataError("integrated_area: plateau segments too short");

  std::span<const double> c(out.cumulative);
  const auto low = fit_line_at(f.subspan(0, n_low), c.subspan(0, n_low), out.peak_frequency);
  const auto high = fit_line_at(f.subspan(n_up_start), c.subspan(n_up_start), out.peak_frequency);
  out.area = high.value - low.value;
  out.sigma = std::hypot(low.sigma, high.sigma);
  return out;
}

SpectrumRecord synthesize_calibration_spectrum(const ReflectionParams& probe, double xi, const CalibrationTone& tone,
                                               double gamma_m, const DetectionChain& chain,
                                               const SyntheticSpectrumOptions& opts) {
  tone.validate();
  if (!(opts.f_high > opts.f_low) || !(opts.f_low >= 0.0) || !(opts.resolution > 0.0))
    throw DomainError("synthetic spectrum: need 0 <= f_low < f_high and resolution > 0");
  if (!(gamma_m > 0.0)) throw DomainError("synthetic spectrum: gamma_m must be > 0");
  const double area_m = homodyne_psd_peak(reflection_sidebands_mech(xi, tone.beta, probe), chain);
  const double area_b = homodyne_psd_peak(reflection_sidebands_cal(tone.beta, xi, tone.omega_b, probe), chain);
  const double f_m = probe.omega_m / constants::two_pi;
  const double f_b = tone.omega_b / constants::two_pi;
  const double width_m = opts.mech_linewidth > 0.0 ? opts.mech_linewidth : 2.0 * gamma_m / constants::two_pi;
  const double width_b = opts.tone_linewidth > 0.0 ? opts.tone_linewidth : 3.0 * opts.resolution;
  auto lorentz = [](double f, double f0, double fwhm) {
    const double h = 0.5 * fwhm;
    return h / (0.5 * constants::two_pi * ((f - f0) * (f - f0) + h * h));
  };

  const auto n = static_cast<std::size_t>(std::floor((opts.f_high - opts.f_low) / opts.resolution)) + 1;
  SpectrumRecord out;
  out.freqs.resize(n);
  out.psd.resize(n);
  std::mt19937_64 engine(opts.seed);
  std::gamma_distribution<double> scatter(opts.averages > 0 ? opts.averages : 1.0,
                                          opts.averages > 0 ? 1.0 / opts.averages : 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = opts.f_low + static_cast<double>(k) * opts.resolution;
    double p = opts.background + area_m * lorentz(f, f_m, width_m) + area_b * lorentz(f, f_b, width_b);
    if (opts.averages > 0) p *= scatter(engine);
    out.freqs[k] = f;
    out.psd[k] = p;
  }
  out.metadata = "synthetic xi=" + std::to_string(xi) + " beta=" + std::to_string(tone.beta);
  return out;
}

double modulation_depth_from_ratio(double ratio) {
  if (!std::isfinite(ratio) || ratio < 0.0)
    throw DomainError("modulation_depth_from_ratio: ratio must be finite and >= 0");
  if (ratio == 0.0) return 0.0;
  constexpr double first_zero_j0 = 2.404825557695772768622;
  auto f = [ratio](double b) {
    const double j0 = bessel_j(0, b);
    const double j1 = bessel_j(1, b);
    const double q = j1 / j0;
    // d/db (J1/J0) = 1 - J1/(b J0) + (J1/J0)^2
    const double dq = b > 0.0 ? 1.0 - q / b + q * q : 0.5;
    return std::make_pair(q - ratio, dq);
  };
  const double guess = std::min(2.0 * ratio, 0.5 * first_zero_j0);
  std::uintmax_t iters = 200;
  const double beta = boost::math::tools::newton_raphson_iterate(
      f, guess, 0.0, first_zero_j0 * (1.0 - 1e-15), std::numeric_limits<double>::digits - 4, iters);
  if (iters >= 200) throw NumericError("modulation_depth_from_ratio: Newton iteration did not converge");
  return beta;
}

}  // namespace hopfcal
