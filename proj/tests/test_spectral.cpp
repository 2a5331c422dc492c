#include <doctest.h>

#include <cmath>
#include <random>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"
#include "hopfcal/spectral.hpp"

using namespace hopfcal;
using constants::two_pi;
using cd = std::complex<double>;

namespace {

const double w_m = two_pi * 229.753e3;
const double w_b = two_pi * 237.0e3;
const double kappa = two_pi * 66.8e3;
const double kappa_in = two_pi * 8.3e3;
const ReflectionParams resonant{0.0, kappa, kappa_in, w_m};

double lorentz(double f, double f0, double fwhm) {
  const double h = 0.5 * fwhm;
  return h / (M_PI * ((f - f0) * (f - f0) + h * h));
}

}  // namespace

TEST_CASE("detection factor") {
  const double K = detection_factor(kappa, kappa_in, w_m, w_b);
  CHECK(K == doctest::Approx(5.65).epsilon(0.01));
  const double oracle = std::sqrt(2.0) * kappa / (2 * kappa_in) *
                        std::sqrt(1 + std::pow((kappa - 2 * kappa_in) / w_b, 2)) *
                        std::sqrt((kappa * kappa + w_m * w_m) / (kappa * kappa + w_b * w_b));
  CHECK(K == doctest::Approx(oracle).epsilon(1e-14));
  CHECK_THROWS_AS(detection_factor(kappa, 0.0, w_m, w_b), DomainError);
}

TEST_CASE("calibration-tone g0 from reference peak areas") {
  const CalibrationTone tone{0.0195, w_b};
  const double g = g0_from_calibration(2.8e-10, 1.669e-8, tone, 2.676e7, 5.65);
  CHECK(g / two_pi == doctest::Approx(0.327).epsilon(0.01));
  CHECK_THROWS_AS(g0_from_calibration(2.8e-10, 1.669e-8, {0.0, w_b}, 2.676e7, 5.65), DomainError);
  CHECK_THROWS_AS(g0_from_calibration(-1.0, 1.669e-8, tone, 2.676e7, 5.65), DomainError);
  // Doubling n_bar scales g0 by 1/sqrt 2.
  CHECK(g0_from_calibration(2.8e-10, 1.669e-8, tone, 2 * 2.676e7, 5.65) ==
        doctest::Approx(g / std::sqrt(2.0)));
}

TEST_CASE("closed-form sidebands approach the Bessel sums for small amplitudes") {
  for (double d : {0.0, two_pi * 40e3, -two_pi * 239.35e3}) {
    const ReflectionParams p{d, kappa, kappa_in, w_m};
    const double xi = 1e-3, beta = 1e-3;
    const auto a = reflection_sidebands_mech(xi, beta, p);
    const auto b = reflection_sidebands_mech_general(xi, beta, p);
    CHECK(std::abs(a.plus - b.plus) <= 1e-5 * std::abs(b.plus));
    CHECK(std::abs(a.minus - b.minus) <= 1e-5 * std::abs(b.minus));
    const auto c = reflection_sidebands_cal(beta, xi, w_b, p);
    const auto e = reflection_sidebands_cal_general(beta, xi, w_b, p);
    CHECK(std::abs(c.plus - e.plus) <= 1e-5 * std::abs(e.plus));
    CHECK(std::abs(c.minus - e.minus) <= 1e-5 * std::abs(e.minus));
  }
}

TEST_CASE("no mechanical sidebands without input coupling or motion") {
  const ReflectionParams p{two_pi * 10e3, kappa, 0.0, w_m};
  const auto r = reflection_sidebands_mech(0.05, 0.01, p);
  CHECK(r.plus == cd(0.0, 0.0));
  CHECK(r.minus == cd(0.0, 0.0));
  const auto z = reflection_sidebands_mech_general(0.0, 0.01, resonant);
  CHECK(std::abs(z.plus) == 0.0);
  CHECK_THROWS_AS(reflection_sidebands_mech(-0.1, 0.0, resonant), DomainError);
}

TEST_CASE("calibration ratio equals the small-signal sideband ratio") {
  // Sidebands with every Bessel factor linearized, written out independently.
  auto linear_ratio = [](double xi, double beta) {
    const cd loss(kappa, 0.0);
    const cd iw(0.0, w_m), iwb(0.0, w_b);
    const cd common = (-xi / 2) * (2 * kappa_in) / loss;
    const cd mp = common * (-iw) / (iw + loss), mm = common * iw / (iw - loss);
    const cd bp = (-beta / 2) * (-1.0 + 2 * kappa_in / (iwb + loss));
    const cd bm = (beta / 2) * (-1.0 + 2 * kappa_in / (-iwb + loss));
    return std::sqrt(std::norm(mp - std::conj(mm)) / std::norm(bp - std::conj(bm)));
  };
  const double n_bar = 2.676e7;
  for (double xi : {0.005, 0.02, 0.05}) {
    for (double beta : {0.005, 0.0195, 0.05}) {
      const double g0 = xi * w_m / std::sqrt(2 * n_bar);
      const double closed = calibration_ratio(g0, n_bar, {beta, w_b}, kappa, kappa_in, w_m);
      CHECK(closed == doctest::Approx(linear_ratio(xi, beta)).epsilon(1e-10));
      // With the exact Bessel factors the ratio departs at O(xi^2 + beta^2).
      const DetectionChain chain;
      const double exact = std::sqrt(
          homodyne_psd_peak(reflection_sidebands_mech(xi, beta, resonant), chain) /
          homodyne_psd_peak(reflection_sidebands_cal(beta, xi, w_b, resonant), chain));
      CHECK(std::abs(exact / closed - 1.0) < 0.5 * (xi * xi + beta * beta) + 1e-12);
    }
  }
}

TEST_CASE("area of a delta-like peak on a zero floor") {
  SpectrumRecord s;
  for (int i = 0; i < 1000; ++i) {
    s.freqs.push_back(1000.0 + 0.5 * i);
    s.psd.push_back(i == 400 ? 3.0 : 0.0);
  }
  const auto a = integrated_area(s, {1010.0, 1480.0});
  CHECK(a.area == doctest::Approx(3.0 * 0.5).epsilon(1e-12));
  CHECK(a.peak_frequency == 1200.0);
  CHECK(a.sigma == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("area of a Lorentzian on a sloped background") {
  SpectrumRecord s;
  const double f0 = 5000.0, fwhm = 3.0, area = 2e-9;
  for (int i = 0; i <= 8000; ++i) {
    const double f = f0 - 200.0 + 0.05 * i;
    s.freqs.push_back(f);
    s.psd.push_back(area * lorentz(f, f0, fwhm) + 1e-12 * (1.0 + 1e-4 * (f - f0)));
  }
  const auto a = integrated_area(s, {f0 - 200.0, f0 + 200.0});
  CHECK(a.area == doctest::Approx(area).epsilon(0.02));
  CHECK(a.peak_frequency == doctest::Approx(f0));
  CHECK(a.cumulative.size() == 8001);
}

TEST_CASE("area input checks") {
  SpectrumRecord s{{1.0, 2.0, 3.0}, {1.0, -1.0, 1.0}, ""};
  CHECK_THROWS_AS(integrated_area(s, {1.0, 3.0}), DataError);
  SpectrumRecord t;
  for (int i = 0; i < 100; ++i) {
    t.freqs.push_back(i);
    t.psd.push_back(1.0);
  }
  CHECK_THROWS_AS(integrated_area(t, {50.0, 200.0}), DataError);
  CHECK_THROWS_AS(integrated_area(t, {50.0, 52.0}), DataError);
  SpectrumRecord u{{1.0, 1.0}, {1.0, 1.0}, ""};
  CHECK_THROWS_AS(u.validate(), DataError);
}

TEST_CASE("modulation depth from the first-sideband ratio") {
  for (double beta : {1e-4, 0.0195, 0.5, 1.5, 2.3}) {
    const double r = bessel_j(1, beta) / bessel_j(0, beta);
    CHECK(modulation_depth_from_ratio(r) == doctest::Approx(beta).epsilon(1e-12));
  }
  CHECK(modulation_depth_from_ratio(0.0) == 0.0);
  CHECK_THROWS_AS(modulation_depth_from_ratio(-0.1), DomainError);
  CHECK(CalibrationTone{0.25, w_b}.beyond_small_depth());
  CHECK_FALSE(CalibrationTone{0.0195, w_b}.beyond_small_depth());
}

TEST_CASE("Welch estimate of white noise integrates to the variance") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> x(1 << 18);
  for (double& v : x) v = n(rng);
  const double fs = 1000.0;
  const auto s = welch_psd(x, fs, 1024);
  double total = 0.0;
  for (double p : s.psd) total += p * fs / 1024.0;
  CHECK(total == doctest::Approx(4.0).epsilon(0.02));
  CHECK(s.freqs[1] == doctest::Approx(fs / 1024.0));
  CHECK(s.freqs.back() == doctest::Approx(fs / 2.0));
}

TEST_CASE("Welch estimate of a sine concentrates A^2 / 2 at its frequency") {
  const double fs = 8192.0, f = 1000.0, amp = 0.3;
  std::vector<double> x(1 << 16);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(two_pi * f * i / fs);
  const auto s = welch_psd(x, fs, 2048);
  const auto a = integrated_area(s, {900.0, 1100.0});
  CHECK(a.area == doctest::Approx(amp * amp / 2.0).epsilon(1e-3));
  CHECK(a.peak_frequency == doctest::Approx(f));
}

TEST_CASE("Welch estimate of a constant: the Hann main lobe holds all the power") {
  const double fs = 100.0, c = 1.7;
  std::vector<double> x(4096, c);
  const auto s = welch_psd(x, fs, 256);
  double total = 0.0;
  for (double p : s.psd) total += p * fs / 256.0;
  CHECK(total == doctest::Approx(c * c).epsilon(1e-12));
  CHECK(s.psd[0] > s.psd[1]);
  for (std::size_t k = 2; k < s.psd.size(); ++k) CHECK(s.psd[k] < 1e-20);
  CHECK_THROWS_AS(welch_psd(x, fs, 8192), DataError);
  CHECK_THROWS_AS(welch_psd(x, fs, 256, 1.0), DomainError);
}

TEST_CASE("synthetic calibration spectrum round trip") {
  const double n_bar = 2.6754e7;
  const double g0 = two_pi * 0.336;
  const double xi = g0 * std::sqrt(2 * n_bar) / w_m;
  const CalibrationTone tone{0.0195, w_b};
  SyntheticSpectrumOptions o;
  o.f_low = 229.753e3 - 300.0;
  o.f_high = 237.0e3 + 300.0;
  o.background = 1e-15;
  const auto s = synthesize_calibration_spectrum(resonant, xi, tone, two_pi * 1.64, DetectionChain{}, o);
  const auto am = integrated_area(s, {229.753e3 - 200.0, 229.753e3 + 200.0});
  const auto ab = integrated_area(s, {237.0e3 - 200.0, 237.0e3 + 200.0});
  const double K = detection_factor(kappa, kappa_in, w_m, w_b);
  CHECK(g0_from_calibration(am.area, ab.area, tone, n_bar, K) == doctest::Approx(g0).epsilon(0.02));
}
