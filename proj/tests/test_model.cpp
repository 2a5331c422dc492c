#include <doctest.h>

#include <cmath>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/model.hpp"

using namespace hopfcal;
using constants::two_pi;

TEST_CASE("thermal occupation at room temperature") {
  const double n = thermal_occupation(295.0, two_pi * 229.753e3);
  // k_B T / (hbar omega) with CODATA values, evaluated by hand.
  const double oracle = 1.380649e-23 * 295.0 / (1.054571817e-34 * two_pi * 229.753e3);
  CHECK(n == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(n == doctest::Approx(2.676e7).epsilon(5e-3));
}

TEST_CASE("Bose occupation approaches the classical value at high temperature") {
  const double w = two_pi * 229.753e3;
  const double classical = thermal_occupation(295.0, w);
  const double bose = thermal_occupation(295.0, w, OccupationModel::bose);
  CHECK(bose == doctest::Approx(classical - 0.5).epsilon(1e-9));
  CHECK(thermal_occupation(0.0, w, OccupationModel::bose) == 0.0);
  CHECK_THROWS_AS(thermal_occupation(-1.0, w), DomainError);
  CHECK_THROWS_AS(thermal_occupation(295.0, 0.0), DomainError);
}

TEST_CASE("zero-point motion") {
  const double x = zero_point_motion(1.74e-10, two_pi * 229.753e3);
  CHECK(x == doctest::Approx(std::sqrt(1.054571817e-34 / (2.0 * 1.74e-10 * two_pi * 229.753e3))).epsilon(1e-14));
  CHECK(x == doctest::Approx(4.58e-16).epsilon(2e-3));
  CHECK_THROWS_AS(zero_point_motion(0.0, 1.0), DomainError);
}

TEST_CASE("drive rate and its square") {
  const double wl = laser_angular_frequency(1064e-9);
  CHECK(wl == doctest::Approx(two_pi * 299792458.0 / 1064e-9).epsilon(1e-15));
  const double e = drive_rate(4.4e-6, two_pi * 8.3e3, wl);
  CHECK(e * e == doctest::Approx(2.458e18).epsilon(1e-3));
  CHECK(drive_rate(0.0, two_pi * 8.3e3, wl) == 0.0);
  CHECK_THROWS_AS(drive_rate(-1.0, 1.0, wl), DomainError);
}

TEST_CASE("effective detuning adds the static shift") {
  CHECK(effective_detuning(10.0, {0.0, 0.0}, 3.0) == 10.0);
  CHECK(effective_detuning(10.0, {2.0, 7.0}, 3.0) == doctest::Approx(22.0));
}

TEST_CASE("reference system") {
  const auto s = reference_system();
  CHECK_NOTHROW(s.validate());
  CHECK(s.pump.kappa() == doctest::Approx(two_pi * 66.8e3));
  CHECK(s.coupling(Beam::pump) == s.g0);
  CHECK(s.detuning(Beam::probe) == 0.0);
  CHECK(s.alpha() == doctest::Approx(2.0 * s.g0 * s.g0 / (s.mech.gamma_m * s.mech.omega_m)));
  CHECK(s.drive_squared(Beam::pump) == doctest::Approx(2.458e18 * 21.0 / 4.4).epsilon(1e-3));
  CHECK(s.with_pump_power(5e-6).pump.power == 5e-6);
  CHECK(s.with_g0(1.0).g0 == 1.0);

  auto bad = s;
  bad.pump.kappa_in = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = s;
  bad.mech.gamma_m = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
