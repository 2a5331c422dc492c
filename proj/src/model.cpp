#include "hopfcal/model.hpp"

#include <cmath>
#include <string>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"

namespace hopfcal {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

double thermal_occupation(double temperature, double omega_m, OccupationModel model) {
  require(std::isfinite(omega_m) && omega_m > 0.0, "thermal_occupation: omega_m must be > 0");
  require(finite_nonneg(temperature), "thermal_occupation: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double ratio = constants::hbar * omega_m / (constants::boltzmann * temperature);
  if (model == OccupationModel::bose) return 1.0 / std::expm1(ratio);
  return 1.0 / ratio;
}

double zero_point_motion(double m_eff, double omega_m) {
  require(std::isfinite(m_eff) && m_eff > 0.0, "zero_point_motion: m_eff must be > 0");
  require(std::isfinite(omega_m) && omega_m > 0.0, "zero_point_motion: omega_m must be > 0");
  return std::sqrt(constants::hbar / (2.0 * m_eff * omega_m));
}

double drive_rate(double power, double kappa_in, double omega_laser) {
  require(finite_nonneg(power), "drive_rate: power must be >= 0");
  require(finite_nonneg(kappa_in), "drive_rate: kappa_in must be >= 0");
  require(std::isfinite(omega_laser) && omega_laser > 0.0, "drive_rate: omega_L must be > 0");
  return std::sqrt(2.0 * kappa_in * power / (constants::hbar * omega_laser));
}

double effective_detuning(double bare_detuning, std::complex<double> static_shift,
                          double coupling) {
  return bare_detuning + 2.0 * static_shift.real() * coupling;
}

double laser_angular_frequency(double wavelength) {
  require(std::isfinite(wavelength) && wavelength > 0.0, "wavelength must be > 0");
  return constants::two_pi * constants::speed_of_light / wavelength;
}

double SystemParams::detuning(Beam beam) const {
  return effective_detuning(mode(beam).bare_detuning, static_shift, coupling(beam));
}

double SystemParams::drive_squared(Beam beam) const {
  const auto& m = mode(beam);
  const double e = drive_rate(m.power, m.kappa_in, m.omega_laser());
  return e * e;
}

double SystemParams::alpha() const {
  return 2.0 * g0 * g0 / (mech.gamma_m * mech.omega_m);
}

void SystemParams::validate() const {
  require(std::isfinite(mech.omega_m) && mech.omega_m > 0.0, "omega_m must be > 0");
  require(std::isfinite(mech.gamma_m) && mech.gamma_m > 0.0, "gamma_m must be > 0");
  require(std::isfinite(mech.m_eff) && mech.m_eff > 0.0, "m_eff must be > 0");
  require(finite_nonneg(mech.temperature), "temperature must be >= 0");
  require(std::isfinite(g0) && g0 > 0.0, "g0 must be > 0");
  require(std::isfinite(static_shift.real()) && std::isfinite(static_shift.imag()),
          "static shift must be finite");
  for (Beam b : {Beam::pump, Beam::probe}) {
    const auto& m = mode(b);
    const std::string name = b == Beam::pump ? "pump" : "probe";
    require(finite_nonneg(m.kappa_in), name + ".kappa_in must be >= 0");
    require(finite_nonneg(m.kappa_ex), name + ".kappa_ex must be >= 0");
    require(m.kappa() > 0.0, name + ".kappa must be > 0");
    require(std::isfinite(m.bare_detuning), name + ".detuning must be finite");
    require(std::isfinite(m.wavelength) && m.wavelength > 0.0, name + ".wavelength must be > 0");
    require(finite_nonneg(m.power), name + ".power must be >= 0");
    require(std::isfinite(m.mode_match) && m.mode_match >= 0.0 && m.mode_match <= 1.0,
            name + ".mode_match must lie in [0, 1]");
    if (m.coupling) require(finite_nonneg(*m.coupling), name + ".coupling must be >= 0");
  }
}

SystemParams SystemParams::with_pump_power(double power) const {
  SystemParams s = *this;
  s.pump.power = power;
  return s;
}

SystemParams SystemParams::with_g0(double g) const {
  SystemParams s = *this;
  s.g0 = g;
  return s;
}

SystemParams reference_system() {
  using constants::two_pi;
  SystemParams s;
  s.mech.omega_m = two_pi * 229.753e3;
  s.mech.gamma_m = two_pi * 1.64;
  s.mech.m_eff = 1.74e-10;
  s.mech.temperature = 295.0;

  OpticalModeParams cavity;
  cavity.kappa_in = two_pi * 8.3e3;
  cavity.kappa_ex = two_pi * 66.8e3 - cavity.kappa_in;
  cavity.wavelength = 1064e-9;

  s.pump = cavity;
  s.pump.bare_detuning = two_pi * 239.35e3;
  s.pump.power = 21e-6;

  s.probe = cavity;
  s.probe.bare_detuning = 0.0;
  s.probe.power = 1e-6;

  s.g0 = two_pi * 0.336;
  return s;
}

}  // namespace hopfcal
