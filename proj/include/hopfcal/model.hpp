#pragma once

#include <complex>
#include <optional>

namespace hopfcal {

enum class Beam { pump, probe };

enum class OccupationModel { classical, bose };

// Mean thermal phonon number. The classical form k_B T / (hbar omega_m) is the
// default; `bose` selects 1 / (exp(hbar omega_m / k_B T) - 1).
double thermal_occupation(double temperature, double omega_m,
                          OccupationModel model = OccupationModel::classical);

// sqrt(hbar / (2 m_eff omega_m)), in meters.
double zero_point_motion(double m_eff, double omega_m);

// Cavity drive rate E = sqrt(2 kappa_in P / (hbar omega_L)). P is the
// effective (mode-matched) power.
double drive_rate(double power, double kappa_in, double omega_laser);

// Delta0 + (beta0 + beta0*) g.
double effective_detuning(double bare_detuning, std::complex<double> static_shift,
                          double coupling);

// Laser angular frequency 2 pi c / lambda.
double laser_angular_frequency(double wavelength);

// One optical mode. Rates are angular (rad/s); `power` is already multiplied
// by `mode_match` when the parameters come from a configuration file.
struct OpticalModeParams {
  double kappa_in = 0.0;
  double kappa_ex = 0.0;
  double bare_detuning = 0.0;
  double wavelength = 1064e-9;
  double power = 0.0;
  double mode_match = 1.0;
  std::optional<double> coupling;  // defaults to g0 when unset

  double kappa() const { return kappa_in + kappa_ex; }
  double omega_laser() const { return laser_angular_frequency(wavelength); }
};

struct MechanicalParams {
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double m_eff = 0.0;
  double temperature = 0.0;
  OccupationModel occupation = OccupationModel::classical;

  double x_zpf() const { return zero_point_motion(m_eff, omega_m); }
  double n_bar() const { return thermal_occupation(temperature, omega_m, occupation); }
};

struct SystemParams {
  OpticalModeParams pump;
  OpticalModeParams probe;
  MechanicalParams mech;
  double g0 = 0.0;
  // Static mechanical shift beta0. The toolkit has no procedure to compute
  // it; callers may supply one.
  std::complex<double> static_shift{0.0, 0.0};

  const OpticalModeParams& mode(Beam beam) const {
    return beam == Beam::pump ? pump : probe;
  }
  OpticalModeParams& mode(Beam beam) { return beam == Beam::pump ? pump : probe; }

  double coupling(Beam beam) const { return mode(beam).coupling.value_or(g0); }
  double detuning(Beam beam) const;      // effective detuning Delta_i
  double drive_squared(Beam beam) const; // E_i^2, in s^-2
  double alpha() const;                  // 2 g0^2 / (gamma_m omega_m)

  // Throws DomainError on any violated invariant.
  void validate() const;

  SystemParams with_pump_power(double power) const;
  SystemParams with_g0(double g) const;
};

// Reference device parameters with the pump blue-detuned by 2 pi x 239.35 kHz at
// 21 uW, a resonant 1 uW probe and g0 = 2 pi x 0.336 Hz.
SystemParams reference_system();

}  // namespace hopfcal
