#pragma once

#include <numbers>

// SI constants (CODATA 2018, exact by definition of the SI).
namespace hopfcal::constants {

inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double boltzmann = 1.380649e-23;        // J / K
inline constexpr double speed_of_light = 299792458.0;    // m / s
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace hopfcal::constants
