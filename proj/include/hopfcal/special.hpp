#pragma once

#include <complex>
#include <vector>

namespace hopfcal {

// Bessel function of the first kind J_n(x) for integer order.
//
// Small arguments use the power series; otherwise Miller's backward
// recurrence normalised by J_0 + 2 sum J_2k = 1. Negative orders and
// arguments are reduced with J_{-n}(x) = (-1)^n J_n(x) = J_n(-x).
double bessel_j(int n, double x);

// J_0(x) ... J_nmax(x) from a single backward sweep.
std::vector<double> bessel_j_sequence(int nmax, double x);

// Arguments of the nonlinear cavity kernel Sigma for one optical mode.
// `truncation` <= 0 selects the adaptive bound max(25, ceil(xi) + 20).
struct CavityKernelInput {
  double xi = 0.0;
  double detuning = 0.0;  // effective detuning Delta, rad/s
  double kappa = 0.0;     // rad/s, must be > 0
  double omega_m = 0.0;   // rad/s
  int truncation = 0;
};

int kernel_truncation(double xi);

// Sigma(xi) = sum_n J_n(-xi) J_{n+1}(-xi) / ([i n w_m - W][-i (n+1) w_m - W*])
// with W = i Delta - kappa. Units: s^2 (multiply by E^2 for a rate).
std::complex<double> sigma(const CavityKernelInput& in);

// dSigma/dxi by term-wise differentiation.
std::complex<double> sigma_prime(const CavityKernelInput& in);

struct KernelValue {
  std::complex<double> value;
  std::complex<double> derivative;
  double max_term = 0.0;  // largest |summand| of the value series
};

// Sigma and dSigma/dxi sharing one Bessel sweep.
KernelValue sigma_with_derivative(const CavityKernelInput& in);

// lim_{xi->0} Sigma(xi)/xi, from J_0 ~ 1 and J_{+-1}(-xi) ~ -+(-xi)/2.
std::complex<double> sigma_small_xi_slope(double detuning, double kappa, double omega_m);

}  // namespace hopfcal
