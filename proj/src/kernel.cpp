#include <cassert>
#include <cmath>
#include <vector>

#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"

namespace hopfcal {

namespace {

void check_input(const CavityKernelInput& in) {
  if (!std::isfinite(in.xi) || in.xi < 0.0) throw DomainError("sigma: xi must be finite and >= 0");
  if (!std::isfinite(in.kappa) || in.kappa <= 0.0)
    throw DomainError("sigma: kappa must be > 0 (a lossless cavity has poles on the real axis)");
  if (!std::isfinite(in.omega_m) || in.omega_m <= 0.0) throw DomainError("sigma: omega_m must be > 0");
  if (!std::isfinite(in.detuning)) throw DomainError("sigma: detuning must be finite");
}

}  // namespace

int kernel_truncation(double xi) {
  return std::max(25, static_cast<int>(std::ceil(xi)) + 20);
}

KernelValue sigma_with_derivative(const CavityKernelInput& in) {
  check_input(in);
  const int n_max = in.truncation > 0 ? in.truncation : kernel_truncation(in.xi);
  // J_k(xi) for k in [0, n_max + 2]; J_k(-xi) = (-1)^k J_k(xi) and
  // J_{-k}(-xi) = J_k(xi).
  const std::vector<double> jp = bessel_j_sequence(n_max + 2, in.xi);
  auto j_neg = [&](int k) {  // J_k(-xi)
    if (k >= 0) {
      const double v = jp[static_cast<std::size_t>(k)];
      return (k & 1) ? -v : v;
    }
    return jp[static_cast<std::size_t>(-k)];
  };
  auto dj_neg = [&](int k) {  // d/dxi J_k(-xi) = -J_k'(-xi)
    return -0.5 * (j_neg(k - 1) - j_neg(k + 1));
  };

  using cd = std::complex<double>;
  const double w = in.omega_m;
  KernelValue out{};
  // n runs over [-N-1, N] so that each n has its partner -n-1.
  for (int n = -n_max - 1; n <= n_max; ++n) {
    const cd d1(in.kappa, n * w - in.detuning);
    const cd d2(in.kappa, -((n + 1) * w - in.detuning));
    const cd inv = 1.0 / (d1 * d2);
    const double a = j_neg(n);
    const double b = j_neg(n + 1);
    const cd term = a * b * inv;
    out.value += term;
    out.derivative += (dj_neg(n) * b + a * dj_neg(n + 1)) * inv;
    out.max_term = std::max(out.max_term, std::abs(term));
  }
#ifndef NDEBUG
  {
    const double edge = std::abs(j_neg(n_max) * j_neg(n_max + 1));
    assert(edge <= 1e-10 * std::max(std::abs(j_neg(0)), std::abs(j_neg(1))) + 1e-300);
  }
#endif
  return out;
}

std::complex<double> sigma(const CavityKernelInput& in) {
  return sigma_with_derivative(in).value;
}

std::complex<double> sigma_prime(const CavityKernelInput& in) {
  return sigma_with_derivative(in).derivative;
}

std::complex<double> sigma_small_xi_slope(double detuning, double kappa, double omega_m) {
  check_input({0.0, detuning, kappa, omega_m, 0});
  using cd = std::complex<double>;
  const cd w(-kappa, detuning);  // W = i Delta - kappa
  const cd i(0.0, 1.0);
  const cd first = 1.0 / ((-w) * (-i * omega_m - std::conj(w)));
  const cd second = 1.0 / ((-i * omega_m - w) * (-std::conj(w)));
  return -0.5 * (first - second);
}

}  // namespace hopfcal
