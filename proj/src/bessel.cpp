#include <cmath>
#include <vector>

#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"

namespace hopfcal {

namespace {

constexpr double kSeriesLimit = 1.0;
constexpr double kRescaleAbove = 1e250;
constexpr double kRescaleBy = 1e-250;

// Power series for 0 < x <= kSeriesLimit, n >= 0.
double bessel_series(int n, double x) {
  const double half = 0.5 * x;
  double prefactor = 1.0;
  for (int k = 1; k <= n; ++k) prefactor *= half / k;
  if (prefactor == 0.0) return 0.0;
  const double q = -half * half;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (n + k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return prefactor * sum;
}

// Starting index for the backward recurrence: well beyond both the requested
// order and the turning point n ~ x.
int miller_start(int nmax, double x) {
  const double top = std::max(static_cast<double>(nmax), x);
  int m = static_cast<int>(top) + 20 + static_cast<int>(std::sqrt(160.0 * (top + 1.0)));
  return m + (m & 1);
}

}  // namespace

std::vector<double> bessel_j_sequence(int nmax, double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j: argument must be finite");
  if (nmax < 0) throw DomainError("bessel_j_sequence: nmax must be >= 0");
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const bool negative = x < 0.0;
  const double ax = std::abs(x);

  const int m = miller_start(nmax, ax);
  const double two_over_x = 2.0 / ax;
  double next = 0.0;  // J_{k+1}, unnormalised
  double cur = 1e-30; // J_k
  double norm = 0.0;  // J_0 + 2 sum_{k even > 0} J_k
  for (int k = m; k >= 0; --k) {
    if (k <= nmax) out[static_cast<std::size_t>(k)] = cur;
    if (k == 0) {
      norm += cur;
    } else if ((k & 1) == 0) {
      norm += 2.0 * cur;
    }
    if (k == 0) break;
    const double prev = k * two_over_x * cur - next;
    next = cur;
    cur = prev;
    if (std::abs(cur) > kRescaleAbove) {
      cur *= kRescaleBy;
      next *= kRescaleBy;
      norm *= kRescaleBy;
      for (int j = k; j <= nmax; ++j) out[static_cast<std::size_t>(j)] *= kRescaleBy;
    }
  }
  for (double& v : out) v /= norm;
  if (negative) {
    for (int k = 1; k <= nmax; k += 2) out[static_cast<std::size_t>(k)] = -out[static_cast<std::size_t>(k)];
  }
  return out;
}

double bessel_j(int n, double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_j: argument must be finite");
  double sign = 1.0;
  if (n < 0) {
    n = -n;
    if (n & 1) sign = -sign;
  }
  if (x < 0.0) {
    x = -x;
    if (n & 1) sign = -sign;
  }
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x <= kSeriesLimit) return sign * bessel_series(n, x);
  return sign * bessel_j_sequence(n, x)[static_cast<std::size_t>(n)];
}

}  // namespace hopfcal
