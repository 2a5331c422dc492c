#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hopfcal/model.hpp"

namespace hopfcal {

// Envelope of the mechanical oscillation in dimensionless form:
// xi = 2 g0 |A| / omega_m, phase phi of A, and tau = gamma_m t.
struct AmplitudeState {
  double xi = 0.0;
  double phi = 0.0;
  double tau = 0.0;
};

// Root and extremum search on the slope function. The scan walks
// xi = step, 2 step, ... up to xi_max and refines the first bracket.
struct RootSearchOptions {
  double xi_max = 20.0;
  double scan_step = 1e-3;
  double root_tolerance = 1e-10;
  int max_iterations = 200;
};

struct SlopeCurve {
  std::vector<double> xi_grid;
  std::vector<double> S_values;
  std::optional<double> xi_st;
  std::optional<double> xi_mx;
  std::optional<double> S_mx;
};

struct MaxSlope {
  double xi_mx = 0.0;
  double S_mx = 0.0;  // -S(xi_mx) >= 0, the largest growth rate d xi / d tau
};

struct EffectiveRates {
  double gamma_eff = 0.0;        // rad/s
  double delta_omega_eff = 0.0;  // rad/s
};

// S(xi) = xi + (2 g0 / gamma_m omega_m) sum_i g_i E_i^2 Im Sigma_i(g_i xi / g0).
// With g_i = g0 this is xi + alpha Im[E_pm^2 Sigma_pm + E_pr^2 Sigma_pr].
// The envelope obeys d xi / d tau = -S(xi).
double slope_function(double xi, const SystemParams& sys);

// dS/dxi.
double slope_derivative(double xi, const SystemParams& sys);

// dS/dxi at xi = 0, from the small-xi limit of Sigma. Negative means the
// origin is unstable (above threshold).
double origin_slope(const SystemParams& sys);

// Smallest xi > 0 with S(xi) = 0, reached from a small thermal amplitude.
// Empty when the origin is stable.
std::optional<double> steady_state_amplitude(const SystemParams& sys,
                                             const RootSearchOptions& opts = {});

// Location and magnitude of the steepest growth on (0, xi_st).
std::optional<MaxSlope> max_slope_point(const SystemParams& sys,
                                        const RootSearchOptions& opts = {});

// Sampled S on the scan grid plus the derived points.
SlopeCurve slope_curve(const SystemParams& sys, const RootSearchOptions& opts = {});

// Power of `which` at which the origin loses stability, holding the other
// beam fixed. Throws NoThresholdError when that beam does not antidamp.
double threshold_power(const SystemParams& sys, Beam which = Beam::pump);

// Parameter-only constant C (watts) with A = C / P_pm, where
// A = lim_{xi->0} -xi / Im[E_pm^2 Sigma_pm(xi)]. Assumes a resonant probe.
double threshold_constant(const SystemParams& sys);

// g0 = sqrt(gamma_m omega_m A / 2) with A = threshold_constant / P_th.
double g0_from_threshold(double threshold, const SystemParams& sys);

// gamma_m^eff and Delta omega_m^eff at amplitude |A| = xi omega_m / (2 g0).
EffectiveRates effective_rates(double xi, const SystemParams& sys);

// Classical RK4 on d xi/d tau = -S(xi), d phi/d tau = Delta omega_eff / gamma_m.
// Every `stride`-th state is returned, including the initial and final ones.
std::vector<AmplitudeState> integrate_amplitude(const SystemParams& sys, double xi0,
                                                double tau_end, double dtau = 1e-3,
                                                double phi0 = 0.0, int stride = 1);

// Fast S_mx(P_pm, g0) for fitting. Im Sigma of both beams is tabulated once on
// the scan grid (it depends on neither power nor g0), so each evaluation is a
// linear combination plus a local refinement. Couplings are tied to g0.
class MaxSlopeModel {
 public:
  struct Value {
    double S_mx = 0.0;
    double xi_mx = 0.0;
    double dS_dg0 = 0.0;  // analytic: 2 (S_mx + xi_mx) / g0
    bool above_threshold = false;
  };

  explicit MaxSlopeModel(const SystemParams& base, RootSearchOptions opts = {});

  Value evaluate(double pump_power, double g0) const;
  double operator()(double pump_power, double g0) const { return evaluate(pump_power, g0).S_mx; }

  const SystemParams& base() const { return base_; }

 private:
  SystemParams base_;
  RootSearchOptions opts_;
  std::vector<double> im_pump_;   // Im Sigma_pm(k h), k = 1..K
  std::vector<double> im_probe_;  // Im Sigma_pr(k h)
};

}  // namespace hopfcal
