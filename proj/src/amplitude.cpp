#include "hopfcal/amplitude.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"

namespace hopfcal {

namespace {

// One beam's contribution to S: weight * Im Sigma(ratio * xi).
struct BeamTerm {
  double weight = 0.0;  // (2 g0 / gamma_m omega_m) g_i E_i^2
  double ratio = 1.0;   // g_i / g0
  double drive = 0.0;   // g_i E_i^2, rad/s^3
  CavityKernelInput kernel;
};

std::vector<BeamTerm> beam_terms(const SystemParams& sys) {
  sys.validate();
  std::vector<BeamTerm> out;
  const double scale = 2.0 * sys.g0 / (sys.mech.gamma_m * sys.mech.omega_m);
  for (Beam b : {Beam::pump, Beam::probe}) {
    const double g = sys.coupling(b);
    const double e2 = sys.drive_squared(b);
    if (g == 0.0 || e2 == 0.0) continue;
    BeamTerm t;
    t.drive = g * e2;
    t.weight = scale * t.drive;
    t.ratio = g / sys.g0;
    t.kernel = {0.0, sys.detuning(b), sys.mode(b).kappa(), sys.mech.omega_m, 0};
    out.push_back(t);
  }
  return out;
}

struct SlopeEval {
  double s = 0.0;
  double ds = 0.0;
};

SlopeEval eval_slope(double xi, const std::vector<BeamTerm>& terms) {
  SlopeEval out{xi, 1.0};
  for (const auto& t : terms) {
    CavityKernelInput in = t.kernel;
    in.xi = t.ratio * xi;
    const KernelValue k = sigma_with_derivative(in);
    out.s += t.weight * k.value.imag();
    out.ds += t.weight * t.ratio * k.derivative.imag();
  }
  return out;
}

double origin_slope(const std::vector<BeamTerm>& terms) {
  double d = 1.0;
  for (const auto& t : terms) {
    const auto l = sigma_small_xi_slope(t.kernel.detuning, t.kernel.kappa, t.kernel.omega_m);
    d += t.weight * t.ratio * l.imag();
  }
  return d;
}

struct ScanOutcome {
  std::optional<double> xi_st;
  std::optional<MaxSlope> max;
};

using GridValue = std::function<double(std::int64_t)>;
using Evaluator = std::function<SlopeEval(double)>;

std::int64_t grid_count(const RootSearchOptions& o) {
  if (!(o.scan_step > 0.0) || !(o.xi_max > o.scan_step))
    throw DomainError("root search: need 0 < scan_step < xi_max");
  return static_cast<std::int64_t>(std::floor(o.xi_max / o.scan_step + 1e-9));
}

// Shared scan: walks the grid from the origin until S turns positive,
// refines that root and, optionally, the minimum of S before it.
ScanOutcome scan_slope(double origin, const GridValue& grid, const Evaluator& eval,
                       const RootSearchOptions& opts, bool want_max) {
  ScanOutcome out;
  if (!(origin < 0.0)) return out;

  const double h = opts.scan_step;
  const std::int64_t count = grid_count(opts);
  std::int64_t bracket = -1;
  std::int64_t min_k = 0;
  double min_s = 0.0;
  double s_hi = 0.0;
  double s_lo = 0.0;
  for (std::int64_t k = 1; k <= count; ++k) {
    const double s = grid(k);
    if (!std::isfinite(s)) throw NumericError("slope function is not finite during the scan");
    if (s > 0.0) {
      bracket = k;
      s_hi = s;
      break;
    }
    if (s < min_s) {
      min_s = s;
      min_k = k;
    }
    s_lo = s;
  }
  if (bracket < 0)
    throw NumericError("slope function stays negative up to xi_max = " + std::to_string(opts.xi_max));

  // Root of S(xi)/xi, which is regular at xi = 0.
  const double lo = (bracket - 1) * h;
  const double hi = bracket * h;
  const double g_lo = bracket == 1 ? origin : s_lo / lo;
  const double g_hi = s_hi / hi;
  auto g = [&](double x) { return x == 0.0 ? origin : eval(x).s / x; };
  std::uintmax_t iters = static_cast<std::uintmax_t>(opts.max_iterations);
  auto root = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi,
                                                boost::math::tools::eps_tolerance<double>(50), iters);
  const double xi_st = 0.5 * (root.first + root.second);
  if (std::abs(eval(xi_st).s) > opts.root_tolerance)
    throw NumericError("steady-state root refinement did not reach tolerance");
  out.xi_st = xi_st;
  if (!want_max) return out;

  double a = 0.0;
  double b = xi_st;
  if (min_k > 0) {
    a = (min_k - 1) * h;
    b = std::min((min_k + 1) * h, xi_st);
  }
  const double d_a = a == 0.0 ? origin : eval(a).ds;
  const double d_b = eval(b).ds;
  double xi_mx = 0.0;
  if (d_a < 0.0 && d_b > 0.0) {
    iters = static_cast<std::uintmax_t>(opts.max_iterations);
    auto r = boost::math::tools::toms748_solve([&](double x) { return x == 0.0 ? origin : eval(x).ds; },
                                               a, b, d_a, d_b,
                                               boost::math::tools::eps_tolerance<double>(50), iters);
    xi_mx = 0.5 * (r.first + r.second);
  } else {
    iters = static_cast<std::uintmax_t>(opts.max_iterations);
    auto r = boost::math::tools::brent_find_minima([&](double x) { return eval(x).s; }, a, b,
                                                   std::numeric_limits<double>::digits / 2, iters);
    xi_mx = r.first;
  }
  double s_mx = eval(xi_mx).s;
  if (min_k > 0 && s_mx > min_s) {
    xi_mx = min_k * h;
    s_mx = min_s;
  }
  out.max = MaxSlope{xi_mx, std::max(0.0, -s_mx)};
  return out;
}

ScanOutcome scan_direct(const SystemParams& sys, const RootSearchOptions& opts, bool want_max) {
  const auto terms = beam_terms(sys);
  const double origin = origin_slope(terms);
  const double h = opts.scan_step;
  return scan_slope(
      origin, [&](std::int64_t k) { return eval_slope(k * h, terms).s; },
      [&](double x) { return eval_slope(x, terms); }, opts, want_max);
}

}  // namespace

double slope_function(double xi, const SystemParams& sys) {
  if (!std::isfinite(xi) || xi < 0.0) throw DomainError("slope_function: xi must be >= 0");
  return eval_slope(xi, beam_terms(sys)).s;
}

double slope_derivative(double xi, const SystemParams& sys) {
  if (!std::isfinite(xi) || xi < 0.0) throw DomainError("slope_derivative: xi must be >= 0");
  return eval_slope(xi, beam_terms(sys)).ds;
}

double origin_slope(const SystemParams& sys) { return origin_slope(beam_terms(sys)); }

std::optional<double> steady_state_amplitude(const SystemParams& sys, const RootSearchOptions& opts) {
  return scan_direct(sys, opts, false).xi_st;
}

std::optional<MaxSlope> max_slope_point(const SystemParams& sys, const RootSearchOptions& opts) {
  return scan_direct(sys, opts, true).max;
}

SlopeCurve slope_curve(const SystemParams& sys, const RootSearchOptions& opts) {
  const auto terms = beam_terms(sys);
  SlopeCurve c;
  const std::int64_t count = grid_count(opts);
  c.xi_grid.reserve(static_cast<std::size_t>(count) + 1);
  c.S_values.reserve(static_cast<std::size_t>(count) + 1);
  c.xi_grid.push_back(0.0);
  c.S_values.push_back(0.0);
  for (std::int64_t k = 1; k <= count; ++k) {
    const double x = k * opts.scan_step;
    c.xi_grid.push_back(x);
    c.S_values.push_back(eval_slope(x, terms).s);
  }
  const auto scan = scan_slope(
      origin_slope(terms), [&](std::int64_t k) { return c.S_values[static_cast<std::size_t>(k)]; },
      [&](double x) { return eval_slope(x, terms); }, opts, true);
  c.xi_st = scan.xi_st;
  if (scan.max) {
    c.xi_mx = scan.max->xi_mx;
    c.S_mx = scan.max->S_mx;
  }
  return c;
}

double threshold_power(const SystemParams& sys, Beam which) {
  sys.validate();
  // S'(0) = 1 + sum_i k_i P_i, linear in each beam's power.
  auto power_coefficient = [&](Beam b) {
    const auto& m = sys.mode(b);
    const double g = sys.coupling(b);
    const double e2_per_watt = 2.0 * m.kappa_in / (constants::hbar * m.omega_laser());
    const auto l = sigma_small_xi_slope(sys.detuning(b), m.kappa(), sys.mech.omega_m);
    return 2.0 * g * g * e2_per_watt * l.imag() / (sys.mech.gamma_m * sys.mech.omega_m);
  };
  const Beam other = which == Beam::pump ? Beam::probe : Beam::pump;
  const double k_sel = power_coefficient(which);
  if (!(k_sel < 0.0))
    throw NoThresholdError("beam produces no antidamping (red-detuned, resonant or uncoupled)");
  const double p = -(1.0 + power_coefficient(other) * sys.mode(other).power) / k_sel;
  if (!(p > 0.0)) throw NoThresholdError("the other beam alone already exceeds threshold");
  return p;
}

double threshold_constant(const SystemParams& sys) {
  sys.validate();
  const auto& m = sys.pump;
  const auto l = sigma_small_xi_slope(sys.detuning(Beam::pump), m.kappa(), sys.mech.omega_m);
  if (!(l.imag() < 0.0) || m.kappa_in <= 0.0)
    throw NoThresholdError("pump produces no antidamping; threshold constant undefined");
  return -constants::hbar * m.omega_laser() / (2.0 * m.kappa_in * l.imag());
}

double g0_from_threshold(double threshold, const SystemParams& sys) {
  if (!std::isfinite(threshold) || threshold <= 0.0)
    throw DomainError("g0_from_threshold: threshold power must be > 0");
  const double a = threshold_constant(sys) / threshold;
  return std::sqrt(sys.mech.gamma_m * sys.mech.omega_m * a / 2.0);
}

EffectiveRates effective_rates(double xi, const SystemParams& sys) {
  if (!std::isfinite(xi) || xi < 0.0) throw DomainError("effective_rates: xi must be >= 0");
  const auto terms = beam_terms(sys);
  const double amp = xi * sys.mech.omega_m / (2.0 * sys.g0);
  EffectiveRates r{sys.mech.gamma_m, 0.0};
  for (const auto& t : terms) {
    std::complex<double> per_amp;  // Sigma_i / |A|
    if (xi == 0.0) {
      const auto l = sigma_small_xi_slope(t.kernel.detuning, t.kernel.kappa, t.kernel.omega_m);
      per_amp = l * (t.ratio * 2.0 * sys.g0 / sys.mech.omega_m);
    } else {
      CavityKernelInput in = t.kernel;
      in.xi = t.ratio * xi;
      per_amp = sigma(in) / amp;
    }
    r.gamma_eff += t.drive * per_amp.imag();
    r.delta_omega_eff += t.drive * per_amp.real();
  }
  return r;
}

std::vector<AmplitudeState> integrate_amplitude(const SystemParams& sys, double xi0, double tau_end,
                                                double dtau, double phi0, int stride) {
  if (!(xi0 > 0.0) || !std::isfinite(xi0)) throw DomainError("integrate_amplitude: xi0 must be > 0");
  if (!(dtau > 0.0)) throw DomainError("integrate_amplitude: dtau must be > 0");
  if (!(tau_end >= 0.0)) throw DomainError("integrate_amplitude: tau_end must be >= 0");
  if (stride < 1) throw DomainError("integrate_amplitude: stride must be >= 1");
  const auto terms = beam_terms(sys);
  const double gamma = sys.mech.gamma_m;

  // Right-hand side: (d xi/d tau, d phi/d tau).
  auto rhs = [&](double xi) {
    double s = xi;
    double dphi = 0.0;
    const double amp = xi * sys.mech.omega_m / (2.0 * sys.g0);
    for (const auto& t : terms) {
      CavityKernelInput in = t.kernel;
      in.xi = t.ratio * xi;
      const auto v = sigma(in);
      s += t.weight * v.imag();
      if (amp > 0.0) {
        dphi += t.drive * v.real() / amp;
      } else {
        const auto l = sigma_small_xi_slope(t.kernel.detuning, t.kernel.kappa, t.kernel.omega_m);
        dphi += t.drive * l.real() * t.ratio * 2.0 * sys.g0 / sys.mech.omega_m;
      }
    }
    return std::array<double, 2>{-s, dphi / gamma};
  };

  const auto steps = static_cast<std::int64_t>(std::ceil(tau_end / dtau - 1e-12));
  std::vector<AmplitudeState> out;
  out.reserve(static_cast<std::size_t>(steps / stride + 2));
  AmplitudeState st{xi0, phi0, 0.0};
  out.push_back(st);
  for (std::int64_t i = 1; i <= steps; ++i) {
    const double h = std::min(dtau, tau_end - st.tau);
    const auto k1 = rhs(st.xi);
    const auto k2 = rhs(st.xi + 0.5 * h * k1[0]);
    const auto k3 = rhs(st.xi + 0.5 * h * k2[0]);
    const auto k4 = rhs(st.xi + h * k3[0]);
    st.xi += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    st.phi += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    st.tau = i == steps ? tau_end : st.tau + h;
    if (!std::isfinite(st.xi) || st.xi < 0.0)
      throw NumericError("integrate_amplitude: unstable at step " + std::to_string(i) +
                         "; reduce dtau");
    if (i % stride == 0 || i == steps) out.push_back(st);
  }
  return out;
}

MaxSlopeModel::MaxSlopeModel(const SystemParams& base, RootSearchOptions opts)
    : base_(base), opts_(opts) {
  base_.validate();
  if (base_.pump.coupling || base_.probe.coupling)
    throw DomainError("MaxSlopeModel: beam couplings must be tied to g0");
  const std::int64_t count = grid_count(opts_);
  auto tabulate = [&](Beam b, std::vector<double>& table) {
    const auto& m = base_.mode(b);
    CavityKernelInput in{0.0, base_.detuning(b), m.kappa(), base_.mech.omega_m, 0};
    table.resize(static_cast<std::size_t>(count));
    for (std::int64_t k = 1; k <= count; ++k) {
      in.xi = k * opts_.scan_step;
      table[static_cast<std::size_t>(k - 1)] = sigma(in).imag();
    }
  };
  tabulate(Beam::pump, im_pump_);
  if (base_.probe.power > 0.0) tabulate(Beam::probe, im_probe_);
}

MaxSlopeModel::Value MaxSlopeModel::evaluate(double pump_power, double g0) const {
  const SystemParams sys = base_.with_pump_power(pump_power).with_g0(g0);
  const auto terms = beam_terms(sys);
  // Same association as beam_terms so grid values match slope_function bit for bit.
  const double scale = 2.0 * g0 / (sys.mech.gamma_m * sys.mech.omega_m);
  const double w_pump = scale * (g0 * sys.drive_squared(Beam::pump));
  const double w_probe = scale * (g0 * sys.drive_squared(Beam::probe));
  const double h = opts_.scan_step;
  const bool has_probe = !im_probe_.empty();
  auto grid = [&](std::int64_t k) {
    const auto i = static_cast<std::size_t>(k - 1);
    double s = k * h;
    if (w_pump != 0.0) s += w_pump * im_pump_[i];
    if (has_probe && w_probe != 0.0) s += w_probe * im_probe_[i];
    return s;
  };
  const auto scan = scan_slope(
      origin_slope(terms), grid, [&](double x) { return eval_slope(x, terms); }, opts_, true);
  Value v;
  if (scan.max) {
    v.above_threshold = true;
    v.S_mx = scan.max->S_mx;
    v.xi_mx = scan.max->xi_mx;
    v.dS_dg0 = 2.0 * (v.S_mx + v.xi_mx) / g0;
  }
  return v;
}

}  // namespace hopfcal
