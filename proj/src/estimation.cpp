#include "hopfcal/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>

#include "hopfcal/errors.hpp"
#include "hopfcal/parallel.hpp"

namespace hopfcal {

namespace {

struct LineFit {
  double slope = 0.0;
  double sigma = 0.0;
};

// Ordinary least squares on one window, two-pass.
LineFit window_fit(const std::vector<double>& t, const std::vector<double>& y, std::size_t start,
                   std::size_t w) {
  double mt = 0.0, my = 0.0;
  for (std::size_t i = start; i < start + w; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= static_cast<double>(w);
  my /= static_cast<double>(w);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = start; i < start + w; ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  const double slope = sty / stt;
  double rss = 0.0;
  for (std::size_t i = start; i < start + w; ++i) {
    const double r = y[i] - my - slope * (t[i] - mt);
    rss += r * r;
  }
  return {slope, std::sqrt(rss / static_cast<double>(w - 2) / stt)};
}

std::vector<double> fit_weights(const std::vector<SlopeMeasurement>& data, bool& have_sigma) {
  have_sigma = std::all_of(data.begin(), data.end(), [](const auto& d) { return d.uncertainty > 0.0; });
  std::vector<double> w(data.size(), 1.0);
  if (have_sigma)
    for (std::size_t k = 0; k < data.size(); ++k) w[k] = 1.0 / data[k].uncertainty;
  return w;
}

void check_measurements(const std::vector<SlopeMeasurement>& data) {
  for (const auto& d : data) {
    if (!std::isfinite(d.pump_power) || !(d.pump_power > 0.0))
      throw DataError("slope data: pump power must be > 0 (trace '" + d.trace_id + "')");
    if (!std::isfinite(d.max_slope) || d.max_slope < 0.0)
      throw DataError("slope data: max slope must be finite and >= 0 (trace '" + d.trace_id + "')");
    if (!std::isfinite(d.uncertainty) || d.uncertainty < 0.0)
      throw DataError("slope data: uncertainty must be finite and >= 0 (trace '" + d.trace_id + "')");
  }
}

}  // namespace

std::optional<SlopeEstimate> extract_max_slope(const EnvelopeTrace& env, const SlopeExtractionOptions& opts) {
  const std::size_t n = env.times.size();
  if (env.V.size() != n) throw DataError("extract_max_slope: times and V differ in length");
  if (n < 20) throw DataError("extract_max_slope: trace needs at least 20 samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(env.V[i]) || !std::isfinite(env.times[i]))
      throw DataError("extract_max_slope: non-finite sample at index " + std::to_string(i));
    if (i > 0 && !(env.times[i] > env.times[i - 1]))
      throw DataError("extract_max_slope: times must be strictly increasing");
  }
  if (!(opts.rise_low > 0.0 && opts.rise_low < opts.rise_high && opts.rise_high < 1.0))
    throw ConfigError("extract_max_slope: need 0 < rise_low < rise_high < 1");
  if (!(opts.plateau_fraction > 0.0 && opts.plateau_fraction < 0.5))
    throw ConfigError("extract_max_slope: plateau fraction must lie in (0, 0.5)");

  const auto n_plateau = std::max<std::size_t>(1, static_cast<std::size_t>(opts.plateau_fraction * n));
  const double v_initial =
      std::accumulate(env.V.begin(), env.V.begin() + n_plateau, 0.0) / static_cast<double>(n_plateau);
  const double v_final =
      std::accumulate(env.V.end() - n_plateau, env.V.end(), 0.0) / static_cast<double>(n_plateau);
  if (!(v_final > opts.min_growth * v_initial) || !(v_final > v_initial)) return std::nullopt;

  const double low = v_initial + opts.rise_low * (v_final - v_initial);
  const double high = v_initial + opts.rise_high * (v_final - v_initial);
  const auto hi_it = std::find_if(env.V.begin(), env.V.end(), [high](double v) { return v >= high; });
  if (hi_it == env.V.end()) return std::nullopt;
  const auto i_hi = static_cast<std::size_t>(hi_it - env.V.begin());
  std::size_t i_lo = 0;
  for (std::size_t i = i_hi; i-- > 0;)
    if (env.V[i] < low) {
      i_lo = i + 1;
      break;
    }

  const double dt = (env.times.back() - env.times.front()) / static_cast<double>(n - 1);
  std::size_t w = 0;
  if (opts.window) {
    if (!(*opts.window > 0.0)) throw ConfigError("extract_max_slope: window must be > 0");
    w = static_cast<std::size_t>(std::lround(*opts.window / dt));
    if (w < 10) throw DataError("extract_max_slope: window covers fewer than 10 samples");
  } else {
    w = std::max<std::size_t>(10, static_cast<std::size_t>(std::lround(opts.window_fraction * (i_hi - i_lo))));
  }
  if (w > n) throw DataError("extract_max_slope: window longer than the trace");

  std::vector<double> y(env.V);
  if (opts.log_scale) {
    for (double& v : y) {
      if (!(v > 0.0)) throw DataError("extract_max_slope: log-scale extraction needs V > 0");
      v = std::log(v);
    }
  }

  // Candidate windows are centered inside [i_lo, i_hi].
  const std::size_t s_first = i_lo > w / 2 ? std::min(i_lo - w / 2, n - w) : 0;
  const std::size_t s_last = std::max(s_first, std::min(i_hi > w / 2 ? i_hi - w / 2 : 0, n - w));

  // Prefix sums give every window's slope in O(1); the winner is refit exactly.
  const double t0 = env.times[s_first];
  std::vector<long double> st(n + 1, 0.0L), stt(n + 1, 0.0L), sy(n + 1, 0.0L), sty(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    const long double x = env.times[i] - t0;
    st[i + 1] = st[i] + x;
    stt[i + 1] = stt[i] + x * x;
    sy[i + 1] = sy[i] + y[i];
    sty[i + 1] = sty[i] + x * y[i];
  }
  const auto wl = static_cast<long double>(w);
  std::size_t best = s_first;
  long double best_slope = -std::numeric_limits<long double>::infinity();
  for (std::size_t s = s_first; s <= s_last; ++s) {
    const long double a = st[s + w] - st[s];
    const long double b = stt[s + w] - stt[s];
    const long double c = sy[s + w] - sy[s];
    const long double d = sty[s + w] - sty[s];
    const long double slope = (wl * d - a * c) / (wl * b - a * a);
    if (slope > best_slope) {
      best_slope = slope;
      best = s;
    }
  }

  const LineFit fit = window_fit(env.times, y, best, w);
  SlopeEstimate out;
  out.slope = fit.slope;
  out.sigma = fit.sigma;
  out.time = 0.5 * (env.times[best] + env.times[best + w - 1]);
  out.window_samples = w;
  out.rise_start = env.times[i_lo];
  out.rise_end = env.times[i_hi];
  return out;
}

ThresholdFit fit_threshold_linear(const std::vector<SlopeMeasurement>& data) {
  if (data.size() < 2) throw DataError("fit_threshold_linear: need at least 2 points");
  check_measurements(data);
  bool have_sigma = false;
  const auto inv_sigma = fit_weights(data, have_sigma);

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double w = inv_sigma[k] * inv_sigma[k];
    sw += w;
    sx += w * data[k].pump_power;
    sy += w * data[k].max_slope;
  }
  const double xm = sx / sw;
  const double ym = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double w = inv_sigma[k] * inv_sigma[k];
    sxx += w * (data[k].pump_power - xm) * (data[k].pump_power - xm);
    sxy += w * (data[k].pump_power - xm) * (data[k].max_slope - ym);
  }
  if (!(sxx > 0.0)) throw DataError("fit_threshold_linear: all powers are equal");
  const double c = sxy / sxx;
  if (!(c > 0.0)) throw DataError("fit_threshold_linear: fitted slope is not positive");

  double var_scale = 1.0;
  const auto n = data.size();
  if (!have_sigma) {
    double rss = 0.0;
    for (const auto& d : data) {
      const double r = d.max_slope - ym - c * (d.pump_power - xm);
      rss += r * r;
    }
    var_scale = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  }
  const double var_ym = var_scale / sw;
  const double var_c = var_scale / sxx;

  ThresholdFit out;
  out.slope = c;
  out.threshold = xm - ym / c;
  out.sigma = std::sqrt(var_ym / (c * c) + ym * ym * var_c / (c * c * c * c));
  return out;
}

FitResult fit_slope_power(const std::vector<SlopeMeasurement>& data, const SystemParams& sys,
                          const SlopeFitOptions& opts) {
  if (data.size() < 3) throw DataError("fit_slope_power: need at least 3 points");
  check_measurements(data);
  const auto rising = std::count_if(data.begin(), data.end(), [](const auto& d) { return d.max_slope > 0.0; });
  if (rising < 2) throw NotAboveThresholdError("fit_slope_power: fewer than two points show a rise");

  bool have_sigma = false;
  const auto inv_sigma = fit_weights(data, have_sigma);
  const std::size_t n = data.size();
  const MaxSlopeModel model(sys, opts.search);

  auto evaluate_all = [&](double g0) {
    std::vector<MaxSlopeModel::Value> values(n);
    parallel_for(n, [&](std::size_t k) { values[k] = model.evaluate(data[k].pump_power, g0); });
    return values;
  };
  auto above = [](const std::vector<MaxSlopeModel::Value>& v) {
    return std::count_if(v.begin(), v.end(), [](const auto& x) { return x.above_threshold; });
  };
  auto closed_form_a = [&](const std::vector<MaxSlopeModel::Value>& v) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double w = inv_sigma[k] * inv_sigma[k];
      num += w * data[k].max_slope * v[k].S_mx;
      den += w * v[k].S_mx * v[k].S_mx;
    }
    return den > 0.0 ? num / den : 0.0;
  };

  double g0 = 0.0;
  if (opts.fixed_g0) {
    g0 = *opts.fixed_g0;
  } else if (opts.g0_start) {
    g0 = *opts.g0_start;
  } else {
    std::vector<SlopeMeasurement> rise;
    std::copy_if(data.begin(), data.end(), std::back_inserter(rise), [](const auto& d) { return d.max_slope > 0.0; });
    try {
      const auto lin = fit_threshold_linear(rise);
      if (lin.threshold > 0.0) g0 = g0_from_threshold(lin.threshold, sys);
    } catch (const Error&) {
    }
    if (!(g0 > 0.0)) g0 = sys.g0;
  }
  if (!(g0 > 0.0) || !std::isfinite(g0)) throw DomainError("fit_slope_power: starting g0 must be > 0");

  auto values = evaluate_all(g0);
  if (!opts.fixed_g0) {
    // The linear threshold overestimates P_th, so the start may leave points below threshold.
    for (int i = 0; i < 60 && above(values) < std::min<long>(rising, 2L); ++i) {
      g0 *= 1.2;
      values = evaluate_all(g0);
    }
  }
  if (above(values) == 0) throw NotAboveThresholdError("fit_slope_power: no point lies above the model threshold");

  const double a_start = opts.a_start.value_or(closed_form_a(values));
  if (!(a_start > 0.0)) throw NumericError("fit_slope_power: could not form a positive starting transduction constant");

  // Parameters are scaled by their starting values so that both are O(1).
  const double g0_scale = g0;
  const double a_scale = a_start;
  const bool fit_g0 = !opts.fixed_g0;

  LmProblem problem = [&](const Eigen::VectorXd& p) -> std::optional<LmEvaluation> {
    const double g = fit_g0 ? p[0] * g0_scale : g0_scale;
    const double a = p[fit_g0 ? 1 : 0] * a_scale;
    if (!(g > 0.0)) return std::nullopt;
    const auto v = evaluate_all(g);
    LmEvaluation e;
    e.residuals.resize(static_cast<Eigen::Index>(n));
    e.jacobian.resize(static_cast<Eigen::Index>(n), fit_g0 ? 2 : 1);
    for (std::size_t k = 0; k < n; ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      e.residuals[r] = (data[k].max_slope - a * v[k].S_mx) * inv_sigma[k];
      if (fit_g0) {
        e.jacobian(r, 0) = -a * v[k].dS_dg0 * inv_sigma[k] * g0_scale;
        e.jacobian(r, 1) = -v[k].S_mx * inv_sigma[k] * a_scale;
      } else {
        e.jacobian(r, 0) = -v[k].S_mx * inv_sigma[k] * a_scale;
      }
    }
    return e;
  };

  Eigen::VectorXd start = fit_g0 ? Eigen::VectorXd::Ones(2) : Eigen::VectorXd::Ones(1);
  const LmResult lm = levenberg_marquardt(problem, start, opts.lm);

  FitResult out;
  out.g0 = fit_g0 ? lm.parameters[0] * g0_scale : g0_scale;
  out.a = lm.parameters[fit_g0 ? 1 : 0] * a_scale;
  out.chi2 = lm.cost;
  out.iterations = lm.iterations;
  out.converged = lm.converged;
  out.message = lm.message;

  const auto n_par = static_cast<std::size_t>(lm.parameters.size());
  Eigen::MatrixXd cov = lm_covariance(lm.jacobian);
  if (!have_sigma) cov *= n > n_par ? lm.cost / static_cast<double>(n - n_par) : 0.0;
  if (fit_g0) {
    Eigen::Matrix2d scale = Eigen::Vector2d(g0_scale, a_scale).asDiagonal();
    out.covariance = scale * cov * scale;
  } else {
    out.covariance(1, 1) = cov(0, 0) * a_scale * a_scale;
  }
  if (above(evaluate_all(out.g0)) == 0)
    throw NotAboveThresholdError("fit_slope_power: fitted g0 puts every point below threshold");
  return out;
}

double displacement_calibration(const EnvelopeTrace& thermal, double n_bar, double x_zpf) {
  if (!(n_bar > 0.0) || !(x_zpf > 0.0)) throw DomainError("displacement_calibration: n_bar and x_zpf must be > 0");
  const std::size_t n = thermal.V.size();
  if (n < 4) throw DataError("displacement_calibration: segment needs at least 4 samples");
  const std::size_t half = n / 2;
  const double m1 = std::accumulate(thermal.V.begin(), thermal.V.begin() + half, 0.0) / static_cast<double>(half);
  const double m2 = std::accumulate(thermal.V.begin() + half, thermal.V.end(), 0.0) / static_cast<double>(n - half);
  if (!(std::abs(m1 - m2) < 0.1 * 0.5 * (std::abs(m1) + std::abs(m2))))
    throw DataError("displacement_calibration: segment is not stationary (half means differ by >= 10%)");
  double ss = 0.0;
  for (double v : thermal.V) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(n));
  if (!(rms > 0.0)) throw DataError("displacement_calibration: zero RMS");
  return std::sqrt(2.0 * n_bar) * x_zpf / rms;
}

}  // namespace hopfcal
