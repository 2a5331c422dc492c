#include "hopfcal/demod.hpp"

#include <cmath>

#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"

namespace hopfcal {

LowPassCascade::LowPassCascade(double bandwidth, double sample_interval, int order)
    : order_(order), sample_interval_(sample_interval) {
  if (!(bandwidth > 0.0)) throw ConfigError("low-pass: bandwidth must be > 0");
  if (!(sample_interval > 0.0)) throw ConfigError("low-pass: sample interval must be > 0");
  if (order < 1 || order > static_cast<int>(stage_.size()))
    throw ConfigError("low-pass: order must be in [1, 8]");
  // |H_1|^2 = 1/(1 + (f/fc)^2) per section; the cascade is 3 dB down at
  // bandwidth when fc = bandwidth / sqrt(2^(1/order) - 1).
  const double corner = bandwidth / std::sqrt(std::pow(2.0, 1.0 / order) - 1.0);
  coeff_ = -std::expm1(-constants::two_pi * corner * sample_interval);
}

std::complex<double> LowPassCascade::push(std::complex<double> x) {
  for (int i = 0; i < order_; ++i) {
    stage_[i] += coeff_ * (x - stage_[i]);
    x = stage_[i];
  }
  return x;
}

void LowPassCascade::reset(std::complex<double> value) { stage_.fill(value); }

double LowPassCascade::magnitude(double frequency) const {
  const std::complex<double> z = std::polar(1.0, -constants::two_pi * frequency * sample_interval_);
  const std::complex<double> h = coeff_ / (1.0 - (1.0 - coeff_) * z);
  return std::pow(std::abs(h), order_);
}

LockInAmplifier::LockInAmplifier(double reference_frequency, double bandwidth, double sample_interval,
                                 int order)
    : omega_ref_(constants::two_pi * reference_frequency), filter_(bandwidth, sample_interval, order) {
  if (!(bandwidth < reference_frequency))
    throw ConfigError("lock-in: bandwidth must be below the reference frequency");
  if (reference_frequency * sample_interval >= 0.5)
    throw ConfigError("lock-in: reference frequency above Nyquist of the sampled signal");
}

std::complex<double> LockInAmplifier::push(double t, double x) {
  const double ph = omega_ref_ * t;
  return filter_.push(x * std::complex<double>(std::cos(ph), -std::sin(ph)));
}

EnvelopeTrace demodulate(std::span<const double> times, std::span<const double> signal,
                         double reference_frequency, double bandwidth, int order, int decimation) {
  if (times.size() != signal.size() || times.size() < 2)
    throw DataError("demodulate: need at least two samples with matching times");
  if (decimation < 1) throw ConfigError("demodulate: decimation must be >= 1");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  LockInAmplifier lockin(reference_frequency, bandwidth, dt, order);
  EnvelopeTrace out;
  out.bandwidth = bandwidth;
  out.reference_frequency = reference_frequency;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto y = lockin.push(times[i], signal[i]);
    if (i % static_cast<std::size_t>(decimation) == 0) {
      out.times.push_back(times[i]);
      out.V.push_back(std::abs(y));
    }
  }
  return out;
}

EnvelopeTrace demodulate(const Trajectory& traj, double x_zpf, double reference_frequency,
                         double bandwidth, int order, int decimation) {
  std::vector<double> q(traj.beta.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = 2.0 * x_zpf * traj.beta[i].real();
  return demodulate(traj.times, q, reference_frequency, bandwidth, order, decimation);
}

EnvelopeTrace envelope_from_baseband(const EnvelopeTrajectory& env, double x_zpf,
                                     double reference_frequency, double bandwidth, int order) {
  if (env.times.size() < 2) throw DataError("envelope: need at least two samples");
  const double dt = (env.times.back() - env.times.front()) / static_cast<double>(env.times.size() - 1);
  if (!(bandwidth < reference_frequency))
    throw ConfigError("lock-in: bandwidth must be below the reference frequency");
  LowPassCascade filter(bandwidth, dt, order);
  filter.reset(env.amplitude.front());
  EnvelopeTrace out;
  out.bandwidth = bandwidth;
  out.reference_frequency = reference_frequency;
  out.times = env.times;
  out.V.reserve(env.amplitude.size());
  for (const auto& a : env.amplitude) out.V.push_back(x_zpf * std::abs(filter.push(a)));
  return out;
}

}  // namespace hopfcal
