#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "hopfcal/langevin.hpp"

namespace hopfcal {

// Demodulated amplitude trace. V is in the units of the demodulated
// observable (meters for the displacement proxy).
struct EnvelopeTrace {
  std::vector<double> times;
  std::vector<double> V;
  double bandwidth = 0.0;            // Hz
  double reference_frequency = 0.0;  // Hz
};

// Cascade of identical one-pole low-pass sections on a complex signal. The
// per-section corner is placed so that the whole cascade is 3 dB down at
// `bandwidth`.
class LowPassCascade {
 public:
  LowPassCascade(double bandwidth, double sample_interval, int order = 4);

  std::complex<double> push(std::complex<double> x);
  void reset(std::complex<double> value = {});

  // |H(f)| of the discrete cascade.
  double magnitude(double frequency) const;
  int order() const { return order_; }

 private:
  int order_;
  double coeff_;
  double sample_interval_;
  std::array<std::complex<double>, 8> stage_{};
};

// Streaming lock-in: multiplies by exp(-i 2 pi f_ref t), low-passes and
// reports the magnitude. A tone A cos(2 pi f_ref t) settles to A / 2.
class LockInAmplifier {
 public:
  LockInAmplifier(double reference_frequency, double bandwidth, double sample_interval, int order = 4);

  // Feed the sample at time t; returns the filtered complex baseband.
  std::complex<double> push(double t, double x);

 private:
  double omega_ref_;
  LowPassCascade filter_;
};

// Batch lock-in on uniformly sampled data. Every `decimation`-th output is kept.
EnvelopeTrace demodulate(std::span<const double> times, std::span<const double> signal,
                         double reference_frequency, double bandwidth, int order = 4,
                         int decimation = 1);

// Lock-in on the displacement proxy q = 2 x_zpf Re(beta) of a trajectory.
EnvelopeTrace demodulate(const Trajectory& traj, double x_zpf, double reference_frequency,
                         double bandwidth, int order = 4, int decimation = 1);

// Low-passes an envelope already in the rotating frame; the displacement
// envelope is x_zpf |A|, matching the lock-in on q.
EnvelopeTrace envelope_from_baseband(const EnvelopeTrajectory& env, double x_zpf,
                                     double reference_frequency, double bandwidth, int order = 4);

}  // namespace hopfcal
