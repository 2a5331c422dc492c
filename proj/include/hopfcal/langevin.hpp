#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "hopfcal/model.hpp"

namespace hopfcal {

using cplx = std::complex<double>;

struct SimulationConfig {
  double dt = 0.0;        // s; 0 selects default_time_step()
  double duration = 0.0;  // s
  std::uint64_t seed = 1;
  double pump_on_time = 0.0;  // pump drive is zero before this instant
  bool thermal_noise = true;
  bool optical_noise = false;
  int record_stride = 1;
  // beta(0); when unset it is drawn from the thermal state (or zero if
  // thermal noise is off).
  std::optional<cplx> initial_beta;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<cplx> alpha_pr;
  std::vector<cplx> alpha_pm;
  std::vector<cplx> beta;
};

struct NoiseSamples {
  std::vector<cplx> beta_in;
  std::vector<cplx> alpha_opt_pr;
  std::vector<cplx> alpha_opt_pm;
};

// Circular complex Gaussian source with <|z|^2> = 1 per draw.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : engine_(seed) {}
  cplx operator()() {
    const double a = normal_(engine_);
    const double b = normal_(engine_);
    return {a * kHalfRoot, b * kHalfRoot};
  }

 private:
  static constexpr double kHalfRoot = 0.70710678118654752440;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// White noise sequences sampled at step dt: <|beta_in|^2> = (n_bar + 1/2)/dt,
// <|alpha_opt|^2> = 1/(2 dt), all mutually independent and circular.
NoiseSamples generate_noise(std::size_t n_steps, double dt, double n_bar, std::uint64_t seed);

// Largest admissible step 1/(50 max(kappa_pm, kappa_pr, omega_m)).
double max_time_step(const SystemParams& sys);
// Default step 1/(200 max(kappa_pm, kappa_pr, omega_m)).
double default_time_step(const SystemParams& sys);

struct FullState {
  double t = 0.0;
  cplx alpha_pr;
  cplx alpha_pm;
  cplx beta;
};

// Called after every integration step (including t = 0) for streaming
// consumers such as an online lock-in.
using StepObserver = std::function<void(std::int64_t step, const FullState&)>;

// Integrates the coupled classical Langevin equations of the two optical
// modes and the mechanical mode. Linear parts are propagated exactly over a
// step, the radiation-pressure forcing by the trapezoid rule and the additive
// noise by Euler-Maruyama.
Trajectory simulate_full(const SystemParams& sys, const SimulationConfig& cfg);
void simulate_full(const SystemParams& sys, const SimulationConfig& cfg, const StepObserver& observer);

// Slowly-varying envelope A(t) in the frame rotating at omega_m:
// dA/dt = -gamma_m A + i A sum_i g_i F_i(|A|) + sqrt(2 gamma_m) beta_in.
struct EnvelopeTrajectory {
  std::vector<double> times;
  std::vector<cplx> amplitude;
};

// Stochastic Heun integration of the amplitude equation with thermal noise.
// dt defaults to 1e-3 / gamma_m when cfg.dt is 0.
EnvelopeTrajectory simulate_envelope(const SystemParams& sys, const SimulationConfig& cfg);

}  // namespace hopfcal
