#include "hopfcal/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hopfcal/errors.hpp"
#include "hopfcal/special.hpp"

namespace hopfcal {

namespace {

double fastest_rate(const SystemParams& sys) {
  return std::max({sys.pump.kappa(), sys.probe.kappa(), sys.mech.omega_m});
}

std::int64_t step_count(double duration, double dt) {
  return static_cast<std::int64_t>(std::llround(std::ceil(duration / dt - 1e-9)));
}

void check_config(const SimulationConfig& cfg, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("simulation: dt must be > 0");
  if (!(cfg.duration > 0.0)) throw ConfigError("simulation: duration must be > 0");
  if (cfg.pump_on_time < 0.0 || cfg.pump_on_time > cfg.duration)
    throw ConfigError("simulation: pump_on_time must lie in [0, duration]");
  if (cfg.record_stride < 1) throw ConfigError("simulation: record_stride must be >= 1");
}

cplx initial_beta(const SimulationConfig& cfg, double n_bar, ComplexGaussian& noise) {
  if (cfg.initial_beta) return *cfg.initial_beta;
  if (cfg.thermal_noise) return std::sqrt(n_bar + 0.5) * noise();
  return {0.0, 0.0};
}

// Exact propagation of d alpha/dt = z alpha + E over dt.
struct OpticalStep {
  cplx decay;   // exp(z dt)
  cplx source;  // (exp(z dt) - 1) / z
};

OpticalStep optical_step(cplx z, double dt) {
  const double mag = std::exp(z.real() * dt);
  const cplx e(mag * std::cos(z.imag() * dt), mag * std::sin(z.imag() * dt));
  return {e, (e - 1.0) / z};
}

}  // namespace

NoiseSamples generate_noise(std::size_t n_steps, double dt, double n_bar, std::uint64_t seed) {
  if (n_steps < 1) throw DomainError("generate_noise: n_steps must be >= 1");
  if (!(dt > 0.0)) throw DomainError("generate_noise: dt must be > 0");
  if (!(n_bar >= 0.0)) throw DomainError("generate_noise: n_bar must be >= 0");
  ComplexGaussian z(seed);
  const double s_mech = std::sqrt((n_bar + 0.5) / dt);
  const double s_opt = std::sqrt(0.5 / dt);
  NoiseSamples out;
  out.beta_in.resize(n_steps);
  out.alpha_opt_pr.resize(n_steps);
  out.alpha_opt_pm.resize(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    out.beta_in[i] = s_mech * z();
    out.alpha_opt_pr[i] = s_opt * z();
    out.alpha_opt_pm[i] = s_opt * z();
  }
  return out;
}

double max_time_step(const SystemParams& sys) { return 1.0 / (50.0 * fastest_rate(sys)); }

double default_time_step(const SystemParams& sys) { return 1.0 / (200.0 * fastest_rate(sys)); }

void simulate_full(const SystemParams& sys, const SimulationConfig& cfg, const StepObserver& observer) {
  sys.validate();
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_time_step(sys);
  check_config(cfg, dt);
  if (dt > max_time_step(sys) * (1.0 + 1e-12))
    throw ConfigError("simulation: dt exceeds 1/(50 max(kappa, omega_m)) = " +
                      std::to_string(max_time_step(sys)));

  const double n_bar = sys.mech.n_bar();
  const double gamma = sys.mech.gamma_m;
  const cplx lambda(-gamma, -sys.mech.omega_m);
  const cplx mech_decay = std::exp(lambda * dt);
  const double half_dt = 0.5 * dt;

  struct Mode {
    double g, kappa, detuning, drive, noise_scale;
  };
  auto make_mode = [&](Beam b) {
    const auto& m = sys.mode(b);
    return Mode{sys.coupling(b), m.kappa(), m.bare_detuning,
                drive_rate(m.power, m.kappa_in, m.omega_laser()),
                cfg.optical_noise ? std::sqrt(m.kappa() * dt) : 0.0};
  };
  const Mode pr = make_mode(Beam::probe);
  const Mode pm = make_mode(Beam::pump);
  const double mech_noise_scale = cfg.thermal_noise ? std::sqrt(2.0 * gamma * dt * (n_bar + 0.5)) : 0.0;

  ComplexGaussian noise(cfg.seed);
  FullState s;
  s.beta = initial_beta(cfg, n_bar, noise);
  observer(0, s);

  const std::int64_t steps = step_count(cfg.duration, dt);
  cplx force(0.0, pr.g * std::norm(s.alpha_pr) + pm.g * std::norm(s.alpha_pm));
  for (std::int64_t i = 1; i <= steps; ++i) {
    const double t0 = (i - 1) * dt;
    const cplx xi_beta = mech_noise_scale > 0.0 ? mech_noise_scale * noise() : cplx{};
    const cplx xi_pr = pr.noise_scale > 0.0 ? pr.noise_scale * noise() : cplx{};
    const cplx xi_pm = pm.noise_scale > 0.0 ? pm.noise_scale * noise() : cplx{};

    // Predictor for beta so the optical phase uses a midpoint displacement.
    const cplx beta_pred = mech_decay * (s.beta + dt * force + xi_beta);
    const double x_mid = 0.5 * (s.beta.real() + beta_pred.real());

    auto advance = [&](const Mode& m, cplx a, cplx xi, double drive) {
      const cplx z(-m.kappa, m.detuning + 2.0 * m.g * x_mid);
      const OpticalStep st = optical_step(z, dt);
      return st.decay * (a + xi) + drive * st.source;
    };
    const double pump_drive = t0 >= cfg.pump_on_time ? pm.drive : 0.0;
    s.alpha_pr = advance(pr, s.alpha_pr, xi_pr, pr.drive);
    s.alpha_pm = advance(pm, s.alpha_pm, xi_pm, pump_drive);

    const cplx force_next(0.0, pr.g * std::norm(s.alpha_pr) + pm.g * std::norm(s.alpha_pm));
    s.beta = mech_decay * (s.beta + half_dt * force + xi_beta) + half_dt * force_next;
    force = force_next;
    s.t = i * dt;

    if (!std::isfinite(s.beta.real()) || !std::isfinite(s.beta.imag()) ||
        !std::isfinite(s.alpha_pm.real()) || !std::isfinite(s.alpha_pr.real()))
      throw NumericError("simulate_full: non-finite state at step " + std::to_string(i) +
                         " (t = " + std::to_string(s.t) + " s)");
    observer(i, s);
  }
}

Trajectory simulate_full(const SystemParams& sys, const SimulationConfig& cfg) {
  Trajectory traj;
  const int stride = std::max(1, cfg.record_stride);
  simulate_full(sys, cfg, [&](std::int64_t step, const FullState& s) {
    if (step % stride != 0) return;
    traj.times.push_back(s.t);
    traj.alpha_pr.push_back(s.alpha_pr);
    traj.alpha_pm.push_back(s.alpha_pm);
    traj.beta.push_back(s.beta);
  });
  return traj;
}

EnvelopeTrajectory simulate_envelope(const SystemParams& sys, const SimulationConfig& cfg) {
  sys.validate();
  const double gamma = sys.mech.gamma_m;
  const double omega = sys.mech.omega_m;
  const double dt = cfg.dt > 0.0 ? cfg.dt : 1e-3 / gamma;
  check_config(cfg, dt);
  if (dt * gamma > 0.05) throw ConfigError("envelope simulation: dt must satisfy gamma_m dt <= 0.05");

  struct Term {
    double drive;  // g_i E_i^2
    double xi_per_amp;  // 2 g_i / omega_m
    CavityKernelInput kernel;
    cplx small_limit;  // Sigma_i / |A| as |A| -> 0
    bool is_pump;
  };
  std::vector<Term> terms;
  for (Beam b : {Beam::pump, Beam::probe}) {
    const double g = sys.coupling(b);
    const double e2 = sys.drive_squared(b);
    if (g == 0.0 || e2 == 0.0) continue;
    Term t;
    t.drive = g * e2;
    t.xi_per_amp = 2.0 * g / omega;
    t.kernel = {0.0, sys.detuning(b), sys.mode(b).kappa(), omega, 0};
    t.small_limit = sigma_small_xi_slope(t.kernel.detuning, t.kernel.kappa, omega) * t.xi_per_amp;
    t.is_pump = b == Beam::pump;
    terms.push_back(t);
  }

  auto drift = [&](cplx a, bool pump_on) {
    const double amp = std::abs(a);
    cplx rate(-gamma, 0.0);  // dA/dt = rate * A
    for (const auto& t : terms) {
      if (t.is_pump && !pump_on) continue;
      cplx per_amp;
      if (amp > 0.0) {
        CavityKernelInput in = t.kernel;
        in.xi = t.xi_per_amp * amp;
        per_amp = sigma(in) / amp;
      } else {
        per_amp = t.small_limit;
      }
      rate += cplx(0.0, t.drive) * per_amp;
    }
    return rate * a;
  };

  const double n_bar = sys.mech.n_bar();
  const double noise_scale = cfg.thermal_noise ? std::sqrt(2.0 * gamma * dt * (n_bar + 0.5)) : 0.0;
  ComplexGaussian noise(cfg.seed);
  cplx a = initial_beta(cfg, n_bar, noise);

  const std::int64_t steps = step_count(cfg.duration, dt);
  const int stride = std::max(1, cfg.record_stride);
  EnvelopeTrajectory out;
  out.times.reserve(static_cast<std::size_t>(steps / stride + 2));
  out.amplitude.reserve(out.times.capacity());
  out.times.push_back(0.0);
  out.amplitude.push_back(a);
  for (std::int64_t i = 1; i <= steps; ++i) {
    const double t0 = (i - 1) * dt;
    const bool pump_on = t0 >= cfg.pump_on_time;
    const cplx xi = noise_scale > 0.0 ? noise_scale * noise() : cplx{};
    const cplx f0 = drift(a, pump_on);
    const cplx pred = a + dt * f0 + xi;
    a += 0.5 * dt * (f0 + drift(pred, pump_on)) + xi;
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
      throw NumericError("simulate_envelope: non-finite amplitude at step " + std::to_string(i));
    if (i % stride == 0) {
      out.times.push_back(i * dt);
      out.amplitude.push_back(a);
    }
  }
  return out;
}

}  // namespace hopfcal
