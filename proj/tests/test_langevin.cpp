#include <doctest.h>

#include <cmath>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/constants.hpp"
#include "hopfcal/demod.hpp"
#include "hopfcal/errors.hpp"
#include "hopfcal/langevin.hpp"

using namespace hopfcal;
using constants::two_pi;

namespace {

// A small, fast mechanical oscillator with both optical modes switched off.
SystemParams toy_oscillator(double n_bar_target) {
  auto s = reference_system();
  s.mech.omega_m = 1e3;
  s.mech.gamma_m = 1e2;
  s.mech.temperature = n_bar_target * constants::hbar * s.mech.omega_m / constants::boltzmann;
  for (auto* m : {&s.pump, &s.probe}) {
    m->kappa_in = 100.0;
    m->kappa_ex = 900.0;
    m->power = 0.0;
  }
  return s;
}

}  // namespace

TEST_CASE("noise samples have the prescribed second moments") {
  const double dt = 1e-6, n_bar = 250.0;
  const auto z = generate_noise(200000, dt, n_bar, 7);
  double m2 = 0.0, o2 = 0.0;
  std::complex<double> c2;
  for (std::size_t i = 0; i < z.beta_in.size(); ++i) {
    m2 += std::norm(z.beta_in[i]);
    o2 += std::norm(z.alpha_opt_pm[i]);
    c2 += z.beta_in[i] * z.beta_in[i];
  }
  const double n = static_cast<double>(z.beta_in.size());
  CHECK(m2 / n * dt == doctest::Approx(n_bar + 0.5).epsilon(0.02));
  CHECK(o2 / n * dt == doctest::Approx(0.5).epsilon(0.02));
  // <beta_in^2> = 0: the mean of n samples has spread (n_bar + 1/2)/(dt sqrt n).
  CHECK(std::abs(c2) / n < 5.0 * (n_bar + 0.5) / dt / std::sqrt(n));
  CHECK_THROWS_AS(generate_noise(10, 0.0, 1.0, 1), DomainError);
}

TEST_CASE("thermal Ornstein-Uhlenbeck variance of the mechanical mode") {
  const auto s = toy_oscillator(100.0);
  SimulationConfig c;
  c.duration = 40.0;
  c.seed = 11;
  double sum = 0.0;
  std::int64_t count = 0;
  simulate_full(s, c, [&](std::int64_t step, const FullState& st) {
    if (st.t < 0.1 || step % 10) return;
    sum += std::norm(st.beta);
    ++count;
  });
  // Relative standard error of the time average is about 1/sqrt(gamma T) = 1.6%.
  CHECK(sum / count == doctest::Approx(s.mech.n_bar() + 0.5).epsilon(0.05));
}

TEST_CASE("a resonant probe leaves the mechanical damping unchanged") {
  auto s = reference_system();
  s.pump.power = 0.0;
  SimulationConfig c;
  c.duration = 0.05;
  c.thermal_noise = false;
  c.initial_beta = std::complex<double>(1e5, 0.0);
  std::complex<double> last;
  simulate_full(s, c, [&](std::int64_t, const FullState& st) { last = st.beta; });
  CHECK(std::abs(last) / 1e5 == doctest::Approx(std::exp(-s.mech.gamma_m * c.duration)).epsilon(1e-3));
}

TEST_CASE("early growth of the full equations follows the amplitude equation") {
  const auto s = reference_system().with_pump_power(30e-6);
  const double xi0 = 0.01;
  const double t_end = 0.05;
  SimulationConfig c;
  c.duration = t_end;
  c.thermal_noise = false;
  c.initial_beta = std::complex<double>(xi0 * s.mech.omega_m / (2 * s.g0), 0.0);
  const double dt = default_time_step(s);
  LockInAmplifier lockin(s.mech.omega_m / two_pi, 2000.0, dt);
  const double x_zpf = s.mech.x_zpf();
  double v_end = 0.0;
  simulate_full(s, c, [&](std::int64_t, const FullState& st) {
    v_end = std::abs(lockin.push(st.t, 2 * x_zpf * st.beta.real()));
  });
  const double xi_full = 2 * s.g0 * v_end / (x_zpf * s.mech.omega_m);
  const auto ode = integrate_amplitude(s, xi0, s.mech.gamma_m * t_end, 1e-4);
  CHECK(xi_full == doctest::Approx(ode.back().xi).epsilon(0.01));
}

TEST_CASE("seeded runs are reproducible") {
  const auto s = toy_oscillator(50.0);
  SimulationConfig c;
  c.duration = 0.01;
  c.seed = 3;
  const auto a = simulate_full(s, c);
  const auto b = simulate_full(s, c);
  REQUIRE(a.beta.size() == b.beta.size());
  bool same = true;
  for (std::size_t i = 0; i < a.beta.size(); ++i) same = same && a.beta[i] == b.beta[i];
  CHECK(same);
  c.seed = 4;
  const auto d = simulate_full(s, c);
  CHECK(d.beta.back() != a.beta.back());
}

TEST_CASE("trajectory recording and step limits") {
  const auto s = toy_oscillator(10.0);
  SimulationConfig c;
  c.duration = 0.01;
  c.record_stride = 10;
  c.dt = 1e-6;
  const auto t = simulate_full(s, c);
  CHECK(t.times.size() == 1001);
  CHECK(t.times[1] == doctest::Approx(1e-5));
  CHECK(t.alpha_pm.back() == std::complex<double>(0.0, 0.0));

  c.dt = 2.0 * max_time_step(s);
  CHECK_THROWS_AS(simulate_full(s, c), ConfigError);
  c.dt = 0.0;
  c.duration = -1.0;
  CHECK_THROWS_AS(simulate_full(s, c), ConfigError);
  CHECK(default_time_step(reference_system()) == doctest::Approx(1.0 / (200 * two_pi * 229.753e3)));
}

TEST_CASE("pump switch-on delays the instability") {
  const auto s = reference_system();
  SimulationConfig c;
  c.thermal_noise = false;
  c.initial_beta = std::complex<double>(1e4, 0.0);
  c.duration = 0.3;
  c.pump_on_time = 0.1;
  const auto env = simulate_envelope(s, c);
  const auto index = [&](double t) {
    return static_cast<std::size_t>(std::lround(t / (env.times[1] - env.times[0])));
  };
  const auto at = [&](double t) { return std::abs(env.amplitude[index(t)]); };
  // Before switch-on only the weak probe adds to the intrinsic damping.
  const double xi0 = 2 * s.g0 * 1e4 / s.mech.omega_m;
  const double rate = effective_rates(xi0, s.with_pump_power(0.0)).gamma_eff;
  CHECK(rate == doctest::Approx(s.mech.gamma_m).epsilon(1e-2));
  CHECK(at(0.1) == doctest::Approx(1e4 * std::exp(-rate * env.times[index(0.1)])).epsilon(1e-4));
  CHECK(at(0.3) > 100.0 * at(0.1));
}

TEST_CASE("envelope simulation reaches the limit cycle and the thermal variance") {
  const auto s = reference_system();
  SimulationConfig c;
  c.thermal_noise = false;
  c.duration = 1.0;
  c.initial_beta = std::complex<double>(0.01 * s.mech.omega_m / (2 * s.g0), 0.0);
  const auto env = simulate_envelope(s, c);
  const double xi_end = 2 * s.g0 * std::abs(env.amplitude.back()) / s.mech.omega_m;
  CHECK(xi_end == doctest::Approx(*steady_state_amplitude(s)).epsilon(1e-6));

  auto quiet = reference_system();
  quiet.pump.power = 0.0;
  quiet.probe.power = 0.0;
  SimulationConfig n;
  n.duration = 400.0;
  n.seed = 5;
  const auto th = simulate_envelope(quiet, n);
  double sum = 0.0;
  for (const auto& a : th.amplitude) sum += std::norm(a);
  CHECK(sum / th.amplitude.size() == doctest::Approx(quiet.mech.n_bar() + 0.5).epsilon(0.06));
  n.dt = 0.1 / quiet.mech.gamma_m;
  CHECK_THROWS_AS(simulate_envelope(quiet, n), ConfigError);
}
