#include <doctest.h>

#include <cmath>

#include "hopfcal/amplitude.hpp"
#include "hopfcal/constants.hpp"
#include "hopfcal/errors.hpp"

using namespace hopfcal;
using constants::two_pi;

TEST_CASE("slope function basics") {
  const auto s = reference_system();
  CHECK(slope_function(0.0, s) == 0.0);
  for (double xi : {0.1, 1.0, 3.0}) {
    const double h = 1e-6;
    const double fd = (slope_function(xi + h, s) - slope_function(xi - h, s)) / (2 * h);
    CHECK(slope_derivative(xi, s) == doctest::Approx(fd).epsilon(1e-6));
  }
  const double h = 1e-7;
  CHECK(origin_slope(s) == doctest::Approx(slope_function(h, s) / h).epsilon(1e-6));
}

TEST_CASE("limit cycle and maximum slope at 21 uW") {
  const auto s = reference_system();
  // Independent mpmath evaluation of the same model.
  const auto xi_st = steady_state_amplitude(s);
  REQUIRE(xi_st);
  CHECK(*xi_st == doctest::Approx(2.44639359229614).epsilon(1e-9));
  CHECK(std::abs(slope_function(*xi_st, s)) < 1e-9);
  CHECK(slope_derivative(*xi_st, s) > 0.0);

  const auto mx = max_slope_point(s);
  REQUIRE(mx);
  CHECK(mx->xi_mx == doctest::Approx(1.21028698080597).epsilon(1e-7));
  CHECK(mx->S_mx == doctest::Approx(2.88381169873535).epsilon(1e-9));
  CHECK(mx->xi_mx < *xi_st);
  CHECK(std::abs(slope_derivative(mx->xi_mx, s)) < 1e-6);
}

TEST_CASE("6.1 uW values") {
  const auto s = reference_system().with_pump_power(6.1e-6);
  CHECK(*steady_state_amplitude(s) == doctest::Approx(1.17970759515).epsilon(1e-8));
  const auto mx = max_slope_point(s);
  CHECK(mx->xi_mx == doctest::Approx(0.660558175029).epsilon(1e-6));
  CHECK(mx->S_mx == doctest::Approx(0.166228024545).epsilon(1e-8));
}

TEST_CASE("below threshold there is no limit cycle") {
  const auto s = reference_system().with_pump_power(3e-6);
  CHECK(origin_slope(s) > 0.0);
  CHECK_FALSE(steady_state_amplitude(s));
  CHECK_FALSE(max_slope_point(s));
  // S stays positive on (0, 20].
  for (double xi = 0.01; xi <= 20.0; xi += 0.01) CHECK(slope_function(xi, s) > 0.0);
}

TEST_CASE("threshold power and constant") {
  const auto s = reference_system();
  const double p = threshold_power(s);
  CHECK(p == doctest::Approx(4.4113e-6).epsilon(1e-4));
  CHECK(origin_slope(s.with_pump_power(p)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(threshold_constant(s) == doctest::Approx(2.6434e-12).epsilon(1e-4));
  // P_th = C / A with A = 2 g0^2 / (gamma omega) when the probe is resonant.
  CHECK(p == doctest::Approx(threshold_constant(s) / s.alpha()).epsilon(1e-12));
  // Doubling g0 quarters the threshold.
  CHECK(threshold_power(s.with_g0(2.0 * s.g0)) == doctest::Approx(p / 4.0).epsilon(1e-12));
  CHECK(g0_from_threshold(p, s) == doctest::Approx(s.g0).epsilon(1e-12));
}

TEST_CASE("no antidamping without a blue-detuned pump") {
  auto s = reference_system();
  s.pump.bare_detuning = 0.0;
  CHECK_THROWS_AS(threshold_power(s), NoThresholdError);
  CHECK_THROWS_AS(threshold_constant(s), NoThresholdError);
  s.pump.bare_detuning = -two_pi * 239.35e3;
  CHECK_THROWS_AS(threshold_power(s), NoThresholdError);
  CHECK(origin_slope(s) > 1.0);
}

TEST_CASE("effective rates at the origin") {
  const auto s = reference_system();
  const auto r = effective_rates(0.0, s);
  CHECK(r.gamma_eff / s.mech.gamma_m == doctest::Approx(origin_slope(s)).epsilon(1e-12));
  const auto r1 = effective_rates(1e-6, s);
  CHECK(r1.gamma_eff == doctest::Approx(r.gamma_eff).epsilon(1e-6));
  CHECK(r1.delta_omega_eff == doctest::Approx(r.delta_omega_eff).epsilon(1e-6));
  // gamma_eff / gamma_m = S(xi) / xi.
  const auto r2 = effective_rates(1.5, s);
  CHECK(r2.gamma_eff / s.mech.gamma_m == doctest::Approx(slope_function(1.5, s) / 1.5).epsilon(1e-12));
}

TEST_CASE("integrated amplitude settles on the limit cycle") {
  const auto s = reference_system();
  const auto path = integrate_amplitude(s, 0.01, 10.0, 1e-3, 0.0, 100);
  CHECK(path.front().xi == 0.01);
  CHECK(path.back().tau == doctest::Approx(10.0));
  CHECK(path.back().xi == doctest::Approx(*steady_state_amplitude(s)).epsilon(1e-8));
  // Early growth follows exp(-S'(0) tau).
  const auto early = integrate_amplitude(s, 1e-6, 0.5, 1e-3);
  CHECK(early.back().xi == doctest::Approx(1e-6 * std::exp(-origin_slope(s) * 0.5)).epsilon(1e-6));
  // The fastest growth along the path matches S_mx.
  double best = 0.0;
  const auto fine = integrate_amplitude(s, 0.01, 2.0, 1e-4);
  for (std::size_t i = 1; i < fine.size(); ++i)
    best = std::max(best, (fine[i].xi - fine[i - 1].xi) / (fine[i].tau - fine[i - 1].tau));
  CHECK(best == doctest::Approx(max_slope_point(s)->S_mx).epsilon(1e-4));
  CHECK_THROWS_AS(integrate_amplitude(s, -1.0, 1.0), DomainError);
}

TEST_CASE("tabulated model agrees with the direct root search") {
  const auto base = reference_system();
  const MaxSlopeModel model(base);
  for (double p : {4.0e-6, 5e-6, 6.1e-6, 12e-6, 21e-6, 30e-6}) {
    for (double g : {0.8 * base.g0, base.g0, 1.3 * base.g0}) {
      CAPTURE(p);
      CAPTURE(g);
      const auto sys = base.with_pump_power(p).with_g0(g);
      const auto direct = max_slope_point(sys);
      const auto v = model.evaluate(p, g);
      CHECK(v.above_threshold == direct.has_value());
      if (direct) {
        CHECK(v.S_mx == doctest::Approx(direct->S_mx).epsilon(1e-10));
        CHECK(v.xi_mx == doctest::Approx(direct->xi_mx).epsilon(1e-6));
      } else {
        CHECK(v.S_mx == 0.0);
      }
    }
  }
}

TEST_CASE("analytic dS_mx/dg0 against finite differences") {
  const auto base = reference_system();
  const MaxSlopeModel model(base);
  for (double p : {6e-6, 21e-6}) {
    const double g = base.g0;
    const double h = 1e-6 * g;
    const double fd = (model(p, g + h) - model(p, g - h)) / (2 * h);
    CHECK(model.evaluate(p, g).dS_dg0 == doctest::Approx(fd).epsilon(1e-6));
  }
}
