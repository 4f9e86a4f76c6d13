#include <doctest.h>

#include <cmath>
#include <vector>

#include "nvmem/error.hpp"
#include "nvmem/fitting.hpp"
#include "nvmem/optical.hpp"

using namespace nvmem;

TEST_SUITE("optical") {
  TEST_CASE("ISC rate from the lifetimes") {
    const double r = isc_rate_from_lifetimes(12.3e-9, 7.4e-9);
    CHECK(r == doctest::Approx(1 / 7.4e-9 - 1 / 12.3e-9).epsilon(1e-15));
    CHECK(r / (2 * kPi) == doctest::Approx(8.567e6).epsilon(1e-3));
    CHECK_THROWS_AS(isc_rate_from_lifetimes(7.4e-9, 12.3e-9), Error);
    const auto m = OpticalLevelModel::reference();
    CHECK(m.isc_rate() == r);
    CHECK(m.eprime_radiative_rate() == doctest::Approx(1 / 12.3e-9));
  }

  TEST_CASE("calibrated pulse has area pi and finite support") {
    const auto p = calibrated_pi_pulse(2.6e-9, 10e-9);
    CHECK(p.area() == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(p.rabi(10e-9) == p.peak_rabi);
    CHECK(p.end() - p.begin() > 2 * 2.6e-9);
    // intensity (rabi^2) FWHM equals the configured width
    CHECK(p.rabi(10e-9 + 1.3e-9) * p.rabi(10e-9 + 1.3e-9) == doctest::Approx(0.5 * p.peak_rabi * p.peak_rabi));
  }

  TEST_CASE("without ISC the electron never reaches ms0") {
    auto m = OpticalLevelModel::reference();
    m.isc_es = 1e-300;
    const auto pulse = calibrated_pi_pulse();
    for (std::uint64_t i = 0; i < 2000; ++i) {
      Rng rng = stream_for(3, i);
      const auto path = jump_trajectory(m, {pulse}, ElectronState::msMinus1, 2e-6, rng);
      CHECK_FALSE(path.reached_singlet);
      CHECK(path.state_at(2e-6) == ElectronState::msMinus1);
    }
  }

  TEST_CASE("ms0 is not addressed by the pump") {
    Rng rng(1);
    const auto path = jump_trajectory(OpticalLevelModel::reference(), {calibrated_pi_pulse()},
                                      ElectronState::ms0, 1e-6, rng);
    CHECK(path.changes.size() == 1);
    CHECK(path.excitations == 0);
  }

  TEST_CASE("E' population decays with the E' lifetime") {
    const auto m = OpticalLevelModel::reference();
    const auto pulse = calibrated_pi_pulse();
    std::vector<double> times;
    for (int i = 0; i < 16; ++i) times.push_back(pulse.end() + 2e-9 * i);
    const auto pop = eprime_population(m, pulse, times, 40000, 5);
    FitOptions opt;
    const auto r = fit_exponential(pop, ExpDirection::decay, opt);
    CHECK(r.value("T") == doctest::Approx(7.4e-9).epsilon(0.02));
  }

  TEST_CASE("branching inversion round trip") {
    const auto b = branching_from_measurement(0.41, 0.41 * 0.8);
    CHECK(b.b0 == doctest::Approx(0.8));
    CHECK(b.b_plus == doctest::Approx(0.1));
    CHECK(b.b_minus == doctest::Approx(0.1));
    CHECK(b.ratio_to_minus() == doctest::Approx(8.0));
    CHECK_THROWS_AS(branching_from_measurement(0.41, 0.41, false), Error);
    CHECK_THROWS_AS(branching_from_measurement(0.41, 0.5), Error);
  }

  TEST_CASE("simulated long-delay F(0) inverts to the configured branching") {
    for (double zero : {8.0, 2.0}) {
      auto m = OpticalLevelModel::reference();
      m.branching = Branching::from_ratio(zero, 1, 1);
      PumpProbeOptions opt;
      opt.trials = 20000;
      opt.seed = 17;
      const auto res = pump_probe_curve(m, calibrated_pi_pulse(), {5e-6}, opt);
      const double f0 = res.points[0].f0;
      CHECK(f0 == doctest::Approx(res.pulse.p_singlet * zero / (zero + 2)).epsilon(0.05));
      const auto b = branching_from_measurement(res.pulse.p_singlet, f0);
      CHECK(b.b0 == doctest::Approx(zero / (zero + 2)).epsilon(0.05));
    }
  }

  TEST_CASE("pulse statistics are thread independent") {
    const auto m = OpticalLevelModel::reference();
    const auto a = pulse_statistics(m, calibrated_pi_pulse(), 3000, 9, 1);
    const auto b = pulse_statistics(m, calibrated_pi_pulse(), 3000, 9, 4);
    CHECK(a.p_singlet == b.p_singlet);
    CHECK(a.p_double_excitation == b.p_double_excitation);
    CHECK(a.p_excited >= a.p_double_excitation);
  }

  TEST_CASE("step-size guard and input validation") {
    const auto m = OpticalLevelModel::reference();
    Rng rng(1);
    JumpOptions coarse;
    coarse.dt = 1e-9;
    try {
      jump_trajectory(m, {calibrated_pi_pulse()}, ElectronState::msMinus1, 1e-6, rng, coarse);
      FAIL("expected a step-size error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::step_size);
    }
    CHECK_THROWS_AS(jump_trajectory(m, {}, ElectronState::singlet, 1e-6, rng), Error);
    auto bad = m;
    bad.isc_es = 1e9;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}
