#include <doctest.h>

#include <cmath>
#include <map>

#include "nvmem/attempt.hpp"
#include "nvmem/error.hpp"

using namespace nvmem;

namespace {

const FieldParams kField = FieldParams::reference();
const double kDw = 2 * kPi * 62.4e3;
const NuclearSpinParams kSpin = NuclearSpinParams::from_delta_omega("C2", kDw, 9.9e-3);

AttemptSequence base_sequence(double t = 1e-6) {
  AttemptSequence seq;
  seq.inter_pulse_delay = t;
  seq.repump_duration = 2e-6;
  seq.post_repump_delay = 0.5e-6;
  seq.attempt_duration = 2 * t + 2.5e-6 + 1e-6;
  seq.compensate_repump_mean = false;
  return seq;
}

double wrap(double x) { return std::remainder(x, 2 * kPi); }

}  // namespace

TEST_SUITE("attempt") {
  TEST_CASE("noiseless alpha = pi attempt: ms0 -> -1 for t, back to ms0") {
    auto seq = base_sequence(1e-6);
    seq.alpha = kPi;
    NoiseModel noise;
    noise.half_pi_can_fail = false;
    Rng rng(1);
    const auto out = realize_attempt(seq, noise, ElectronState::ms0, rng, RunContext{});
    REQUIRE(out.trajectory.segments.size() == 3);
    CHECK(out.trajectory.segments[0].state == ElectronState::ms0);
    CHECK(out.trajectory.segments[0].duration == doctest::Approx(seq.pre_wait()));
    CHECK(out.trajectory.segments[1].state == ElectronState::msMinus1);
    CHECK(out.trajectory.segments[1].duration == doctest::Approx(1e-6));
    CHECK(out.trajectory.segments[2].state == ElectronState::ms0);
    CHECK(out.ended_in_ms0);
    CHECK(accumulate_phase(out.trajectory, kSpin, kField) == doctest::Approx(kDw * 1e-6));
  }

  TEST_CASE("p_mw = 1 with reliable pi/2: two equal branches, no mixed phase") {
    auto seq = base_sequence(0.7e-6);
    NoiseModel noise;
    noise.p_mw = 1.0;
    noise.half_pi_can_fail = false;
    Rng rng(7);
    const int n = 100000;
    int zero = 0, minus = 0;
    for (int i = 0; i < n; ++i) {
      const auto out = realize_attempt(seq, noise, ElectronState::ms0, rng, RunContext{});
      const double ph = accumulate_phase(out.trajectory, kSpin, kField);
      if (std::abs(ph) < 1e-9) ++zero;
      else if (std::abs(ph - 2 * kDw * 0.7e-6) < 1e-9) ++minus;
    }
    CHECK(zero + minus == n);
    const double se = std::sqrt(0.25 / n);
    CHECK(std::abs(zero / double(n) - 0.5) < 3 * se);
  }

  TEST_CASE("branch frequencies match the closed-form list within 3 sigma") {
    const double t = 0.9e-6;
    auto seq = base_sequence(t);
    NoiseModel noise;
    noise.p_mw = 0.3;
    noise.half_pi_can_fail = false;
    const auto branches = attempt_phase_branches(seq, noise.p_mw, kSpin, kField);
    REQUIRE(branches.size() == 3);
    double total = 0.0;
    for (const auto& b : branches) total += b.probability;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

    std::map<int, int> counts;
    Rng rng(11);
    const int n = 100000;
    const double w0 = kField.larmor;
    for (int i = 0; i < n; ++i) {
      const auto out = realize_attempt(seq, noise, ElectronState::ms0, rng, RunContext{});
      const double ph = accumulate_phase(out.trajectory, kSpin, kField) + 2 * w0 * t;
      bool matched = false;
      for (size_t k = 0; k < branches.size(); ++k) {
        if (std::abs(ph - branches[k].phase) < 1e-6 * branches[k].phase) {
          ++counts[static_cast<int>(k)];
          matched = true;
          break;
        }
      }
      CHECK(matched);
    }
    for (size_t k = 0; k < branches.size(); ++k) {
      const double p = branches[k].probability;
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(counts[static_cast<int>(k)] / double(n) - p) < 3 * se);
    }
  }

  TEST_CASE("attempt duration is preserved for every noise realisation") {
    auto seq = base_sequence(1.3e-6);
    seq.compensate_repump_mean = true;
    NoiseModel noise;
    noise.p_mw = 0.2;
    noise.p_init = 0.1;
    noise.tau = 300e-9;
    noise.sigma_tau_qs = 50e-9;
    Rng rng(5);
    ElectronState entry = ElectronState::ms0;
    for (int i = 0; i < 5000; ++i) {
      const auto ctx = draw_run_context(noise, rng);
      const auto out = realize_attempt(seq, noise, entry, rng, ctx);
      CHECK(out.trajectory.total_duration() == doctest::Approx(seq.attempt_duration).epsilon(1e-12));
      entry = out.exit_state;
    }
  }

  TEST_CASE("phase-matched delay gives zero rotating-frame phase mod 2 pi for every branch") {
    auto seq = base_sequence();
    seq.delay_rule = DelayRule::phase_matched;
    const auto r = seq.resolved(kSpin, kField);
    CHECK(r.inter_pulse_delay == doctest::Approx(1.0 / 62.4e3));
    CHECK(r.pre_wait() == doctest::Approx(seq.pre_wait()));
    const double w0 = kField.larmor;
    for (const auto& b : attempt_phase_branches(r, 0.4, kSpin, kField)) {
      CHECK(std::abs(wrap(b.phase - 2 * w0 * r.inter_pulse_delay)) < 1e-9);
    }
  }

  TEST_CASE("t = pi / dw: mixed branch picks up pi, double -1 branch 2 pi") {
    auto seq = base_sequence(kPi / kDw);
    const double w0 = kField.larmor;
    const auto br = attempt_phase_branches(seq, 0.5, kSpin, kField);
    REQUIRE(br.size() == 3);
    CHECK(std::abs(wrap(br[0].phase - 2 * w0 * seq.inter_pulse_delay)) < 1e-9);
    CHECK(std::abs(wrap(br[1].phase - 2 * w0 * seq.inter_pulse_delay)) < 1e-9);
    CHECK(std::abs(std::abs(wrap(br[2].phase - 2 * w0 * seq.inter_pulse_delay)) - kPi) < 1e-9);
  }

  TEST_CASE("larmor-period rule and with_delay keep the pre-wait") {
    auto seq = base_sequence();
    seq.delay_rule = DelayRule::larmor_period;
    seq.delay_multiple = 2;
    const auto r = seq.resolved(kSpin, kField);
    CHECK(r.inter_pulse_delay == doctest::Approx(2 * kField.larmor_period()));
    CHECK(r.pre_wait() == doctest::Approx(seq.pre_wait()));
  }

  TEST_CASE("validation errors") {
    auto seq = base_sequence();
    seq.alpha = 1.0;
    CHECK_THROWS_AS(seq.validate(), Error);
    seq.generic_alpha = true;
    CHECK_NOTHROW(seq.validate());
    seq = base_sequence();
    seq.attempt_duration = 1e-6;
    CHECK_THROWS_AS(seq.validate(), Error);
    NoiseModel noise;
    noise.p_mw = 1.5;
    CHECK_THROWS_AS(noise.validate(), Error);
    Rng rng(1);
    CHECK_THROWS_AS(realize_attempt(base_sequence(), NoiseModel{}, ElectronState::singlet, rng, RunContext{}),
                    Error);
    auto no_pi = base_sequence();
    no_pi.has_middle_pi = false;
    CHECK_THROWS_AS(attempt_phase_branches(no_pi, 0.1, kSpin, kField), Error);
  }

  TEST_CASE("p_init is the total failure probability including truncation") {
    auto seq = base_sequence();
    seq.alpha = kPi;
    seq.has_middle_pi = false;  // every reset starts from -1
    seq.attempt_duration = seq.scheduled_duration() + 1e-6;
    NoiseModel noise;
    noise.tau = 400e-9;
    noise.p_init = 0.01;
    Rng rng(3);
    const int n = 200000;
    int failed = 0;
    RunContext ctx{noise.tau, 0.0};
    for (int i = 0; i < n; ++i) {
      failed += realize_attempt(seq, noise, ElectronState::ms0, rng, ctx).init_failed;
    }
    const double se = std::sqrt(0.01 * 0.99 / n);
    CHECK(std::abs(failed / double(n) - 0.01) < 3 * se);
    CHECK(depolarization_for_decay_constant(3500) == doctest::Approx(1 - std::exp(-1.0 / 3500)));
  }

  TEST_CASE("an unfinished reset keeps the electron in its state") {
    auto seq = base_sequence();
    seq.alpha = kPi;
    seq.has_middle_pi = false;
    seq.repump_duration = 10e-9;
    seq.attempt_duration = seq.scheduled_duration() + 1e-6;
    NoiseModel noise;
    noise.tau = 1e-6;
    Rng rng(8);
    int truncated = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto out = realize_attempt(seq, noise, ElectronState::ms0, rng, RunContext{noise.tau, 0.0});
      if (out.init_failed) {
        ++truncated;
        CHECK(out.exit_state == ElectronState::msMinus1);
      }
    }
    CHECK(truncated > 1900);
  }
}
