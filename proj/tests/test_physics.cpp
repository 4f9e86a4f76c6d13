#include <doctest.h>

#include <cmath>
#include <random>

#include "nvmem/error.hpp"
#include "nvmem/physics.hpp"

using namespace nvmem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::io;  // sentinel: nothing thrown
}

ElectronTrajectory two_segments(ElectronState a, double da, ElectronState b, double db) {
  ElectronTrajectory t;
  t.segments = {{a, da}, {b, db}};
  return t;
}

}  // namespace

TEST_SUITE("physics") {
  TEST_CASE("reference field: 443.275 kHz Larmor frequency and its period") {
    const auto f = FieldParams::reference();
    CHECK(f.larmor == doctest::Approx(2 * M_PI * 443.275e3).epsilon(1e-15));
    CHECK(f.larmor_period() == doctest::Approx(1.0 / 443.275e3).epsilon(1e-14));
    // gamma * 414 G reproduces the stored value to 5e-4
    CHECK(FieldParams::from_field(414.0).larmor / f.larmor == doctest::Approx(1.0).epsilon(5e-4));
  }

  TEST_CASE("Larmor period at 4.14 kG is about 225.6 ns") {
    const auto f = FieldParams::from_field(4140.0);
    CHECK(f.larmor_period() == doctest::Approx(1.0 / (1070.84 * 4140.0)).epsilon(1e-14));
    CHECK(f.larmor_period() == doctest::Approx(225.6e-9).epsilon(1e-3));
  }

  TEST_CASE("hyperfine precession frequencies") {
    const auto f = FieldParams::reference();
    const double w0 = f.larmor;
    const Hyperfine hf{2 * M_PI * 30e3, 2 * M_PI * 20e3};
    const auto spin = NuclearSpinParams::from_hyperfine("X", hf, 10e-3);
    CHECK(precession_frequency(ElectronState::ms0, spin, f) == w0);
    CHECK(precession_frequency(ElectronState::msMinus1, spin, f) ==
          doctest::Approx(std::sqrt((w0 + hf.a_par) * (w0 + hf.a_par) + hf.a_perp * hf.a_perp)));
    CHECK(precession_frequency(ElectronState::msPlus1, spin, f) ==
          doctest::Approx(std::sqrt((w0 - hf.a_par) * (w0 - hf.a_par) + hf.a_perp * hf.a_perp)));
  }

  TEST_CASE("frequencies grow with A_perp and equal |w0 +- A_par| without it") {
    const auto f = FieldParams::reference();
    const double a = -2 * M_PI * 50e3;
    double last_m = 0.0, last_p = 0.0;
    for (double perp : {0.0, 1e4, 5e4, 2e5, 1e6}) {
      const auto spin = NuclearSpinParams::from_hyperfine("X", {a, perp}, 1e-2);
      const double wm = precession_frequency(ElectronState::msMinus1, spin, f);
      const double wp = precession_frequency(ElectronState::msPlus1, spin, f);
      CHECK(wm >= std::abs(f.larmor + a) * (1 - 1e-15));
      CHECK(wp >= std::abs(f.larmor - a) * (1 - 1e-15));
      if (perp == 0.0) {
        CHECK(wm == doctest::Approx(std::abs(f.larmor + a)).epsilon(1e-15));
        CHECK(wp == doctest::Approx(std::abs(f.larmor - a)).epsilon(1e-15));
      } else {
        CHECK(wm > last_m);
        CHECK(wp > last_p);
      }
      last_m = wm;
      last_p = wp;
    }
  }

  TEST_CASE("frame offsets avoid cancellation and agree with the direct difference") {
    const auto f = FieldParams::reference();
    const auto spin = NuclearSpinParams::from_hyperfine("X", {2 * M_PI * 1.0, 2 * M_PI * 0.5}, 1e-2);
    const auto off = frame_offsets(spin, f);
    const long double w0 = f.larmor, a = 2 * M_PI * 1.0, b = 2 * M_PI * 0.5;
    const long double exact = std::sqrt((w0 + a) * (w0 + a) + b * b) - w0;
    CHECK(off[1] == doctest::Approx(static_cast<double>(exact)).epsilon(1e-9));
    CHECK(off[0] == 0.0);
    CHECK(std::isnan(off[3]));
    CHECK(std::isnan(off[5]));
  }

  TEST_CASE("approximation mode: w(-1) = w0 + dw, w(+1) = w0 - dw") {
    const auto f = FieldParams::reference();
    const double dw = 2 * M_PI * 62.4e3;
    const auto spin = NuclearSpinParams::from_delta_omega("C2", dw, 9.9e-3);
    CHECK(precession_frequency(ElectronState::msMinus1, spin, f) == f.larmor + dw);
    CHECK(precession_frequency(ElectronState::msPlus1, spin, f) == f.larmor - dw);
    CHECK(delta_omega(spin, f) == dw);
    const auto off = frame_offsets(spin, f);
    CHECK(off[1] == dw);
    CHECK(off[2] == -dw);
  }

  TEST_CASE("errors: optical states, missing hyperfine, zero coupling") {
    const auto f = FieldParams::reference();
    const auto spin = NuclearSpinParams::from_delta_omega("C1", 1e5, 1e-2);
    CHECK(code_of([&] { precession_frequency(ElectronState::singlet, spin, f); }) ==
          ErrorCode::invalid_state);
    const auto exact = NuclearSpinParams::from_delta_omega("C1", 1e5, 1e-2, kDefaultT2Hahn, false);
    CHECK(code_of([&] { precession_frequency(ElectronState::msMinus1, exact, f); }) ==
          ErrorCode::missing_hyperfine);
    CHECK(precession_frequency(ElectronState::ms0, exact, f) == f.larmor);
    const NuclearSpinParams zero;
    CHECK(code_of([&] { phase_match_delay(zero, f); }) == ErrorCode::no_phase_matching);
  }

  TEST_CASE("phase matching delay is k 2pi / dw") {
    const auto f = FieldParams::reference();
    const auto spin = NuclearSpinParams::from_delta_omega("C3", 2 * M_PI * 77e3, 9.5e-3);
    CHECK(phase_match_delay(spin, f) == doctest::Approx(1.0 / 77e3).epsilon(1e-14));
    CHECK(phase_match_delay(spin, f, 3) == doctest::Approx(3.0 / 77e3).epsilon(1e-14));
  }

  TEST_CASE("accumulate_phase: rotating-frame sum, echo flips, Hahn identity") {
    const auto f = FieldParams::reference();
    const double dw = 2 * M_PI * 26e3;
    const auto spin = NuclearSpinParams::from_delta_omega("S", dw, 1e-2);
    auto t = two_segments(ElectronState::msMinus1, 1e-6, ElectronState::ms0, 2e-6);
    CHECK(accumulate_phase(t, spin, f) == doctest::Approx(dw * 1e-6));
    t.segments.push_back({ElectronState::msPlus1, 3e-6});
    CHECK(accumulate_phase(t, spin, f) == doctest::Approx(dw * 1e-6 - dw * 3e-6));

    auto hahn = two_segments(ElectronState::msMinus1, 4e-6, ElectronState::msMinus1, 4e-6);
    hahn.echo_marks = {4e-6};
    CHECK(std::abs(accumulate_phase(hahn, spin, f)) < 1e-12);

    // mark inside a segment splits it
    ElectronTrajectory one;
    one.segments = {{ElectronState::msMinus1, 10e-6}};
    one.echo_marks = {3e-6};
    CHECK(accumulate_phase(one, spin, f) == doctest::Approx(dw * (3e-6 - 7e-6)));
  }

  TEST_CASE("accumulate_phase is additive and invariant under subdivision") {
    const auto f = FieldParams::reference();
    const auto spin = NuclearSpinParams::from_hyperfine("X", {2 * M_PI * 40e3, 2 * M_PI * 15e3}, 1e-2);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> st(0, 2);
    std::uniform_real_distribution<double> dur(0.0, 5e-6);
    for (int rep = 0; rep < 50; ++rep) {
      ElectronTrajectory a, b, ab, split;
      for (int i = 0; i < 5; ++i) a.segments.push_back({static_cast<ElectronState>(st(rng)), dur(rng)});
      for (int i = 0; i < 5; ++i) b.segments.push_back({static_cast<ElectronState>(st(rng)), dur(rng)});
      ab.segments = a.segments;
      ab.segments.insert(ab.segments.end(), b.segments.begin(), b.segments.end());
      CHECK(accumulate_phase(ab, spin, f) ==
            doctest::Approx(accumulate_phase(a, spin, f) + accumulate_phase(b, spin, f)).epsilon(1e-12));
      for (const auto& s : a.segments) {
        split.segments.push_back({s.state, 0.3 * s.duration});
        split.segments.push_back({s.state, 0.7 * s.duration});
      }
      CHECK(accumulate_phase(split, spin, f) == doctest::Approx(accumulate_phase(a, spin, f)).epsilon(1e-12));
    }
  }

  TEST_CASE("trajectory validation") {
    ElectronTrajectory t;
    t.append(ElectronState::ms0, 1e-6);
    t.append(ElectronState::ms0, 1e-6);
    t.append(ElectronState::msMinus1, 0.0);
    CHECK(t.segments.size() == 1);
    CHECK(t.total_duration() == doctest::Approx(2e-6));
    t.echo_marks = {3e-6};
    CHECK_THROWS_AS(t.validate(), Error);
  }
}
