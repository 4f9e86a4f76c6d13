#pragma once

#include <cstdint>
#include <vector>

#include "nvmem/fitting.hpp"
#include "nvmem/physics.hpp"
#include "nvmem/rng.hpp"

namespace nvmem {

// Relative decay probabilities from the singlet into |0>, |+1>, |-1>.
struct Branching {
  double b0 = 0.8;
  double b_plus = 0.1;
  double b_minus = 0.1;

  static Branching from_ratio(double zero, double plus = 1.0, double minus = 1.0);
  // b0 : b+ : b- scaled so that b- = 1.
  double ratio_to_minus() const { return b0 / b_minus; }
  void validate(bool symmetric) const;
};

struct OpticalLevelModel {
  double t_ex = 12.3e-9;        // |Ex> radiative lifetime
  double t_eprime = 7.4e-9;     // |E'> total lifetime
  double isc_es = 0.0;          // |E'> -> |S>, 1/s (0 -> derived from the lifetimes)
  double isc_xs = 0.0;          // |Ex> -> |S>
  double t_singlet = 368e-9;
  Branching branching{};
  bool symmetric = true;
  double strain_shift_hz = 0.0; // metadata only

  // Lifetimes with the ISC rate derived from them and 8:1:1 branching.
  static OpticalLevelModel reference();
  double isc_rate() const;
  double eprime_radiative_rate() const { return 1.0 / t_eprime - isc_rate(); }
  void validate() const;
};

enum class PulseShape { gaussian, square };

struct PulseEnvelope {
  PulseShape shape = PulseShape::gaussian;
  double width = 2.6e-9;   // intensity FWHM (gaussian) or duration (square)
  double peak_rabi = 0.0;  // rad/s
  double time = 0.0;       // centre (gaussian) or start (square)

  // Drive amplitude Omega(t); the Rabi envelope of a gaussian intensity
  // profile is sqrt(2) wider than the intensity.
  double rabi(double t) const;
  double begin() const;
  double end() const;
  double area() const;
  void validate() const;
};

// Gaussian pulse whose Rabi area is pi.
PulseEnvelope calibrated_pi_pulse(double fwhm = 2.6e-9, double centre = 0.0);

struct JumpOptions {
  // Integration step bound: max(rate, Omega) * dt <= max_rate_dt.
  double max_rate_dt = 0.05;
  // Explicit step (0 = derive from max_rate_dt); rejected when rate*dt > 0.1.
  double dt = 0.0;
};

struct StateChange {
  double time = 0.0;
  ElectronState state = ElectronState::ms0;
};

// Time-stamped path. While a pulse drives a ground state the path keeps the
// ground label until a jump; at pulse end the state is projected.
struct OpticalPath {
  std::vector<StateChange> changes;  // first entry is the initial state
  int excitations = 0;               // jumps out of |E'>
  bool reached_singlet = false;

  ElectronState state_at(double t) const;
  // Total time spent in `s` within [t0, t1].
  double time_in(ElectronState s, double t0, double t1) const;
};

OpticalPath jump_trajectory(const OpticalLevelModel& model, const std::vector<PulseEnvelope>& pulses,
                            ElectronState initial, double horizon, Rng& rng,
                            const JumpOptions& opt = {});

struct PulseStatistics {
  double p_singlet = 0.0;            // p_s
  double p_excited = 0.0;            // at least one excitation
  double p_double_excitation = 0.0;  // two or more
  long trials = 0;
};

PulseStatistics pulse_statistics(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                 long trials, std::uint64_t seed, int threads = 1,
                                 const JumpOptions& opt = {});

// How the 40 ns probe maps a path onto "found in |0>".
enum class ProbeReadout {
  window_start,  // occupation of |0> when the probe opens
  window_mean,   // fraction of the window spent in |0>
  window_end,    // occupation when the probe closes
};

struct PumpProbeOptions {
  double probe_window = 40e-9;
  ProbeReadout readout = ProbeReadout::window_start;
  long trials = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  JumpOptions jump;
};

struct PumpProbePoint {
  double delay = 0.0;  // from pump centre
  double f0 = 0.0;
  double std_err = 0.0;
};

struct PumpProbeResult {
  std::vector<PumpProbePoint> points;
  PulseStatistics pulse;  // from the same trajectories
};

PumpProbeResult pump_probe_curve(const OpticalLevelModel& model, const PulseEnvelope& pi_pulse,
                                 const std::vector<double>& delays,
                                 const PumpProbeOptions& opt = {});

// Gamma_es = 1/t_E' - 1/t_Ex (assuming no Ex -> S crossing).
double isc_rate_from_lifetimes(double t_ex, double t_eprime);

// Single-excitation inversion: F0 = p_s * b0, b+ = b- = (1 - b0) / 2.
Branching branching_from_measurement(double p_s, double f0_asymptote, bool symmetric = true);

// Same inversion with p_s taken from the jump simulation of `model`, so
// multiple excitations within the pulse are accounted for.
Branching branching_from_jump_simulation(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                         double f0_asymptote, long trials, std::uint64_t seed,
                                         int threads = 1);

// Fraction of |E'> population left at each time after the pump (ensemble).
std::vector<DataPoint> eprime_population(const OpticalLevelModel& model, const PulseEnvelope& pulse,
                                         const std::vector<double>& times, long trials,
                                         std::uint64_t seed, int threads = 1);

}  // namespace nvmem
