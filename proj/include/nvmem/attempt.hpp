#pragma once

#include <vector>

#include "nvmem/physics.hpp"
#include "nvmem/rng.hpp"

namespace nvmem {

// How the inter-pulse delay t is chosen when the field or spin changes.
enum class DelayRule {
  fixed,          // use inter_pulse_delay as given
  larmor_period,  // t = k * 2 pi / omega_0
  phase_matched,  // t = k * 2 pi / delta_omega
};

// One entangling attempt:
//   [pre-wait] R(alpha) -- t -- [R(pi) -- t] -- repump(t_r) -- T
// The pre-wait pads the attempt up to attempt_duration.
struct AttemptSequence {
  double alpha = kPi / 2;
  bool has_middle_pi = true;
  double inter_pulse_delay = 0.0;          // t
  double post_repump_delay = 0.0;          // T
  double repump_duration = 2e-6;           // t_r
  double attempt_duration = 7e-6;
  // Start the repump one mean reset time early so the stochastic reset
  // contributes zero mean phase.
  bool compensate_repump_mean = true;
  // Accept alpha outside {pi/2, pi}; the pulse then transfers with
  // probability sin^2(alpha / 2).
  bool generic_alpha = false;

  DelayRule delay_rule = DelayRule::fixed;
  int delay_multiple = 1;

  int pulse_waits() const { return has_middle_pi ? 2 : 1; }
  // Sum of the scheduled parts (without pre-wait).
  double scheduled_duration() const;
  double pre_wait() const { return attempt_duration - scheduled_duration(); }
  // Time between the end of the repump window and the first microwave pulse
  // of the next attempt.
  double repump_to_microwave_delay() const { return post_repump_delay + pre_wait(); }
  void validate() const;

  // Copy with delay t replaced, keeping the pre-wait unchanged.
  AttemptSequence with_delay(double t) const;
  // Applies delay_rule for the given spin and field (no-op for `fixed`).
  AttemptSequence resolved(const NuclearSpinParams& spin, const FieldParams& field) const;
};

struct NoiseModel {
  double p_mw = 0.0;
  double p_init = 0.0;
  double tau = 0.0;               // mean reset time; 0 is the instantaneous-reset limit
  double sigma_tau_qs = 0.0;      // run-to-run width of tau
  double sigma_detuning_qs = 0.0; // run-to-run nuclear detuning width, rad/s
  double p_depol_per_attempt = 0.0;
  // Failed pi/2 pulses act as the identity, like failed pi pulses.
  bool half_pi_can_fail = true;

  void validate() const;
};

// Quasi-static values drawn once per run.
struct RunContext {
  double tau = 0.0;
  double detuning = 0.0;
};

RunContext draw_run_context(const NoiseModel& noise, Rng& rng);

// Detuning width that reproduces a Gaussian free-induction decay exp[-(t/T2*)^2].
inline double detuning_width_for_t2_star(double t2_star) { return 1.4142135623730951 / t2_star; }
// Per-attempt depolarization giving a 1/e eigenstate decay after n attempts.
double depolarization_for_decay_constant(double n_attempts);

struct AttemptOutcome {
  ElectronTrajectory trajectory;
  ElectronState exit_state = ElectronState::ms0;  // entry state of the next attempt
  bool ended_in_ms0 = true;
  bool init_failed = false;
  bool mw_failed = false;
};

AttemptOutcome realize_attempt(const AttemptSequence& seq, const NoiseModel& noise,
                               ElectronState entry_state, Rng& rng, const RunContext& ctx);

// Same as above but reuses `out` (and its segment storage).
void realize_attempt(const AttemptSequence& seq, const NoiseModel& noise,
                     ElectronState entry_state, Rng& rng, const RunContext& ctx,
                     AttemptOutcome& out);

struct PhaseBranch {
  double probability = 0.0;
  double phase = 0.0;  // lab-frame phase, rad
  ElectronState before = ElectronState::ms0;
  ElectronState after = ElectronState::ms0;
};

// Closed-form outcome list for R(pi/2) - t - R(pi) - t with failing pi pulse.
std::vector<PhaseBranch> attempt_phase_branches(const AttemptSequence& seq, double p_mw,
                                                const NuclearSpinParams& spin,
                                                const FieldParams& field);

}  // namespace nvmem
