#include "nvmem/attempt.hpp"

#include <algorithm>
#include <cmath>

#include "nvmem/error.hpp"

namespace nvmem {
namespace {

constexpr double kAngleTol = 1e-12;

bool is_half_pi(double a) { return std::abs(a - kPi / 2) < kAngleTol; }
bool is_pi(double a) { return std::abs(a - kPi) < kAngleTol; }

double transfer_probability(double alpha) {
  if (is_pi(alpha)) return 1.0;
  if (is_half_pi(alpha)) return 0.5;
  const double s = std::sin(alpha / 2);
  return s * s;
}

// Microwave rotation on the {0, -1} qubit; +1 is not addressed.
ElectronState apply_pulse(ElectronState s, double alpha, bool can_fail, double p_mw, Rng& rng,
                          bool& failed) {
  if (can_fail && bernoulli(rng, p_mw)) {
    failed = true;
    return s;
  }
  if (s == ElectronState::msPlus1) return s;
  const double p = transfer_probability(alpha);
  const bool flip = p >= 1.0 || (p > 0.0 && uniform01(rng) < p);
  if (!flip) return s;
  return s == ElectronState::ms0 ? ElectronState::msMinus1 : ElectronState::ms0;
}

}  // namespace

double AttemptSequence::scheduled_duration() const {
  return pulse_waits() * inter_pulse_delay + repump_duration + post_repump_delay;
}

void AttemptSequence::validate() const {
  require(alpha > 0.0 && alpha <= kPi + kAngleTol, "alpha must lie in (0, pi]");
  if (!generic_alpha) {
    require(is_half_pi(alpha) || is_pi(alpha), "alpha must be pi/2 or pi unless generic_alpha is set",
            ErrorCode::unsupported_sequence);
  }
  require(inter_pulse_delay >= 0.0 && post_repump_delay >= 0.0 && repump_duration >= 0.0,
          "sequence durations must be >= 0");
  require(delay_multiple >= 1, "delay multiple must be >= 1");
  const double slack = 1e-12 * std::max(1.0, attempt_duration);
  require(pre_wait() >= -slack, "attempt duration shorter than the scheduled pulses, waits and repump");
}

AttemptSequence AttemptSequence::with_delay(double t) const {
  AttemptSequence out = *this;
  out.inter_pulse_delay = t;
  out.attempt_duration = attempt_duration + pulse_waits() * (t - inter_pulse_delay);
  return out;
}

AttemptSequence AttemptSequence::resolved(const NuclearSpinParams& spin,
                                          const FieldParams& field) const {
  switch (delay_rule) {
    case DelayRule::fixed: return *this;
    case DelayRule::larmor_period: return with_delay(delay_multiple * field.larmor_period());
    case DelayRule::phase_matched: return with_delay(phase_match_delay(spin, field, delay_multiple));
  }
  return *this;
}

void NoiseModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob(p_mw) && prob(p_init) && prob(p_depol_per_attempt), "probabilities must lie in [0, 1]");
  require(tau >= 0.0 && std::isfinite(tau), "tau must be >= 0");
  require(sigma_tau_qs >= 0.0 && sigma_detuning_qs >= 0.0, "quasi-static widths must be >= 0");
}

RunContext draw_run_context(const NoiseModel& noise, Rng& rng) {
  RunContext ctx;
  ctx.tau = noise.tau;
  if (noise.sigma_tau_qs > 0.0) {
    ctx.tau = std::max(0.0, noise.tau + std::normal_distribution<double>(0.0, noise.sigma_tau_qs)(rng));
  }
  if (noise.sigma_detuning_qs > 0.0) {
    ctx.detuning = std::normal_distribution<double>(0.0, noise.sigma_detuning_qs)(rng);
  }
  return ctx;
}

double depolarization_for_decay_constant(double n_attempts) {
  require(n_attempts > 0.0, "decay constant must be positive");
  return -std::expm1(-1.0 / n_attempts);
}

void realize_attempt(const AttemptSequence& seq, const NoiseModel& noise, ElectronState entry_state,
                     Rng& rng, const RunContext& ctx, AttemptOutcome& out) {
  if (!is_ground_triplet(entry_state)) {
    fail(ErrorCode::invalid_state,
         std::string("attempt cannot start in optical state ") + to_string(entry_state));
  }
  auto& traj = out.trajectory;
  traj.segments.clear();
  traj.echo_marks.clear();
  out.mw_failed = false;
  out.init_failed = false;

  const double t = seq.inter_pulse_delay;
  const double comp =
      seq.compensate_repump_mean && noise.tau > 0.0 ? std::min(noise.tau, t) : 0.0;

  ElectronState s = entry_state;
  traj.append(s, seq.pre_wait() + comp);
  s = apply_pulse(s, seq.alpha, noise.half_pi_can_fail || !is_half_pi(seq.alpha), noise.p_mw, rng,
                  out.mw_failed);
  if (seq.has_middle_pi) {
    traj.append(s, t);
    s = apply_pulse(s, kPi, true, noise.p_mw, rng, out.mw_failed);
  }
  traj.append(s, t - comp);

  // Repump window: +-1 resets after an exponential time; a draw beyond the
  // window is a failed initialisation.
  const double tr = seq.repump_duration;
  bool failed = false;
  ElectronState post = ElectronState::ms0;
  if (s != ElectronState::ms0) {
    const double d = ctx.tau > 0.0 ? std::exponential_distribution<double>(1.0 / ctx.tau)(rng) : 0.0;
    if (d >= tr) {
      // The unfinished reset carries the current state into the next attempt.
      traj.append(s, tr);
      failed = true;
      post = s;
    } else {
      traj.append(s, d);
      traj.append(ElectronState::ms0, tr - d);
    }
  } else {
    traj.append(ElectronState::ms0, tr);
  }
  if (!failed && noise.p_init > 0.0) {
    // Independent floor so that the configured p_init is the total failure
    // probability of a reset.
    const double p_trunc = ctx.tau > 0.0 && tr > 0.0 ? std::exp(-tr / ctx.tau) : 0.0;
    const double p_floor = std::max(0.0, (noise.p_init - p_trunc) / (1.0 - p_trunc));
    if (bernoulli(rng, p_floor)) {
      failed = true;
      post = uniform01(rng) < 0.5 ? ElectronState::msPlus1 : ElectronState::msMinus1;
    }
  }
  traj.append(post, seq.post_repump_delay);

  out.init_failed = failed;
  out.exit_state = post;
  out.ended_in_ms0 = post == ElectronState::ms0;
}

AttemptOutcome realize_attempt(const AttemptSequence& seq, const NoiseModel& noise,
                               ElectronState entry_state, Rng& rng, const RunContext& ctx) {
  seq.validate();
  noise.validate();
  AttemptOutcome out;
  realize_attempt(seq, noise, entry_state, rng, ctx, out);
  return out;
}

std::vector<PhaseBranch> attempt_phase_branches(const AttemptSequence& seq, double p_mw,
                                                const NuclearSpinParams& spin,
                                                const FieldParams& field) {
  if (!seq.has_middle_pi || !is_half_pi(seq.alpha)) {
    fail(ErrorCode::unsupported_sequence,
         "phase branches are defined for R(pi/2) - t - R(pi) - t sequences only");
  }
  require(p_mw >= 0.0 && p_mw <= 1.0, "p_mw must lie in [0, 1]");
  const double t = seq.inter_pulse_delay;
  const double w0 = precession_frequency(ElectronState::ms0, spin, field);
  const double w1 = precession_frequency(ElectronState::msMinus1, spin, field);
  const double wbar = 0.5 * (w0 + w1);
  std::vector<PhaseBranch> out;
  if (p_mw > 0.0) {
    out.push_back({0.5 * p_mw, 2 * w0 * t, ElectronState::ms0, ElectronState::ms0});
    out.push_back({0.5 * p_mw, 2 * w1 * t, ElectronState::msMinus1, ElectronState::msMinus1});
  }
  if (p_mw < 1.0) {
    out.push_back({1.0 - p_mw, 2 * wbar * t, ElectronState::ms0, ElectronState::msMinus1});
  }
  return out;
}

}  // namespace nvmem
