#include "nvmem/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nvmem/error.hpp"

namespace nvmem {

const char* to_string(ElectronState s) {
  switch (s) {
    case ElectronState::ms0: return "ms0";
    case ElectronState::msMinus1: return "msMinus1";
    case ElectronState::msPlus1: return "msPlus1";
    case ElectronState::excitedEPrime: return "excitedEPrime";
    case ElectronState::excitedEx: return "excitedEx";
    case ElectronState::singlet: return "singlet";
  }
  return "?";
}

bool is_ground_triplet(ElectronState s) {
  return s == ElectronState::ms0 || s == ElectronState::msMinus1 || s == ElectronState::msPlus1;
}

FieldParams FieldParams::from_larmor(double omega0) {
  require(std::isfinite(omega0) && omega0 > 0.0, "Larmor frequency must be positive");
  FieldParams f;
  f.larmor = omega0;
  return f;
}

FieldParams FieldParams::from_field(double gauss, double gamma_hz_per_gauss) {
  require(gauss > 0.0 && gamma_hz_per_gauss > 0.0, "field and gyromagnetic ratio must be positive");
  FieldParams f;
  f.larmor = kTwoPi * gamma_hz_per_gauss * gauss;
  f.field_gauss = gauss;
  return f;
}

NuclearSpinParams NuclearSpinParams::from_hyperfine(std::string label, Hyperfine hf,
                                                    double t2_star, double t2_hahn) {
  require(std::isfinite(hf.a_par) && std::isfinite(hf.a_perp), "hyperfine must be finite");
  require(hf.a_perp >= 0.0, "A_perp must be >= 0");
  require(t2_star > 0.0 && t2_hahn > 0.0, "coherence times must be positive");
  NuclearSpinParams p;
  p.label_ = std::move(label);
  p.hyperfine_ = hf;
  p.direct_dw_.reset();
  p.approximate_ = false;
  p.t2_star_ = t2_star;
  p.t2_hahn_ = t2_hahn;
  return p;
}

NuclearSpinParams NuclearSpinParams::from_delta_omega(std::string label, double delta_omega,
                                                      double t2_star, double t2_hahn,
                                                      bool approximate) {
  require(std::isfinite(delta_omega) && delta_omega >= 0.0, "delta omega must be >= 0");
  require(t2_star > 0.0 && t2_hahn > 0.0, "coherence times must be positive");
  NuclearSpinParams p;
  p.label_ = std::move(label);
  p.direct_dw_ = delta_omega;
  p.approximate_ = approximate;
  p.t2_star_ = t2_star;
  p.t2_hahn_ = t2_hahn;
  return p;
}

double ElectronTrajectory::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

void ElectronTrajectory::append(ElectronState s, double duration) {
  if (duration <= 0.0) return;
  if (!segments.empty() && segments.back().state == s) {
    segments.back().duration += duration;
  } else {
    segments.push_back({s, duration});
  }
}

void ElectronTrajectory::validate() const {
  for (const auto& s : segments) {
    require(s.duration >= 0.0 && std::isfinite(s.duration), "segment durations must be >= 0");
  }
  const double total = total_duration();
  for (size_t i = 0; i < echo_marks.size(); ++i) {
    require(echo_marks[i] >= 0.0 && echo_marks[i] <= total, "echo mark outside trajectory");
    if (i > 0) require(echo_marks[i] > echo_marks[i - 1], "echo marks must be strictly increasing");
  }
}

double precession_frequency(ElectronState state, const NuclearSpinParams& spin,
                            const FieldParams& field) {
  if (!is_ground_triplet(state)) {
    fail(ErrorCode::invalid_state,
         std::string("no nuclear precession frequency for optical state ") + to_string(state));
  }
  const double w0 = field.larmor;
  if (state == ElectronState::ms0) return w0;
  // ms = -1 couples with +A_par, ms = +1 with -A_par.
  const double sign = state == ElectronState::msMinus1 ? 1.0 : -1.0;
  if (const auto& hf = spin.hyperfine()) {
    return std::hypot(w0 + sign * hf->a_par, hf->a_perp);
  }
  if (!spin.delta_omega_approximation()) {
    fail(ErrorCode::missing_hyperfine,
         "spin '" + spin.label() + "' has no hyperfine split and approximation mode is off");
  }
  return w0 + sign * *spin.direct_delta_omega();
}

double delta_omega(const NuclearSpinParams& spin, const FieldParams& field) {
  if (auto dw = spin.direct_delta_omega()) return *dw;
  return std::abs(field.larmor - precession_frequency(ElectronState::msMinus1, spin, field));
}

std::array<double, 6> frame_offsets(const NuclearSpinParams& spin, const FieldParams& field) {
  std::array<double, 6> out;
  out.fill(std::numeric_limits<double>::quiet_NaN());
  for (auto s : {ElectronState::ms0, ElectronState::msMinus1, ElectronState::msPlus1}) {
    if (s == ElectronState::ms0) {
      out[static_cast<size_t>(s)] = 0.0;
      continue;
    }
    // Evaluate the hyperfine shift directly so the large omega_0 cancels
    // analytically rather than numerically.
    const double sign = s == ElectronState::msMinus1 ? 1.0 : -1.0;
    double off;
    if (const auto& hf = spin.hyperfine()) {
      const double w0 = field.larmor;
      const double a = sign * hf->a_par;
      const double b = hf->a_perp;
      const double w = std::hypot(w0 + a, b);
      off = (2.0 * w0 * a + a * a + b * b) / (w + w0);
    } else {
      (void)precession_frequency(s, spin, field);  // rejects direct spins without approximation
      off = sign * *spin.direct_delta_omega();
    }
    out[static_cast<size_t>(s)] = off;
  }
  return out;
}

double accumulate_phase(const ElectronTrajectory& traj, const NuclearSpinParams& spin,
                        const FieldParams& field) {
  traj.validate();
  for (const auto& seg : traj.segments) {
    if (!is_ground_triplet(seg.state)) {
      fail(ErrorCode::invalid_state,
           std::string("trajectory contains optical state ") + to_string(seg.state));
    }
  }
  const auto offsets = frame_offsets(spin, field);
  double phase = 0.0;
  double sign = 1.0;
  double t = 0.0;
  size_t next_mark = 0;
  for (const auto& seg : traj.segments) {
    const double w = offsets[static_cast<size_t>(seg.state)];
    double start = t;
    const double end = t + seg.duration;
    while (next_mark < traj.echo_marks.size() && traj.echo_marks[next_mark] < end) {
      const double m = std::max(traj.echo_marks[next_mark], start);
      phase += sign * w * (m - start);
      sign = -sign;
      start = m;
      ++next_mark;
    }
    phase += sign * w * (end - start);
    t = end;
  }
  return phase;
}

double phase_match_delay(const NuclearSpinParams& spin, const FieldParams& field, int k) {
  require(k >= 1, "phase matching order must be a positive integer");
  const double dw = delta_omega(spin, field);
  if (!(dw > 0.0)) {
    fail(ErrorCode::no_phase_matching, "phase matching needs a non-zero delta omega");
  }
  return k * kTwoPi / dw;
}

}  // namespace nvmem
