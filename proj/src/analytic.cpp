#include "nvmem/analytic.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include "nvmem/error.hpp"

namespace nvmem {

void BlokParams::validate() const {
  require(p1 >= 0.0 && p1 <= 1.0, "p1 must lie in [0, 1]");
  require(tau >= 0.0 && delta_omega >= 0.0, "tau and delta omega must be >= 0");
  require(n >= 0.0, "attempt count must be >= 0");
}

namespace {

// log of the single-attempt factor, computed without cancellation.
double log_single_attempt(double tau, double delta_omega, double p1) {
  const double x = delta_omega * tau;
  // 1 - p1 + p1 e^{-x^2/2} = 1 + p1 * expm1(-x^2/2)
  return std::log1p(p1 * std::expm1(-0.5 * x * x));
}

}  // namespace

double blok_coherence(const BlokParams& p) {
  p.validate();
  return std::exp(p.n * log_single_attempt(p.tau, p.delta_omega, p.p1));
}

double blok_decay_constant(double tau, double delta_omega, double p1) {
  BlokParams{tau, delta_omega, p1, 1.0}.validate();
  const double l = log_single_attempt(tau, delta_omega, p1);
  if (l == 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / l;
}

double tau_from_decay(double n_1e, double delta_omega, double p1) {
  require(n_1e > 0.0, "decay constant must be positive");
  require(delta_omega > 0.0, "delta omega must be positive");
  require(p1 > 0.0 && p1 <= 1.0, "p1 must lie in (0, 1]");
  // e^{-x^2/2} = 1 + expm1(-1/n) / p1
  const double arg = std::expm1(-1.0 / n_1e) / p1;
  if (!(arg > -1.0)) {
    fail(ErrorCode::inconsistent_inputs,
         "decay constant too short to be produced with this p1 (log argument <= 0)");
  }
  return std::sqrt(-2.0 * std::log1p(arg)) / delta_omega;
}

double SigmaXY::length() const { return std::hypot(x, y); }

SigmaXY binomial_sigma(int n, double p_init, const SpinPhases& phases, double amplitude) {
  require(n >= 0, "attempt count must be >= 0");
  require(p_init >= 0.0 && p_init <= 1.0, "p_init must lie in [0, 1]");
  using C = std::complex<double>;
  const C z = (1.0 - p_init) * std::polar(1.0, phases.phi0) +
              0.5 * p_init * (std::polar(1.0, phases.phi_plus1) + std::polar(1.0, phases.phi_minus1));
  // Polar power keeps the phase exact for large n.
  const double r = std::abs(z);
  const double arg = std::arg(z);
  const C zn = r == 0.0 ? C(n == 0 ? 1.0 : 0.0, 0.0)
                        : std::polar(std::pow(r, n), std::fmod(n * arg, kTwoPi));
  return {amplitude * zn.real(), amplitude * zn.imag()};
}

SpinPhases failure_phases(const AttemptSequence& seq, const NuclearSpinParams& spin,
                          const FieldParams& field) {
  const auto off = frame_offsets(spin, field);
  const double w_plus = off[static_cast<size_t>(ElectronState::msPlus1)];
  const double w_minus = off[static_cast<size_t>(ElectronState::msMinus1)];
  const double delay = seq.repump_to_microwave_delay();
  SpinPhases ph;
  ph.phi0 = 0.0;
  ph.phi_minus1 = w_minus * delay;
  ph.phi_plus1 = w_plus * (delay + seq.pulse_waits() * seq.inter_pulse_delay);
  return ph;
}

std::vector<RevivalPoint> revival_curve(const NuclearSpinParams& spin, const FieldParams& field,
                                        const AttemptSequence& seq,
                                        const std::vector<double>& delays, int n, double p_init,
                                        double amplitude) {
  require(!delays.empty(), "revival curve needs at least one delay");
  std::vector<RevivalPoint> out;
  out.reserve(delays.size());
  for (double T : delays) {
    require(T >= 0.0, "post-repump delay must be >= 0");
    AttemptSequence s = seq;
    s.attempt_duration += T - seq.post_repump_delay;
    s.post_repump_delay = T;
    const auto ph = failure_phases(s, spin, field);
    out.push_back({T, binomial_sigma(n, p_init, ph, amplitude).length()});
  }
  return out;
}

}  // namespace nvmem
