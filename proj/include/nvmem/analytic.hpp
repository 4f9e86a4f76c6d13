#pragma once

#include <utility>
#include <vector>

#include "nvmem/attempt.hpp"
#include "nvmem/physics.hpp"

namespace nvmem {

struct BlokParams {
  double tau = 0.0;          // s
  double delta_omega = 0.0;  // rad/s
  double p1 = 0.5;           // probability the electron ends an attempt in |+-1>
  double n = 1.0;            // attempts

  void validate() const;
};

// (1 - p1 + p1 exp(-dw^2 tau^2 / 2))^N
double blok_coherence(const BlokParams& p);

// 1/e decay constant N_1/e = -1 / ln(single-attempt coherence). Returns +inf
// when there is no decay.
double blok_decay_constant(double tau, double delta_omega, double p1);

// Inverse of blok_decay_constant in tau.
double tau_from_decay(double n_1e, double delta_omega, double p1);

struct SpinPhases {
  double phi0 = 0.0;
  double phi_plus1 = 0.0;
  double phi_minus1 = 0.0;
};

struct SigmaXY {
  double x = 0.0;
  double y = 0.0;
  double length() const;
};

// Expectation values after n attempts with binomially distributed
// initialisation failures (split evenly between +1 and -1):
//   A * [(1-p) e^{i phi0} + (p/2)(e^{i phi+1} + e^{i phi-1})]^n
SigmaXY binomial_sigma(int n, double p_init, const SpinPhases& phases, double amplitude = 1.0);

// Per-attempt phases for the initialisation-failure sequence with the
// repump-to-microwave delay T. A failed reset leaves the electron in +-1 for
// T; +1 is also not addressed by the microwave and keeps precessing through
// the inter-pulse waits, whose contribution for -1 is assumed phase matched.
SpinPhases failure_phases(const AttemptSequence& seq, const NuclearSpinParams& spin,
                          const FieldParams& field);

struct RevivalPoint {
  double delay = 0.0;      // T, s
  double coherence = 0.0;  // Bloch-vector length
};

// Coherence after n attempts versus the post-repump delay T.
std::vector<RevivalPoint> revival_curve(const NuclearSpinParams& spin, const FieldParams& field,
                                        const AttemptSequence& seq,
                                        const std::vector<double>& delays, int n, double p_init,
                                        double amplitude = 1.0);

}  // namespace nvmem
