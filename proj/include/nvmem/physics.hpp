#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nvmem/units.hpp"

namespace nvmem {

// Carbon-13 gyromagnetic ratio in Hz/G.
inline constexpr double kGammaC13 = 1070.84;
// Larmor frequency the reference node operates at (414 G), stored as
// omega_0 / 2pi = 443.275 kHz.
inline constexpr double kReferenceLarmorHz = 443.275e3;
inline constexpr double kReferenceFieldGauss = 414.0;
// Gaussian nuclear decay from the fluctuating spin bath under echo.
inline constexpr double kDefaultT2Hahn = 60e-3;

enum class ElectronState { ms0, msMinus1, msPlus1, excitedEPrime, excitedEx, singlet };

const char* to_string(ElectronState s);
bool is_ground_triplet(ElectronState s);

struct FieldParams {
  double larmor = units::angular(kReferenceLarmorHz);  // omega_0, rad/s
  std::optional<double> field_gauss;                  // set when built from B

  static FieldParams from_larmor(double omega0);
  // omega_0 = 2 pi gamma B
  static FieldParams from_field(double gauss, double gamma_hz_per_gauss = kGammaC13);
  static FieldParams reference() { return from_larmor(units::angular(kReferenceLarmorHz)); }

  // Nuclear Larmor period 2 pi / omega_0.
  double larmor_period() const { return kTwoPi / larmor; }
};

struct Hyperfine {
  double a_par = 0.0;   // rad/s, signed
  double a_perp = 0.0;  // rad/s, >= 0
};

// A single memory spin. Either carries the hyperfine pair or only the
// published coupling strength delta_omega.
class NuclearSpinParams {
 public:
  // Zero-coupling spin (direct delta omega = 0).
  NuclearSpinParams() = default;

  static NuclearSpinParams from_hyperfine(std::string label, Hyperfine hf, double t2_star,
                                          double t2_hahn = kDefaultT2Hahn);
  // `approximate` selects omega_{-1} = omega_0 + dw, omega_{+1} = omega_0 - dw.
  static NuclearSpinParams from_delta_omega(std::string label, double delta_omega, double t2_star,
                                            double t2_hahn = kDefaultT2Hahn,
                                            bool approximate = true);

  const std::string& label() const { return label_; }
  const std::optional<Hyperfine>& hyperfine() const { return hyperfine_; }
  std::optional<double> direct_delta_omega() const { return direct_dw_; }
  bool delta_omega_approximation() const { return approximate_; }
  double t2_star() const { return t2_star_; }
  double t2_hahn() const { return t2_hahn_; }

 private:
  std::string label_;
  std::optional<Hyperfine> hyperfine_;
  std::optional<double> direct_dw_ = 0.0;
  bool approximate_ = true;
  double t2_star_ = 1.0;
  double t2_hahn_ = kDefaultT2Hahn;
};

struct Segment {
  ElectronState state = ElectronState::ms0;
  double duration = 0.0;
};

// Piecewise-constant electron timeline plus the times of nuclear pi flips.
struct ElectronTrajectory {
  std::vector<Segment> segments;
  std::vector<double> echo_marks;

  double total_duration() const;
  void append(ElectronState s, double duration);
  // Throws on negative durations or unordered / out-of-range echo marks.
  void validate() const;
};

double precession_frequency(ElectronState state, const NuclearSpinParams& spin,
                            const FieldParams& field);

double delta_omega(const NuclearSpinParams& spin, const FieldParams& field);

// Per-state precession offset omega(state) - omega_0 for the ground triplet,
// indexed by ElectronState. Optical states hold NaN.
std::array<double, 6> frame_offsets(const NuclearSpinParams& spin, const FieldParams& field);

// Nuclear phase in the frame rotating at omega_0; each echo mark flips the
// sign of all subsequent accumulation.
double accumulate_phase(const ElectronTrajectory& traj, const NuclearSpinParams& spin,
                        const FieldParams& field);

double phase_match_delay(const NuclearSpinParams& spin, const FieldParams& field, int k = 1);

}  // namespace nvmem
