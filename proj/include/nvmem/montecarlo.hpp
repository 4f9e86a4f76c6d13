#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nvmem/attempt.hpp"
#include "nvmem/curve.hpp"
#include "nvmem/fitting.hpp"
#include "nvmem/physics.hpp"

namespace nvmem {

enum class NuclearInit { superposition, eigenstate };

// Default cap on n_trials * max(N).
inline constexpr double kDefaultAttemptBudget = 2e10;

struct RunSpec {
  NuclearSpinParams spin;
  FieldParams field;
  AttemptSequence seq;
  NoiseModel noise;
  std::vector<long> n_attempts_grid;
  long n_trials = 1000;
  int echo_count = 0;  // nuclear pi flips: 0, 1 or 2
  std::uint64_t master_seed = 1;
  NuclearInit initial = NuclearInit::superposition;
  // Multiply by exp[-(N t_attempt / T2)^2] with T2,Hahn (echoed) or T2* (no echo).
  bool intrinsic_envelope = true;
  double budget = kDefaultAttemptBudget;

  void validate() const;
  // Canonical JSON text of every field; the digest hashes this.
  std::string canonical() const;
  std::string digest() const;
};

struct EngineOptions {
  int threads = 1;
};

// Attempt counts after which the nuclear pi flips happen for a run of n
// attempts: ceil(n/2) for one echo, ceil(n/4) and ceil(3n/4) for two.
std::vector<long> echo_positions(long n, int echo_count);

CoherenceCurve simulate_curve(const RunSpec& spec, const EngineOptions& engine = {});

// Repump power to mean reset time.
enum class PowerMapping {
  rate,             // tau = tau_min (P + P_sat) / P
  saturating_decay, // tau = tau_min sqrt((P + P_sat) / P), so N_1e ~ P / (P + P_sat)
};

double power_to_tau(double power, double tau_min, double p_sat,
                    PowerMapping mapping = PowerMapping::rate);

enum class SweepAxis { repump_power, p_mw, p_init, b_field, tau, delta_omega, alpha };

const char* to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepDimension {
  SweepAxis axis = SweepAxis::p_mw;
  std::vector<double> values;  // SI units
};

struct SweepOptions {
  // Choose each point's N grid from a pilot run so it spans ~grid_span decay constants.
  bool auto_grid = true;
  long pilot_trials = 200;
  long max_attempts = 60000;
  int grid_points = 16;
  double grid_span = 3.0;
  double tau_min = 0.0;  // repump_power axis
  double p_sat = 0.0;
  PowerMapping power_mapping = PowerMapping::rate;
  FitOptions fit;
  EngineOptions engine;
};

struct SweepPoint {
  std::vector<double> values;  // one per dimension
  FitResult fit;
  CoherenceCurve curve;
};

// Applies one axis value to a copy of the template.
RunSpec apply_axis(const RunSpec& tmpl, SweepAxis axis, double value, const SweepOptions& opt);

// Grid spanning `span` decay constants estimated from a pilot curve.
std::vector<long> grid_from_pilot(const CoherenceCurve& pilot, long max_attempts, int points,
                                  double span);

// Cartesian product over the dimensions (first dimension varies slowest).
std::vector<SweepPoint> sweep(const RunSpec& tmpl, const std::vector<SweepDimension>& dims,
                              const SweepOptions& opt = {});

}  // namespace nvmem
