#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvmem/analytic.hpp"
#include "nvmem/montecarlo.hpp"
#include "nvmem/optical.hpp"

namespace nvmem {

inline constexpr const char* kSchemaId = "nvsim/1";

enum class Command { simulate, sweep, predict, pumpprobe };

const char* to_string(Command c);

// One named run after the scenario overlay has been applied.
struct Scenario {
  std::string name;
  RunSpec run;
};

enum class PredictModel { blok, revival };

// Analytic predictions, evaluated for every scenario: the repump-limited
// decay for its tau and coupling, or the revival scan over T.
struct PredictConfig {
  PredictModel model = PredictModel::blok;
  double p1 = 0.5;             // blok
  std::vector<double> delays;  // revival: post-repump delays T
  int n = 700;                 // revival: attempts
  double p_init = 7.1e-4;      // revival
  double amplitude = 1.0;      // revival
};

struct PumpProbeConfig {
  OpticalLevelModel model = OpticalLevelModel::reference();
  double pulse_fwhm = 2.6e-9;
  std::vector<double> delays;
  // The rise fit uses delays >= fit_from, past the |E'> decay.
  double fit_from = 50e-9;
  PumpProbeOptions options;
};

struct SweepConfig {
  std::vector<SweepDimension> dims;
  SweepOptions options;
  bool fit_saturation = false;  // fit N_sat P / (P + P_sat) along repump_power
};

struct ScenarioConfig {
  std::string schema = kSchemaId;
  Command command = Command::simulate;
  std::string name = "run";       // artifact prefix
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::vector<Scenario> scenarios;  // simulate / sweep
  std::optional<SweepConfig> sweep;
  std::optional<PredictConfig> predict;
  std::optional<PumpProbeConfig> pumpprobe;
  FitOptions fit;

  // Applies --seed: every scenario and the pump-probe run share it.
  void set_seed(std::uint64_t s);
  void set_trials(long trials);
  void set_budget(double budget);
};

// Parses and validates a configuration document. Throws
// Error(schema_violation) naming the offending field path.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

// Fully expanded configuration (every scenario written out in SI-unit
// strings); parse_config(emit_config(c)) behaves identically to c.
std::string emit_config(const ScenarioConfig& c);

// FNV-1a hash of the effective configuration, excluding out_dir.
std::string config_digest(const ScenarioConfig& c);

}  // namespace nvmem
