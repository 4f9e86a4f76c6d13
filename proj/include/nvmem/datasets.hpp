#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nvmem/physics.hpp"

namespace nvmem {

// Addressable memory spin: coupling strength and free-induction decay.
struct SpinRecord {
  std::string label;
  double delta_omega_hz = 0.0;  // delta omega / 2 pi
  double t2_star = 0.0;         // s
  double t2_star_err = 0.0;     // s
};

// Singlet pump-probe result for one strain setting.
struct OpticalRow {
  double delta_perp_ghz = 0.0;
  double lifetime = 0.0;      // s
  double lifetime_err = 0.0;  // s
  double p_s = 0.0;
  double p_s_err = 0.0;
  double ratio_zero = 0.0;    // |0> weight relative to |+1> = |-1> = 1
  double ratio_zero_err = 0.0;
};

// Published number used as a reference by the test suite.
struct ReferenceValue {
  std::string key;
  double value = 0.0;
  double uncertainty = 0.0;  // 0 when none is quoted
  std::string unit;          // "", "ns", "nW", "uW", ...
};

const std::vector<SpinRecord>& builtin_spins();
const std::vector<OpticalRow>& builtin_optical_rows();
const std::vector<ReferenceValue>& builtin_references();

const SpinRecord& spin_record(std::string_view label);
NuclearSpinParams spin_params(std::string_view label);
const ReferenceValue& reference(std::string_view key);

// Directory holding the shipped data/ and configs/ trees.
std::string data_root();

// Readers for the shipped YAML copies (data/spins.yaml, data/singlet.yaml,
// data/references.yaml).
std::vector<SpinRecord> load_spins(const std::string& path);
std::vector<OpticalRow> load_optical_rows(const std::string& path);
std::vector<ReferenceValue> load_references(const std::string& path);

}  // namespace nvmem
