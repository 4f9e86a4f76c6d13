#include "nvmem/datasets.hpp"

#include <yaml-cpp/yaml.h>

#include "nvmem/error.hpp"

namespace nvmem {

namespace {

using units::kHz;
using units::ms;
using units::ns;

double unit_scale(const std::string& unit) {
  if (unit.empty()) return 1.0;
  if (unit == "ns") return 1e-9;
  if (unit == "nW") return 1e-9;
  if (unit == "uW") return 1e-6;
  if (unit == "MHz") return 1e6;
  fail(ErrorCode::schema_violation, "unknown reference unit '" + unit + "'");
}

YAML::Node load_file(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::io, "cannot read " + path + ": " + e.what());
  }
}

std::string field(const YAML::Node& n, const char* key, const std::string& where) {
  if (!n[key]) fail(ErrorCode::schema_violation, where + "." + key + ": missing");
  return n[key].as<std::string>();
}

double number(const YAML::Node& n, const char* key, const std::string& where) {
  if (!n[key]) fail(ErrorCode::schema_violation, where + "." + key + ": missing");
  try {
    return n[key].as<double>();
  } catch (const YAML::Exception&) {
    fail(ErrorCode::schema_violation, where + "." + key + ": expected a number");
  }
}

}  // namespace

const std::vector<SpinRecord>& builtin_spins() {
  static const std::vector<SpinRecord> spins = {
      {"C1", 376.5 * kHz, 9.9 * ms, 0.2 * ms},  {"C2", 62.4 * kHz, 9.9 * ms, 0.1 * ms},
      {"C3", 77.0 * kHz, 9.5 * ms, 0.2 * ms},   {"C4", 32.4 * kHz, 11.2 * ms, 0.3 * ms},
      {"C5", 26.6 * kHz, 17.3 * ms, 0.6 * ms},  {"C6", 20.9 * kHz, 4.5 * ms, 0.1 * ms},
      {"C7", 12.2 * kHz, 7.0 * ms, 0.1 * ms},
  };
  return spins;
}

const std::vector<OpticalRow>& builtin_optical_rows() {
  static const std::vector<OpticalRow> rows = {
      {0.9, 379 * ns, 17 * ns, 0.41, 0.01, 11, 2}, {1.3, 340 * ns, 18 * ns, 0.39, 0.01, 13, 3},
      {1.7, 403 * ns, 26 * ns, 0.39, 0.02, 5, 1},  {2.7, 343 * ns, 32 * ns, 0.43, 0.02, 5, 1},
      {4.6, 372 * ns, 37 * ns, 0.42, 0.02, 6, 1},
  };
  return rows;
}

const std::vector<ReferenceValue>& builtin_references() {
  static const std::vector<ReferenceValue> refs = {
      {"c1_standard_n1e", 106, 9, ""},
      {"c1_echo_n1e", 263, 16, ""},
      {"c1_optimized_n1e", 265, 28, ""},
      {"c1_optimized_m", 1.0, 0.2, ""},
      {"c1_tau", 52 * ns, 0, "ns"},
      {"c2_best_n1e", 837, 18, ""},
      {"c3_best_n1e", 640, 18, ""},
      {"c2_tau", 177 * ns, 0, "ns"},
      {"c3_tau", 163 * ns, 0, "ns"},
      {"c2_nsat_half_pi", 1511, 38, ""},
      {"c3_nsat_half_pi", 1097, 40, ""},
      {"psat_half_pi", 366e-9, 68e-9, "nW"},
      {"c2_nsat_pi", 2045, 136, ""},
      {"c3_nsat_pi", 2207, 278, ""},
      {"psat_pi", 2.4e-6, 0.8e-6, "uW"},
      {"c2_m_optimized", 1.89, 0.14, ""},
      {"c3_m_optimized", 1.49, 0.03, ""},
      {"eigenstate_n1e_min", 3500, 0, ""},
      {"p_init", 7.1e-4, 0, ""},
      {"singlet_lifetime", 368 * ns, 12 * ns, "ns"},
      {"branching_zero", 8, 1, ""},
      {"isc_es", 8.2e6, 0.2e6, "MHz"},
      {"fig5b_optimum_n1e", 15000, 0, ""},
      {"fig5b_tau", 100 * ns, 0, "ns"},
  };
  return refs;
}

const SpinRecord& spin_record(std::string_view label) {
  for (const auto& s : builtin_spins()) {
    if (s.label == label) return s;
  }
  fail(ErrorCode::invalid_argument, "unknown spin '" + std::string(label) + "'");
}

NuclearSpinParams spin_params(std::string_view label) {
  const auto& s = spin_record(label);
  return NuclearSpinParams::from_delta_omega(s.label, units::angular(s.delta_omega_hz), s.t2_star);
}

const ReferenceValue& reference(std::string_view key) {
  for (const auto& r : builtin_references()) {
    if (r.key == key) return r;
  }
  fail(ErrorCode::invalid_argument, "unknown reference '" + std::string(key) + "'");
}

std::string data_root() {
  if (const char* env = std::getenv("NVSIM_DATA_DIR")) return env;
  return NVSIM_DATA_DIR;
}

std::vector<SpinRecord> load_spins(const std::string& path) {
  const auto doc = load_file(path);
  std::vector<SpinRecord> out;
  size_t i = 0;
  for (const auto& n : doc["spins"]) {
    const std::string where = "spins[" + std::to_string(i++) + "]";
    SpinRecord r;
    r.label = field(n, "label", where);
    r.delta_omega_hz =
        parse_quantity(field(n, "delta_omega", where), Dimension::frequency, where + ".delta_omega");
    r.t2_star = parse_quantity(field(n, "t2_star", where), Dimension::time, where + ".t2_star");
    r.t2_star_err =
        parse_quantity(field(n, "t2_star_err", where), Dimension::time, where + ".t2_star_err");
    out.push_back(r);
  }
  return out;
}

std::vector<OpticalRow> load_optical_rows(const std::string& path) {
  const auto doc = load_file(path);
  std::vector<OpticalRow> out;
  size_t i = 0;
  for (const auto& n : doc["rows"]) {
    const std::string where = "rows[" + std::to_string(i++) + "]";
    OpticalRow r;
    r.delta_perp_ghz =
        parse_quantity(field(n, "delta_perp", where), Dimension::frequency, where + ".delta_perp") /
        1e9;
    r.lifetime = parse_quantity(field(n, "lifetime", where), Dimension::time, where + ".lifetime");
    r.lifetime_err =
        parse_quantity(field(n, "lifetime_err", where), Dimension::time, where + ".lifetime_err");
    r.p_s = number(n, "p_s", where);
    r.p_s_err = number(n, "p_s_err", where);
    r.ratio_zero = number(n, "ratio", where);
    r.ratio_zero_err = number(n, "ratio_err", where);
    out.push_back(r);
  }
  return out;
}

std::vector<ReferenceValue> load_references(const std::string& path) {
  const auto doc = load_file(path);
  std::vector<ReferenceValue> out;
  size_t i = 0;
  for (const auto& n : doc["references"]) {
    const std::string where = "references[" + std::to_string(i++) + "]";
    ReferenceValue r;
    r.key = field(n, "key", where);
    r.unit = n["unit"] ? n["unit"].as<std::string>() : std::string();
    const double scale = unit_scale(r.unit);
    r.value = number(n, "value", where) * scale;
    r.uncertainty = n["uncertainty"] ? number(n, "uncertainty", where) * scale : 0.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace nvmem
