#include "nvmem/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nvmem/error.hpp"

namespace nvmem {
namespace {

struct UnitEntry {
  std::string_view symbol;
  double factor;
};

const std::vector<UnitEntry>& units_for(Dimension dim) {
  static const std::vector<UnitEntry> time{
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static const std::vector<UnitEntry> angular{
      {"rad/s", 1.0},         {"krad/s", 1e3},         {"Mrad/s", 1e6},
      {"Hz", kTwoPi},         {"kHz", kTwoPi * 1e3},   {"MHz", kTwoPi * 1e6},
      {"GHz", kTwoPi * 1e9}};
  static const std::vector<UnitEntry> frequency{
      {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
  static const std::vector<UnitEntry> field{{"G", 1.0}, {"kG", 1e3}, {"mT", 10.0}, {"T", 1e4}};
  static const std::vector<UnitEntry> power{
      {"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"µW", 1e-6}, {"nW", 1e-9}, {"pW", 1e-12}};
  static const std::vector<UnitEntry> angle{{"rad", 1.0}, {"deg", kPi / 180.0}, {"pi", kPi}};
  switch (dim) {
    case Dimension::time: return time;
    case Dimension::angular_frequency: return angular;
    case Dimension::frequency: return frequency;
    case Dimension::magnetic_field: return field;
    case Dimension::power: return power;
    case Dimension::angle: return angle;
  }
  return time;
}

const char* dimension_name(Dimension dim) {
  switch (dim) {
    case Dimension::time: return "time";
    case Dimension::angular_frequency: return "angular frequency";
    case Dimension::frequency: return "frequency";
    case Dimension::magnetic_field: return "magnetic field";
    case Dimension::power: return "power";
    case Dimension::angle: return "angle";
  }
  return "?";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view text, Dimension dim, std::string_view path,
                      std::string_view why) {
  std::string msg = "invalid ";
  msg += dimension_name(dim);
  msg += " '";
  msg += text;
  msg += "'";
  if (!path.empty()) {
    msg += " at ";
    msg += path;
  }
  msg += ": ";
  msg += why;
  fail(ErrorCode::schema_violation, msg);
}

// Angles also accept "pi/2", "2pi", "pi/4".
std::optional<double> parse_pi_expression(std::string_view s) {
  auto pos = s.find("pi");
  if (pos == std::string_view::npos) return std::nullopt;
  double coeff = 1.0;
  auto head = trim(s.substr(0, pos));
  if (!head.empty()) {
    if (head.back() == '*') head.remove_suffix(1);
    head = trim(head);
    auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), coeff);
    if (ec != std::errc{} || p != head.data() + head.size()) return std::nullopt;
  }
  double div = 1.0;
  auto tail = trim(s.substr(pos + 2));
  if (!tail.empty()) {
    if (tail.front() != '/') return std::nullopt;
    tail = trim(tail.substr(1));
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), div);
    if (ec != std::errc{} || p != tail.data() + tail.size() || div == 0.0) return std::nullopt;
  }
  return coeff * kPi / div;
}

}  // namespace

double parse_quantity(std::string_view text, Dimension dim, std::string_view path) {
  auto s = trim(text);
  if (s.empty()) bad(text, dim, path, "empty value");
  if (dim == Dimension::angle) {
    if (auto v = parse_pi_expression(s)) return *v;
  }
  double value = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{}) bad(text, dim, path, "expected a number followed by a unit");
  auto unit = trim(std::string_view(p, static_cast<size_t>(s.data() + s.size() - p)));
  if (unit.empty()) {
    if (dim == Dimension::angle) return value;
    bad(text, dim, path, "missing unit suffix");
  }
  for (const auto& u : units_for(dim)) {
    if (u.symbol == unit) {
      const double out = value * u.factor;
      if (!std::isfinite(out)) bad(text, dim, path, "not finite");
      return out;
    }
  }
  bad(text, dim, path, "unknown unit '" + std::string(unit) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::string format_quantity(double si_value, Dimension dim) {
  switch (dim) {
    case Dimension::time: return format_double(si_value) + " s";
    case Dimension::angular_frequency: return format_double(si_value) + " rad/s";
    case Dimension::frequency: return format_double(si_value) + " Hz";
    case Dimension::magnetic_field: return format_double(si_value) + " G";
    case Dimension::power: return format_double(si_value) + " W";
    case Dimension::angle: return format_double(si_value) + " rad";
  }
  return format_double(si_value);
}

}  // namespace nvmem
