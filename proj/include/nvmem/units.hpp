#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace nvmem {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace units {

inline constexpr double ns = 1e-9;
inline constexpr double us = 1e-6;
inline constexpr double ms = 1e-3;
inline constexpr double Hz = 1.0;
inline constexpr double kHz = 1e3;
inline constexpr double MHz = 1e6;
inline constexpr double nW = 1e-9;
inline constexpr double uW = 1e-6;

// Angular frequency (rad/s) of a cyclic frequency given in Hz.
constexpr double angular(double hz) { return kTwoPi * hz; }
constexpr double cyclic(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace units

// Physical dimensions accepted by the quantity parser.
enum class Dimension { time, angular_frequency, frequency, magnetic_field, power, angle };

// Parses "52 ns", "376.5 kHz", "414 G", "366nW", "pi/2". Values are returned
// in SI (s, rad/s, Hz, gauss, W, rad). Angular-frequency quantities given in
// cyclic units (Hz, kHz, MHz) are multiplied by 2*pi; "rad/s" style units are
// taken as-is. Throws Error(schema_violation) naming `path` on failure.
double parse_quantity(std::string_view text, Dimension dim, std::string_view path = {});

// Canonical textual form used when the effective configuration is written
// back out; parse_quantity(format_quantity(v, d), d) == v exactly.
std::string format_quantity(double si_value, Dimension dim);

// Shortest round-trippable decimal rendering of a double.
std::string format_double(double v);

}  // namespace nvmem
