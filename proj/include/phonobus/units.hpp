#pragma once

#include <numbers>

// Internal unit system: time in microseconds, every rate and frequency as an
// angular frequency in rad/us. Ordinary frequencies enter through these helpers.
namespace phonobus::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr double hz(double f) { return kTwoPi * f * 1e-6; }
constexpr double khz(double f) { return kTwoPi * f * 1e-3; }
constexpr double mhz(double f) { return kTwoPi * f; }
constexpr double ghz(double f) { return kTwoPi * f * 1e3; }

constexpr double to_hz(double w) { return w / kTwoPi * 1e6; }
constexpr double to_khz(double w) { return w / kTwoPi * 1e3; }
constexpr double to_mhz(double w) { return w / kTwoPi; }
constexpr double to_ghz(double w) { return w / kTwoPi * 1e-3; }

}  // namespace phonobus::units
