#pragma once

#include <numbers>

// Unit conventions: everything inside the library is SI with angular
// frequencies (rad/s).  Ordinary frequencies (Hz family), convenience
// lengths (um, nm) and times (us, ms) appear only at ingestion and
// emission boundaries; these helpers do the conversion there.

namespace mwaddr::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double hz_to_angular(double f) { return two_pi * f; }
constexpr double khz_to_angular(double f) { return two_pi * 1e3 * f; }
constexpr double mhz_to_angular(double f) { return two_pi * 1e6 * f; }
constexpr double ghz_to_angular(double f) { return two_pi * 1e9 * f; }

constexpr double angular_to_hz(double w) { return w / two_pi; }
constexpr double angular_to_khz(double w) { return w / (two_pi * 1e3); }
constexpr double angular_to_mhz(double w) { return w / (two_pi * 1e6); }
constexpr double angular_to_ghz(double w) { return w / (two_pi * 1e9); }

constexpr double mt_to_tesla(double b) { return 1e-3 * b; }
constexpr double ut_to_tesla(double b) { return 1e-6 * b; }
constexpr double tesla_to_ut(double b) { return 1e6 * b; }
constexpr double tesla_to_mt(double b) { return 1e3 * b; }

constexpr double um_to_m(double x) { return 1e-6 * x; }
constexpr double nm_to_m(double x) { return 1e-9 * x; }
constexpr double m_to_um(double x) { return 1e6 * x; }
constexpr double m_to_nm(double x) { return 1e9 * x; }

constexpr double us_to_s(double t) { return 1e-6 * t; }
constexpr double ms_to_s(double t) { return 1e-3 * t; }
constexpr double s_to_us(double t) { return 1e6 * t; }

constexpr double deg_to_rad(double a) { return a * pi / 180.0; }
constexpr double rad_to_deg(double a) { return a * 180.0 / pi; }

} // namespace mwaddr::units
