#pragma once

#include <numbers>

namespace qfc::units {

inline constexpr double c = 299'792'458.0; // m/s, exact
inline constexpr double pi = std::numbers::pi;

inline constexpr double angular_from_wavelength(double wavelength_m) { return 2.0 * pi * c / wavelength_m; }
inline constexpr double wavelength_from_angular(double omega) { return 2.0 * pi * c / omega; }
inline constexpr double thz_from_angular(double omega) { return omega / (2.0 * pi * 1e12); }
inline constexpr double angular_from_thz(double f_thz) { return 2.0 * pi * 1e12 * f_thz; }

inline constexpr double nm = 1e-9;
inline constexpr double mw = 1e-3;
inline constexpr double ps = 1e-12;

} // namespace qfc::units
