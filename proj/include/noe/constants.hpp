#pragma once

#include <numbers>

namespace noe {

// Boltzmann constant, wavenumber units.
inline constexpr double kB_cm1_per_K = 0.695034800;

// Speed of light in cm/fs.
inline constexpr double c_cm_per_fs = 2.99792458e-5;

// Converts an energy in cm^-1 to an angular rate in rad/fs.
inline constexpr double rad_per_fs_per_cm1 = 2.0 * std::numbers::pi * c_cm_per_fs;

inline double beta_from_kelvin(double T) { return 1.0 / (kB_cm1_per_K * T); }
inline double kelvin_from_beta(double beta) { return 1.0 / (kB_cm1_per_K * beta); }

}  // namespace noe
