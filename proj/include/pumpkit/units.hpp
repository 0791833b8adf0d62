#pragma once

#include <cmath>

// Physical constants and unit conversions. Band-structure energies are kept in
// recoil units E_rec = h^2 / (2 m lambda^2); the CLI boundary speaks Hz and
// seconds, so the only conversion ever needed is E_rec -> h*f.
namespace pumpkit::units {

inline constexpr double planck_h = 6.62607015e-34;       // J s (exact, SI 2019)
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double mass_k40 = 39.963998166 * atomic_mass_unit;  // kg

inline constexpr double default_lambda_m = 1064e-9;

// Recoil energy expressed as a frequency E_rec/h in Hz.
inline double recoil_frequency_hz(double lambda_m = default_lambda_m,
                                  double mass_kg = mass_k40) {
  return planck_h / (2.0 * mass_kg * lambda_m * lambda_m);
}

}  // namespace pumpkit::units
