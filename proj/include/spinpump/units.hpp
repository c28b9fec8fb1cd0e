#pragma once

#include <numbers>

// Unit conventions used throughout:
//   angular frequencies  rad/ns   (so f/2pi quoted in GHz stores as 2*pi*f)
//   energies             micro-eV
//   times                ns
//   magnetic fields      tesla
namespace spinpump::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bohr magneton, micro-eV per tesla.
inline constexpr double kBohrMagnetonUevPerT = 57.8838;

// Planck constant, micro-eV * ns (1 GHz <-> 4.135668 micro-eV).
inline constexpr double kPlanckUevNs = 4.135667696;

// h*c, micro-eV * nm.
inline constexpr double kHcUevNm = 1239841.98;

inline double ghz_to_angular(double f_ghz) { return kTwoPi * f_ghz; }
inline double angular_to_ghz(double w_rad_ns) { return w_rad_ns / kTwoPi; }

inline double ghz_to_uev(double f_ghz) { return f_ghz * kPlanckUevNs; }
inline double uev_to_ghz(double e_uev) { return e_uev / kPlanckUevNs; }

inline double uev_to_angular(double e_uev) {
  return ghz_to_angular(uev_to_ghz(e_uev));
}
inline double angular_to_uev(double w_rad_ns) {
  return ghz_to_uev(angular_to_ghz(w_rad_ns));
}

inline double nm_to_uev(double lambda_nm) { return kHcUevNm / lambda_nm; }
inline double uev_to_nm(double e_uev) { return kHcUevNm / e_uev; }

// Zeeman splitting mu_B * g * B in micro-eV.
inline double zeeman_splitting_uev(double g, double b_tesla) {
  return kBohrMagnetonUevPerT * g * b_tesla;
}

}  // namespace spinpump::units
