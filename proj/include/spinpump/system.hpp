#pragma once

#include <optional>

namespace spinpump {

/// Physical parameters of the laser-driven four-level system: two ground
/// spin states split by delta_h, two trion states split by delta_e, a single
/// drive of strength rabi detuned by laser_detuning from the zero-field
/// transition, and one radiative decay rate per emission channel.
///
/// All angular frequencies are stored in rad/ns; interfaces that quote
/// "/2pi in GHz" go through from_ghz().
struct SystemParams {
  double delta_e = 0.0;         ///< excited-state splitting, rad/ns
  double delta_h = 0.0;         ///< ground-state splitting, rad/ns
  double laser_detuning = 0.0;  ///< laser minus zero-field transition, rad/ns
  double rabi = 0.0;            ///< drive strength, rad/ns
  double gamma = 0.0;           ///< per-channel radiative decay rate, rad/ns
  std::optional<double> t1_spin;  ///< ground spin lifetime, ns; absent = infinite

  static SystemParams from_ghz(double delta_e_ghz, double delta_h_ghz,
                               double detuning_ghz, double rabi_ghz,
                               double gamma_ghz,
                               std::optional<double> t1_spin_ns = {});

  SystemParams with_detuning_ghz(double detuning_ghz) const;
  SystemParams with_rabi_ghz(double rabi_ghz) const;

  /// Throws std::invalid_argument unless gamma > 0, rabi >= 0,
  /// delta_e >= 0, delta_h >= 0 and t1_spin > 0 when present.
  void validate() const;
};

}  // namespace spinpump
