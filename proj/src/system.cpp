#include "spinpump/system.hpp"

#include <stdexcept>

#include "spinpump/units.hpp"

namespace spinpump {

SystemParams SystemParams::from_ghz(double delta_e_ghz, double delta_h_ghz,
                                    double detuning_ghz, double rabi_ghz,
                                    double gamma_ghz,
                                    std::optional<double> t1_spin_ns) {
  SystemParams p;
  p.delta_e = units::ghz_to_angular(delta_e_ghz);
  p.delta_h = units::ghz_to_angular(delta_h_ghz);
  p.laser_detuning = units::ghz_to_angular(detuning_ghz);
  p.rabi = units::ghz_to_angular(rabi_ghz);
  p.gamma = units::ghz_to_angular(gamma_ghz);
  p.t1_spin = t1_spin_ns;
  return p;
}

SystemParams SystemParams::with_detuning_ghz(double detuning_ghz) const {
  SystemParams p = *this;
  p.laser_detuning = units::ghz_to_angular(detuning_ghz);
  return p;
}

SystemParams SystemParams::with_rabi_ghz(double rabi_ghz) const {
  SystemParams p = *this;
  p.rabi = units::ghz_to_angular(rabi_ghz);
  return p;
}

void SystemParams::validate() const {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("SystemParams: gamma must be > 0");
  }
  if (!(rabi >= 0.0)) {
    throw std::invalid_argument("SystemParams: rabi must be >= 0");
  }
  if (!(delta_e >= 0.0) || !(delta_h >= 0.0)) {
    throw std::invalid_argument("SystemParams: splittings must be >= 0");
  }
  if (t1_spin && !(*t1_spin > 0.0)) {
    throw std::invalid_argument("SystemParams: t1_spin must be > 0");
  }
}

}  // namespace spinpump
