#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "spinpump/system.hpp"

namespace spinpump {

/// Uniform grid of laser detunings, quoted as detuning/2pi in GHz.
struct ScanGrid {
  double start_ghz = -3.0;
  double stop_ghz = 3.0;
  int count = 601;

  std::vector<double> points() const;
  void validate() const;  // count >= 3 and stop > start
};

/// Detection intensity (upper-trion occupation of the steady state) sampled
/// over laser detuning.
struct ResonanceProfile {
  std::vector<double> detunings_ghz;
  std::vector<double> intensities;
  SystemParams params;  ///< snapshot; laser_detuning varies along the grid
};

enum class Normalization { kRaw, kRowNormalized };

/// Intensity matrix over (hole g factor) x (laser detuning).
struct SweepResult2D {
  std::vector<double> g_h;
  std::vector<double> detunings_ghz;
  Eigen::MatrixXd intensity;  // one row per g_h value
  Normalization normalization = Normalization::kRaw;
};

/// Power sweep record: resonance width and peak height per drive strength.
/// The power axis is emitted both as rabi/2pi and as its square (power is
/// proportional to the squared drive amplitude, in relative units).
struct PowerSweepResult {
  std::vector<double> omega_ghz;
  std::vector<double> power;  // omega_ghz^2
  std::vector<double> fwhm_ghz;
  std::vector<double> fwhm_uev;
  std::vector<double> peak;
};

struct Fwhm {
  double ghz = 0.0;
  double uev = 0.0;
};

struct UnimodalCheck {
  bool unimodal = false;
  int peak_index = -1;
  bool peak_at_boundary = false;
};

/// Steady-state intensity at every grid detuning, in grid order.
/// Requires rabi > 0; propagates DegenerateSteadyState otherwise.
ResonanceProfile scan_detuning(const SystemParams& p, const ScanGrid& grid);

/// One detuning scan per g_h value; the excited splitting is fixed from
/// (g_e, B) and the ground splitting recomputed per row.
SweepResult2D sweep_g_factor(const SystemParams& base, double g_e,
                             std::span<const double> g_h_grid, double b_tesla,
                             const ScanGrid& grid);

/// Each row divided by its maximum. Throws ZeroRow on an all-zero row.
SweepResult2D normalize_rows(const SweepResult2D& s);

/// Width and peak per drive strength, scanning each on an auto-widened grid
/// (span at least 6x the running width estimate). Throws GridTooNarrow when
/// the profile never falls below half maximum within the widening cap.
PowerSweepResult sweep_power(const SystemParams& base,
                             std::span<const double> omega_ghz);

/// Full width at half maximum by linear interpolation of the two half-max
/// crossings around the peak. Throws NotUnimodal / HalfMaxNotBracketed.
Fwhm extract_fwhm(const ResonanceProfile& prof);

/// Single rise to one plateau then fall, with tolerance 1e-12 * max to
/// absorb solver noise. Also reports a peak that sits on the grid boundary.
UnimodalCheck check_unimodal(std::span<const double> values);
bool is_unimodal(const ResonanceProfile& prof);

}  // namespace spinpump
