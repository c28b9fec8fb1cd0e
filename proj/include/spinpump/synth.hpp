#pragma once

#include <cstdint>

#include "spinpump/fit.hpp"

namespace spinpump {

/// Ground-truth description of a synthetic quadruplet spectrum. At zero
/// field the quadruplet collapses to one line per polarization, split by
/// the fine-structure value; at finite field the four transitions sit at
/// e0 + kappa B^2 +/- (delta_e +/- delta_h)/2 with the outer pair
/// horizontally and the inner pair vertically polarized.
struct SynthTruth {
  double e0_uev = 1393080.0;  ///< zero-field line center (~890 nm)
  double kappa_uev_t2 = 0.0;  ///< diamagnetic coefficient
  double g_e = 0.34;
  double g_h = 0.34;
  double b_tesla = 0.0;
  double fwhm_uev = 22.0;
  double amp_outer = 1000.0;  ///< per outer line, counts
  double amp_inner = 1000.0;  ///< per inner line, counts
  double fss_uev = 0.0;       ///< zero-field splitting between H and V
  double background = 0.0;    ///< constant counts offset

  // Abscissa grid; span <= 0 picks one wide enough for the quadruplet.
  double span_uev = 0.0;
  int n_points = 1201;
};

enum class NoiseModel { kNone, kPoisson };

/// Deterministic for a fixed seed; the seed is unused with NoiseModel::kNone.
SpectrumData synthesize_spectrum(const SynthTruth& truth, Polarization pol,
                                 NoiseModel noise, std::uint64_t seed);

}  // namespace spinpump
