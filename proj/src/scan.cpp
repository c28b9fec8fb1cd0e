#include "spinpump/scan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinpump/errors.hpp"
#include "spinpump/quantum.hpp"
#include "spinpump/units.hpp"

namespace spinpump {

std::vector<double> ScanGrid::points() const {
  validate();
  std::vector<double> x(count);
  const double h = (stop_ghz - start_ghz) / (count - 1);
  for (int i = 0; i < count; ++i) x[i] = start_ghz + i * h;
  return x;
}

void ScanGrid::validate() const {
  if (count < 3) throw std::invalid_argument("ScanGrid: count must be >= 3");
  if (!(stop_ghz > start_ghz)) {
    throw std::invalid_argument("ScanGrid: stop must exceed start");
  }
}

ResonanceProfile scan_detuning(const SystemParams& p, const ScanGrid& grid) {
  p.validate();
  // rabi == 0 is not rejected here: the solver raises DegenerateSteadyState
  // at the first grid point unless a spin-flip channel lifts the degeneracy.
  ResonanceProfile prof;
  prof.params = p;
  prof.detunings_ghz = grid.points();
  prof.intensities.reserve(prof.detunings_ghz.size());
  for (double d : prof.detunings_ghz) {
    const DensityMatrix rho = steady_state(p.with_detuning_ghz(d));
    prof.intensities.push_back(population(rho, 4));
  }
  return prof;
}

SweepResult2D sweep_g_factor(const SystemParams& base, double g_e,
                             std::span<const double> g_h_grid, double b_tesla,
                             const ScanGrid& grid) {
  if (!(g_e > 0.0)) {
    throw std::invalid_argument("sweep_g_factor: g_e must be > 0");
  }
  if (g_h_grid.empty()) {
    throw std::invalid_argument("sweep_g_factor: empty g_h grid");
  }
  SweepResult2D out;
  out.g_h.assign(g_h_grid.begin(), g_h_grid.end());
  out.detunings_ghz = grid.points();
  out.intensity.resize(static_cast<Eigen::Index>(out.g_h.size()),
                       static_cast<Eigen::Index>(out.detunings_ghz.size()));
  SystemParams p = base;
  p.delta_e = units::uev_to_angular(units::zeeman_splitting_uev(g_e, b_tesla));
  for (std::size_t r = 0; r < out.g_h.size(); ++r) {
    p.delta_h =
        units::uev_to_angular(units::zeeman_splitting_uev(out.g_h[r], b_tesla));
    const ResonanceProfile prof = scan_detuning(p, grid);
    for (std::size_t c = 0; c < prof.intensities.size(); ++c) {
      out.intensity(static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(c)) = prof.intensities[c];
    }
  }
  return out;
}

SweepResult2D normalize_rows(const SweepResult2D& s) {
  SweepResult2D out = s;
  for (Eigen::Index r = 0; r < out.intensity.rows(); ++r) {
    const double m = out.intensity.row(r).maxCoeff();
    if (!(m > 0.0)) throw ZeroRow(static_cast<int>(r));
    out.intensity.row(r) /= m;
  }
  out.normalization = Normalization::kRowNormalized;
  return out;
}

PowerSweepResult sweep_power(const SystemParams& base,
                             std::span<const double> omega_ghz) {
  PowerSweepResult out;
  for (double w : omega_ghz) {
    if (!(w > 0.0)) {
      throw std::invalid_argument("sweep_power: omega values must be > 0");
    }
  }
  const double gamma_ghz = units::angular_to_ghz(base.gamma);
  for (double w : omega_ghz) {
    const SystemParams p = base.with_rabi_ghz(w);
    // Two-level closed form seeds the span; measurement refines it.
    double est_ghz = 2.0 * std::sqrt(gamma_ghz * gamma_ghz + 2.0 * w * w);
    Fwhm width;
    ResonanceProfile prof;
    bool done = false;
    for (int attempt = 0; attempt < 10 && !done; ++attempt) {
      const double span = 6.0 * est_ghz;
      prof = scan_detuning(p, ScanGrid{-span / 2.0, span / 2.0, 601});
      try {
        width = extract_fwhm(prof);
      } catch (const HalfMaxNotBracketed&) {
        est_ghz *= 2.0;
        continue;
      }
      if (6.0 * width.ghz > span) {
        est_ghz = width.ghz;  // rescan with the measured width
        continue;
      }
      done = true;
    }
    if (!done) {
      throw GridTooNarrow(
          "sweep_power: profile does not fall below half maximum");
    }
    out.omega_ghz.push_back(w);
    out.power.push_back(w * w);
    out.fwhm_ghz.push_back(width.ghz);
    out.fwhm_uev.push_back(width.uev);
    out.peak.push_back(
        *std::max_element(prof.intensities.begin(), prof.intensities.end()));
  }
  return out;
}

Fwhm extract_fwhm(const ResonanceProfile& prof) {
  const UnimodalCheck chk = check_unimodal(prof.intensities);
  if (!chk.unimodal) {
    throw NotUnimodal("extract_fwhm: profile is not unimodal");
  }
  const auto& y = prof.intensities;
  const auto& x = prof.detunings_ghz;
  const int peak = chk.peak_index;
  const double half = y[peak] / 2.0;

  auto interpolate = [&](int lo, int hi) {
    return x[lo] + (half - y[lo]) / (y[hi] - y[lo]) * (x[hi] - x[lo]);
  };

  double left = 0.0, right = 0.0;
  bool found_left = false, found_right = false;
  for (int i = peak; i > 0; --i) {
    if (y[i - 1] < half && y[i] >= half) {
      left = interpolate(i - 1, i);
      found_left = true;
      break;
    }
  }
  for (int i = peak; i + 1 < static_cast<int>(y.size()); ++i) {
    if (y[i] >= half && y[i + 1] < half) {
      right = interpolate(i + 1, i);
      found_right = true;
      break;
    }
  }
  if (!found_left || !found_right) {
    throw HalfMaxNotBracketed(
        "extract_fwhm: half maximum not crossed inside the grid");
  }
  Fwhm w;
  w.ghz = right - left;
  w.uev = units::ghz_to_uev(w.ghz);
  return w;
}

UnimodalCheck check_unimodal(std::span<const double> values) {
  if (values.size() < 3) {
    throw std::invalid_argument("check_unimodal: need at least 3 samples");
  }
  const double maxval = *std::max_element(values.begin(), values.end());
  const double tol = 1e-12 * std::abs(maxval);

  UnimodalCheck out;
  bool falling = false;
  int peak = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double d = values[i] - values[i - 1];
    if (!falling) {
      if (d < -tol) {
        falling = true;
      } else if (values[i] >= values[peak]) {
        peak = static_cast<int>(i);
      }
    } else if (d > tol) {
      return out;  // second rise: not unimodal
    }
  }
  out.unimodal = true;
  out.peak_index = peak;
  out.peak_at_boundary =
      (peak == 0 || peak == static_cast<int>(values.size()) - 1);
  return out;
}

bool is_unimodal(const ResonanceProfile& prof) {
  return check_unimodal(prof.intensities).unimodal;
}

}  // namespace spinpump
