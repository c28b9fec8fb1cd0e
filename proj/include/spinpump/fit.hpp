#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "spinpump/scan.hpp"

namespace spinpump {

enum class Polarization { kH, kV, kUnpolarized };

/// A photoluminescence spectrum: counts over photon energy. Wavelength
/// input is converted to micro-eV at the I/O boundary.
struct SpectrumData {
  std::vector<double> energy_uev;  ///< strictly increasing
  std::vector<double> counts;      ///< non-negative
  Polarization polarization = Polarization::kUnpolarized;
  double b_field_tesla = 0.0;
  std::optional<double> power_uw;

  void validate() const;  // throws std::invalid_argument
};

struct PeakFit {
  double center_uev = 0.0;
  double fwhm_uev = 0.0;
  double amplitude = 0.0;
  double center_sigma = 0.0;
  double fwhm_sigma = 0.0;
  double amplitude_sigma = 0.0;
};

/// Result of a multi-Lorentzian fit: peaks sorted by center, plus the
/// constant background shared by all of them.
struct MultiPeakFit {
  std::vector<PeakFit> peaks;
  double background = 0.0;
  double background_sigma = 0.0;
  double residual_norm = 0.0;
  bool ill_conditioned = false;
};

struct PeakSeed {
  double center_uev = 0.0;
  double fwhm_uev = 0.0;
  double amplitude = 0.0;
};

/// One magnetic-field point of a Zeeman series: the four transition
/// energies, sorted. When the two inner lines cannot be distinguished the
/// pair is reported merged. Points where no quadruplet could be resolved
/// are kept as gaps (valid = false).
struct QuadrupletPoint {
  double b_tesla = 0.0;
  std::array<double, 4> centers_uev{};
  bool inner_merged = false;
  bool valid = false;
  int n_fitted = 0;  ///< model order selected for this spectrum
};

struct DiamagneticFit {
  double kappa_uev_t2 = 0.0;  ///< quadratic-in-B shift coefficient
  double e0_uev = 0.0;        ///< zero-field center
  double kappa_sigma = 0.0;
  double e0_sigma = 0.0;
};

struct ZeemanSeries {
  std::vector<QuadrupletPoint> points;  ///< B strictly increasing
  /// Present on series returned by remove_diamagnetic.
  std::optional<DiamagneticFit> diamagnetic;
};

struct GFactorResult {
  double g_sum = 0.0;   ///< g_e + g_h
  double g_diff = 0.0;  ///< |g_e - g_h|
  double g_e = 0.0;     ///< (g_sum + g_diff) / 2
  double g_h = 0.0;     ///< (g_sum - g_diff) / 2
  /// Optical spectra alone cannot tell electron from hole; the assignment
  /// above is a convention and this flag stays set.
  bool assignment_ambiguous = true;
  double g_sum_sigma = 0.0;
  double g_diff_sigma = 0.0;
  double kappa_uev_t2 = 0.0;
  double e0_uev = 0.0;
  double kappa_sigma = 0.0;
  double e0_sigma = 0.0;
};

struct FssResult {
  double fss_uev = 0.0;
  double sigma_uev = 0.0;
};

struct SaturationFit {
  double i_max = 0.0;
  double p_sat_uw = 0.0;
  double i_max_sigma = 0.0;
  double p_sat_sigma = 0.0;
  double residual_norm = 0.0;
  /// Set when the data do not constrain the saturation power (e.g. a purely
  /// linear low-power record).
  bool p_sat_unbounded = false;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_sigma = 0.0;
  double slope_sigma = 0.0;
  double residual_norm = 0.0;
  double r_squared = 0.0;
};

struct SqrtBroadeningFit {
  double w0 = 0.0;
  double p_sat = 0.0;
  double w0_sigma = 0.0;
  double p_sat_sigma = 0.0;
  double residual_norm = 0.0;
};

struct PowerBroadeningFit {
  LinearFit linear;           ///< w = a + b P
  SqrtBroadeningFit sqrt_model;  ///< w = w0 sqrt(1 + P / P_sat)
  bool linear_preferred = false;
};

struct DisplacedPairFit {
  double amplitude = 0.0;    ///< product model: single prefactor
  double amplitude2 = 0.0;   ///< sum model only: second line amplitude
  double splitting_ghz = 0.0;
  double fwhm_ghz = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
};

struct ResonanceModelComparison {
  DisplacedPairFit product;  ///< A * L(d - s/2) * L(d + s/2)
  DisplacedPairFit sum;      ///< A1 * L(d - s/2) + A2 * L(d + s/2)
  bool product_preferred = false;
};

/// Least-squares fit of n Lorentzians plus a constant background. Seeds
/// default to the highest local maxima. Throws NoConvergence at the
/// iteration cap; a near-degenerate peak set is flagged ill-conditioned and
/// still returned, with inflated uncertainties.
MultiPeakFit fit_peaks(const SpectrumData& s, int n_peaks,
                       std::span<const PeakSeed> seeds = {});

/// Fits each spectrum with 1, 2 or 4 peaks, picking the model order by a
/// residual F-test (threshold 0.01, preferring fewer peaks), and collects
/// the quadruplet centers per field value. Unresolved points become gaps.
ZeemanSeries fit_quadruplet_series(const std::vector<SpectrumData>& spectra);

/// Linear regression of the quadruplet mean energy on B^2; subtracting the
/// result leaves the pure Zeeman structure centered on zero, and the
/// regression result travels with the returned series. Requires at least 3
/// resolved field points.
ZeemanSeries remove_diamagnetic(const ZeemanSeries& z);

/// Through-origin regression of the outer and inner pair separations
/// against B; slopes divided by the Bohr magneton give g_e + g_h and
/// |g_e - g_h|. Requires a diamagnetic-corrected series.
GFactorResult extract_g_factors(const ZeemanSeries& corrected);

/// Fine-structure splitting: single-peak fit per polarization, difference
/// of centers with propagated uncertainty.
FssResult extract_fss(const SpectrumData& h, const SpectrumData& v);

/// Fit of I(P) = I_max * P / (P + P_sat).
SaturationFit fit_saturation(std::span<const double> powers_uw,
                             std::span<const double> intensities);

/// Both broadening models with their residuals; linear_preferred reports
/// which one wins on this record.
PowerBroadeningFit fit_power_broadening(std::span<const double> powers,
                                        std::span<const double> widths_uev);

/// Product-of-displaced-Lorentzians resonance model against the two-line
/// sum model, both fitted to the same profile.
ResonanceModelComparison fit_resonance_product(const ResonanceProfile& prof,
                                               double splitting_ghz);

/// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// p-value of an F statistic with (d1, d2) degrees of freedom.
double f_test_p_value(double f, double d1, double d2);

}  // namespace spinpump
