#pragma once

#include <span>

namespace spinpump {

/// Unit-peak Lorentzian parameterized by full width at half maximum.
inline double lorentzian_unit(double x, double center, double fwhm) {
  const double u = 2.0 * (x - center) / fwhm;
  return 1.0 / (1.0 + u * u);
}

/// Constant background plus a sum of Lorentzian peaks. Parameter layout:
/// [background, amp_0, center_0, fwhm_0, amp_1, ...].
double peak_sum_model(double x, std::span<const double> params);

}  // namespace spinpump
