#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spinpump/fit.hpp"
#include "spinpump/scan.hpp"

namespace spinpump {

/// Spectrum files carry `#`-prefixed metadata lines (B=<T>, pol=<H|V|U>,
/// P=<uW>), then a header row whose first column names the abscissa unit
/// (`uev` or `nm`), then one (abscissa, counts) row per sample. Wavelength
/// files are converted to micro-eV and re-sorted ascending on read.
SpectrumData read_spectrum_csv(const std::filesystem::path& path);
void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumData& s);

/// Two-column numeric CSV (optional metadata/comment lines), e.g. power vs
/// intensity or power vs width records.
struct XyData {
  std::vector<double> x;
  std::vector<double> y;
  std::string x_name;
  std::string y_name;
};
XyData read_xy_csv(const std::filesystem::path& path);

void write_profile_csv(const std::filesystem::path& path,
                       const ResonanceProfile& prof);
ResonanceProfile read_profile_csv(const std::filesystem::path& path);

/// Long-format sweep: one (g_h, detuning_ghz, intensity) row per sample.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult2D& s);

void write_power_sweep_csv(const std::filesystem::path& path,
                           const PowerSweepResult& s);
PowerSweepResult read_power_sweep_csv(const std::filesystem::path& path);

/// Writes through a temp file in the same directory plus an atomic rename.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);

std::string format_double(double v);  // shortest exact round-trip form

}  // namespace spinpump
