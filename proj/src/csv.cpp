#include "spinpump/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spinpump/units.hpp"

namespace spinpump {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) {
    throw std::runtime_error("csv: cannot parse number '" + s + "' in " +
                             context);
  }
  return v;
}

struct ParsedCsv {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

ParsedCsv parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open " + path.string());
  }
  ParsedCsv out;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        out.metadata.emplace_back(trim(body.substr(0, eq)),
                                  trim(body.substr(eq + 1)));
      }
      continue;
    }
    if (!header_seen) {
      out.header = split(line, ',');
      for (auto& h : out.header) h = trim(h);
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path.string()));
    out.rows.push_back(std::move(row));
  }
  if (!header_seen) {
    throw std::runtime_error("csv: missing header row in " + path.string());
  }
  return out;
}

std::string meta_or(const ParsedCsv& csv, const std::string& key,
                    const std::string& fallback) {
  for (const auto& [k, v] : csv.metadata) {
    if (k == key) return v;
  }
  return fallback;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("csv: cannot write " + tmp.string());
    }
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

SpectrumData read_spectrum_csv(const std::filesystem::path& path) {
  const ParsedCsv csv = parse_csv(path);
  if (csv.header.size() < 2) {
    throw std::runtime_error("csv: spectrum needs (abscissa, counts) columns");
  }
  const std::string unit = csv.header[0];
  const bool is_nm = unit == "nm" || unit.ends_with("_nm");
  const bool is_uev = unit == "uev" || unit.ends_with("_uev");
  if (!is_nm && !is_uev) {
    throw std::runtime_error("csv: abscissa unit must be 'uev' or 'nm', got '" +
                             unit + "'");
  }

  SpectrumData s;
  const std::string pol = meta_or(csv, "pol", "U");
  if (pol == "H") {
    s.polarization = Polarization::kH;
  } else if (pol == "V") {
    s.polarization = Polarization::kV;
  } else {
    s.polarization = Polarization::kUnpolarized;
  }
  s.b_field_tesla = parse_double(meta_or(csv, "B", "0"), "metadata B");
  const std::string power = meta_or(csv, "P", "");
  if (!power.empty()) s.power_uw = parse_double(power, "metadata P");

  std::vector<std::pair<double, double>> samples;
  samples.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    if (row.size() < 2) {
      throw std::runtime_error("csv: short row in " + path.string());
    }
    const double e = is_nm ? units::nm_to_uev(row[0]) : row[0];
    samples.emplace_back(e, row[1]);
  }
  std::sort(samples.begin(), samples.end());
  for (const auto& [e, c] : samples) {
    s.energy_uev.push_back(e);
    s.counts.push_back(c);
  }
  s.validate();
  return s;
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const SpectrumData& s) {
  std::string out;
  out += "# B=" + format_double(s.b_field_tesla) + "\n";
  out += std::string("# pol=") +
         (s.polarization == Polarization::kH
              ? "H"
              : s.polarization == Polarization::kV ? "V" : "U") +
         "\n";
  if (s.power_uw) out += "# P=" + format_double(*s.power_uw) + "\n";
  out += "uev,counts\n";
  for (std::size_t i = 0; i < s.energy_uev.size(); ++i) {
    out += format_double(s.energy_uev[i]);
    out += ',';
    out += format_double(s.counts[i]);
    out += '\n';
  }
  atomic_write_text(path, out);
}

XyData read_xy_csv(const std::filesystem::path& path) {
  const ParsedCsv csv = parse_csv(path);
  if (csv.header.size() < 2) {
    throw std::runtime_error("csv: need two columns in " + path.string());
  }
  XyData d;
  d.x_name = csv.header[0];
  d.y_name = csv.header[1];
  for (const auto& row : csv.rows) {
    if (row.size() < 2) {
      throw std::runtime_error("csv: short row in " + path.string());
    }
    d.x.push_back(row[0]);
    d.y.push_back(row[1]);
  }
  return d;
}

void write_profile_csv(const std::filesystem::path& path,
                       const ResonanceProfile& prof) {
  std::string out;
  out += "# omega_ghz=" +
         format_double(units::angular_to_ghz(prof.params.rabi)) + "\n";
  out += "# gamma_ghz=" +
         format_double(units::angular_to_ghz(prof.params.gamma)) + "\n";
  out += "# delta_e_ghz=" +
         format_double(units::angular_to_ghz(prof.params.delta_e)) + "\n";
  out += "# delta_h_ghz=" +
         format_double(units::angular_to_ghz(prof.params.delta_h)) + "\n";
  if (prof.params.t1_spin) {
    out += "# t1_ns=" + format_double(*prof.params.t1_spin) + "\n";
  }
  out += "detuning_ghz,intensity\n";
  for (std::size_t i = 0; i < prof.detunings_ghz.size(); ++i) {
    out += format_double(prof.detunings_ghz[i]);
    out += ',';
    out += format_double(prof.intensities[i]);
    out += '\n';
  }
  atomic_write_text(path, out);
}

ResonanceProfile read_profile_csv(const std::filesystem::path& path) {
  const ParsedCsv csv = parse_csv(path);
  ResonanceProfile prof;
  for (const auto& row : csv.rows) {
    if (row.size() < 2) {
      throw std::runtime_error("csv: short row in " + path.string());
    }
    prof.detunings_ghz.push_back(row[0]);
    prof.intensities.push_back(row[1]);
  }
  return prof;
}

void write_sweep_csv(const std::filesystem::path& path,
                     const SweepResult2D& s) {
  std::string out;
  out += std::string("# normalization=") +
         (s.normalization == Normalization::kRowNormalized ? "row" : "raw") +
         "\n";
  out += "g_h,detuning_ghz,intensity\n";
  for (Eigen::Index r = 0; r < s.intensity.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.intensity.cols(); ++c) {
      out += format_double(s.g_h[static_cast<std::size_t>(r)]);
      out += ',';
      out += format_double(s.detunings_ghz[static_cast<std::size_t>(c)]);
      out += ',';
      out += format_double(s.intensity(r, c));
      out += '\n';
    }
  }
  atomic_write_text(path, out);
}

void write_power_sweep_csv(const std::filesystem::path& path,
                           const PowerSweepResult& s) {
  std::string out = "omega_ghz,power,fwhm_ghz,fwhm_uev,peak\n";
  for (std::size_t i = 0; i < s.omega_ghz.size(); ++i) {
    out += format_double(s.omega_ghz[i]);
    out += ',';
    out += format_double(s.power[i]);
    out += ',';
    out += format_double(s.fwhm_ghz[i]);
    out += ',';
    out += format_double(s.fwhm_uev[i]);
    out += ',';
    out += format_double(s.peak[i]);
    out += '\n';
  }
  atomic_write_text(path, out);
}

PowerSweepResult read_power_sweep_csv(const std::filesystem::path& path) {
  const ParsedCsv csv = parse_csv(path);
  if (csv.header.size() < 5) {
    throw std::runtime_error("csv: not a power sweep file: " + path.string());
  }
  PowerSweepResult s;
  for (const auto& row : csv.rows) {
    if (row.size() < 5) {
      throw std::runtime_error("csv: short row in " + path.string());
    }
    s.omega_ghz.push_back(row[0]);
    s.power.push_back(row[1]);
    s.fwhm_ghz.push_back(row[2]);
    s.fwhm_uev.push_back(row[3]);
    s.peak.push_back(row[4]);
  }
  return s;
}

}  // namespace spinpump
