// spinpump: steady-state simulation of a driven four-level spin system and
// the matching spectroscopy fitting chain, exposed as CLI subcommands that
// emit reproducible CSV (and optional SVG) files.
#include <CLI11.hpp>

#include <algorithm>
#include <clocale>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spinpump/csv.hpp"
#include "spinpump/errors.hpp"
#include "spinpump/fit.hpp"
#include "spinpump/lineshape.hpp"
#include "spinpump/quantum.hpp"
#include "spinpump/scan.hpp"
#include "spinpump/svg.hpp"
#include "spinpump/synth.hpp"
#include "spinpump/system.hpp"
#include "spinpump/units.hpp"

namespace {

using namespace spinpump;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitFit = 4;

struct SystemOpts {
  double delta_e_ghz = 23.8;
  double delta_h_ghz = 23.8;
  double omega_ghz = 1.0;
  double gamma_ghz = 0.25;
  double t1_ns = 0.0;  // 0 = infinite

  SystemParams params() const {
    std::optional<double> t1;
    if (t1_ns > 0.0) t1 = t1_ns;
    return SystemParams::from_ghz(delta_e_ghz, delta_h_ghz, 0.0, omega_ghz,
                                  gamma_ghz, t1);
  }
  void add_options(CLI::App* cmd) {
    cmd->add_option("--delta-e-ghz", delta_e_ghz,
                    "excited-state splitting /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--delta-h-ghz", delta_h_ghz,
                    "ground-state splitting /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--omega-ghz", omega_ghz, "drive strength /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--gamma-ghz", gamma_ghz,
                    "per-channel decay rate /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--t1-ns", t1_ns, "ground spin lifetime (ns, 0 = infinite)")
        ->capture_default_str();
  }
};

struct GridOpts {
  double start_ghz = -3.0;
  double stop_ghz = 3.0;
  int points = 601;

  ScanGrid grid() const { return ScanGrid{start_ghz, stop_ghz, points}; }
  void add_options(CLI::App* cmd) {
    cmd->add_option("--start-ghz", start_ghz, "first detuning /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--stop-ghz", stop_ghz, "last detuning /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--points", points, "number of grid points")
        ->capture_default_str();
  }
};

// The config option lives on the root app; sections map to subcommands
// ([scan], [fit.peaks], ...). Subcommands fall through so --config may
// also be given after the subcommand name.
void attach_config(CLI::App* cmd, bool* dump_flag) {
  cmd->fallthrough();
  cmd->add_flag("--dump-config", *dump_flag,
                "print the effective configuration and exit")
      ->configurable(false);
}

std::string config_section(const CLI::App* cmd) {
  std::string name = cmd->get_name();
  for (const CLI::App* p = cmd->get_parent(); p && p->get_parent();
       p = p->get_parent()) {
    name = p->get_name() + "." + name;
  }
  return name;
}

bool maybe_dump_config(CLI::App* cmd, bool dump_flag) {
  if (!dump_flag) return false;
  std::cout << "[" << config_section(cmd) << "]\n"
            << cmd->config_to_str(true, true);
  return true;
}

std::string pol_letter(Polarization p) {
  return p == Polarization::kH ? "H" : p == Polarization::kV ? "V" : "U";
}

// ---------------------------------------------------------------- scan ----

struct ScanCmd {
  SystemOpts sys;
  GridOpts grid;
  std::string output = "scan.csv";
  std::string plot;
  bool dump = false;

  void install(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand(
        "scan", "detuning scan of the steady-state detection intensity");
    sys.add_options(cmd);
    grid.add_options(cmd);
    cmd->add_option("--output", output, "profile CSV path")
        ->capture_default_str();
    cmd->add_option("--plot", plot, "also write an SVG line chart here");
    attach_config(cmd, &dump);
    cmd->callback([this, cmd] {
      if (maybe_dump_config(cmd, dump)) return;
      const ResonanceProfile prof = scan_detuning(sys.params(), grid.grid());
      write_profile_csv(output, prof);
      if (!plot.empty()) {
        write_svg_chart(plot, "detection intensity vs laser detuning",
                        "detuning/2pi (GHz)", "upper-trion occupation",
                        {{prof.detunings_ghz, prof.intensities, "", ""}});
      }
    });
  }
};

// --------------------------------------------------------------- sweep ----

struct SweepCmd {
  SystemOpts sys;
  GridOpts grid;
  std::string mode = "gfactor";
  double g_e = 0.34;
  double g_h_min = 0.24;
  double g_h_max = 0.44;
  int g_h_points = 41;
  double b_tesla = 5.0;
  double omega_min_ghz = 0.1425;
  double omega_max_ghz = 2.85;
  int omega_points = 20;
  std::string output = "sweep.csv";
  std::string plot;
  bool dump = false;

  void install(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand(
        "sweep", "2D sweeps: hole g factor rows or drive-strength series");
    cmd->add_option("--mode", mode, "gfactor | power")
        ->check(CLI::IsMember({"gfactor", "power"}))
        ->capture_default_str();
    sys.add_options(cmd);
    grid.add_options(cmd);
    cmd->add_option("--g-e", g_e, "electron g factor")->capture_default_str();
    cmd->add_option("--g-h-min", g_h_min, "first hole g factor")
        ->capture_default_str();
    cmd->add_option("--g-h-max", g_h_max, "last hole g factor")
        ->capture_default_str();
    cmd->add_option("--g-h-points", g_h_points, "hole g factor grid size")
        ->capture_default_str();
    cmd->add_option("--b-tesla", b_tesla, "magnetic field (T)")
        ->capture_default_str();
    cmd->add_option("--omega-min-ghz", omega_min_ghz,
                    "power mode: first drive strength /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--omega-max-ghz", omega_max_ghz,
                    "power mode: last drive strength /2pi (GHz)")
        ->capture_default_str();
    cmd->add_option("--omega-points", omega_points,
                    "power mode: drive grid size")
        ->capture_default_str();
    cmd->add_option("--output", output, "output CSV path (gfactor mode also "
                    "writes <stem>_normalized<ext>)")
        ->capture_default_str();
    cmd->add_option("--plot", plot, "also write an SVG chart here");
    attach_config(cmd, &dump);
    cmd->callback([this, cmd] {
      if (maybe_dump_config(cmd, dump)) return;
      if (mode == "gfactor") {
        run_gfactor();
      } else {
        run_power();
      }
    });
  }

  void run_gfactor() const {
    if (g_h_points < 1) {
      throw CLI::ValidationError("--g-h-points", "g_h grid must be nonempty");
    }
    std::vector<double> ghs(g_h_points);
    for (int i = 0; i < g_h_points; ++i) {
      ghs[i] = g_h_points == 1 ? g_h_min
                               : g_h_min + i * (g_h_max - g_h_min) /
                                               (g_h_points - 1);
    }
    const SweepResult2D raw =
        sweep_g_factor(sys.params(), g_e, ghs, b_tesla, grid.grid());
    const SweepResult2D norm = normalize_rows(raw);
    write_sweep_csv(output, raw);
    std::filesystem::path norm_path(output);
    norm_path.replace_filename(norm_path.stem().string() + "_normalized" +
                               norm_path.extension().string());
    write_sweep_csv(norm_path, norm);
    if (!plot.empty()) {
      std::vector<SvgSeries> series;
      const int step = std::max(1, g_h_points / 5);
      for (int r = 0; r < g_h_points; r += step) {
        std::vector<double> row(norm.intensity.cols());
        for (Eigen::Index c = 0; c < norm.intensity.cols(); ++c) {
          row[c] = norm.intensity(r, c);
        }
        char label[32];
        std::snprintf(label, sizeof(label), "g_h = %.3f", norm.g_h[r]);
        series.push_back({norm.detunings_ghz, row, label, ""});
      }
      write_svg_chart(plot, "normalized resonance profiles",
                      "detuning/2pi (GHz)", "normalized intensity", series);
    }
  }

  void run_power() const {
    if (omega_points < 1) {
      throw CLI::ValidationError("--omega-points", "omega grid must be nonempty");
    }
    std::vector<double> omegas(omega_points);
    for (int i = 0; i < omega_points; ++i) {
      omegas[i] = omega_points == 1
                      ? omega_min_ghz
                      : omega_min_ghz + i * (omega_max_ghz - omega_min_ghz) /
                                            (omega_points - 1);
    }
    const PowerSweepResult res = sweep_power(sys.params(), omegas);
    write_power_sweep_csv(output, res);
    if (!plot.empty()) {
      write_svg_chart(plot, "power broadening", "power (omega_ghz^2)",
                      "FWHM (ueV)", {{res.power, res.fwhm_uev, "", ""}});
      std::filesystem::path peak_path(plot);
      peak_path.replace_filename(peak_path.stem().string() + "_peak" +
                                 peak_path.extension().string());
      write_svg_chart(peak_path, "intensity saturation",
                      "power (omega_ghz^2)", "peak occupation",
                      {{res.power, res.peak, "", ""}});
    }
  }
};

// --------------------------------------------------------------- synth ----

struct SynthCmd {
  SynthTruth truth;
  std::vector<double> b_list{0, 1, 2, 3, 4, 5};
  std::string noise = "poisson";
  std::uint64_t seed = 7;
  std::string prefix = "synth";
  bool dump = false;

  void install(CLI::App& app) {
    truth.kappa_uev_t2 = 5.07;
    truth.g_h = 0.30;
    truth.fss_uev = 1.8;
    CLI::App* cmd = app.add_subcommand(
        "synth", "write synthetic quadruplet spectra, one file per (B, pol)");
    cmd->add_option("--e0-uev", truth.e0_uev, "zero-field line center (ueV)")
        ->capture_default_str();
    cmd->add_option("--kappa-uev-t2", truth.kappa_uev_t2,
                    "diamagnetic coefficient (ueV/T^2)")
        ->capture_default_str();
    cmd->add_option("--g-e", truth.g_e, "electron g factor")
        ->capture_default_str();
    cmd->add_option("--g-h", truth.g_h, "hole g factor")
        ->capture_default_str();
    cmd->add_option("--b", b_list, "magnetic field list (T)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--fwhm-uev", truth.fwhm_uev, "linewidth (ueV)")
        ->capture_default_str();
    cmd->add_option("--amp-outer", truth.amp_outer,
                    "outer line amplitude (counts)")
        ->capture_default_str();
    cmd->add_option("--amp-inner", truth.amp_inner,
                    "inner line amplitude (counts)")
        ->capture_default_str();
    cmd->add_option("--fss-uev", truth.fss_uev,
                    "zero-field fine-structure splitting (ueV)")
        ->capture_default_str();
    cmd->add_option("--background", truth.background,
                    "constant background (counts)")
        ->capture_default_str();
    cmd->add_option("--span-uev", truth.span_uev,
                    "abscissa span (ueV, 0 = auto)")
        ->capture_default_str();
    cmd->add_option("--n-points", truth.n_points, "samples per spectrum")
        ->capture_default_str();
    cmd->add_option("--noise", noise, "poisson | none")
        ->check(CLI::IsMember({"poisson", "none"}))
        ->capture_default_str();
    cmd->add_option("--seed", seed, "noise seed")->capture_default_str();
    cmd->add_option("--output-prefix", prefix, "output file prefix")
        ->capture_default_str();
    attach_config(cmd, &dump);
    cmd->callback([this, cmd] {
      if (maybe_dump_config(cmd, dump)) return;
      const NoiseModel model =
          noise == "poisson" ? NoiseModel::kPoisson : NoiseModel::kNone;
      std::uint64_t file_seed = seed;
      for (double b : b_list) {
        SynthTruth t = truth;
        t.b_tesla = b;
        for (Polarization pol : {Polarization::kH, Polarization::kV}) {
          const SpectrumData s =
              synthesize_spectrum(t, pol, model, file_seed++);
          const std::string name = prefix + "_B" + format_double(b) + "_" +
                                   pol_letter(pol) + ".csv";
          write_spectrum_csv(name, s);
          std::cout << name << "\n";
        }
      }
    });
  }
};

// ----------------------------------------------------------------- fit ----

struct FitCmd {
  // peaks
  std::string peaks_input;
  int n_peaks = 1;
  std::string peaks_output = "peaks_report.csv";
  std::string peaks_plot;
  bool peaks_dump = false;
  // zeeman
  std::vector<std::string> zeeman_inputs;
  std::string zeeman_output = "zeeman_report.csv";
  bool zeeman_dump = false;
  // fss
  std::string fss_input_h, fss_input_v;
  std::string fss_output = "fss_report.csv";
  bool fss_dump = false;
  // saturation
  std::string sat_input;
  bool sat_from_sweep = false;
  std::string sat_output = "saturation_report.csv";
  bool sat_dump = false;
  // broadening
  std::string broad_input;
  bool broad_from_sweep = false;
  std::string broad_output = "broadening_report.csv";
  bool broad_dump = false;
  // resonance
  std::string res_input;
  double res_splitting_ghz = 0.0;
  std::string res_output = "resonance_report.csv";
  bool res_dump = false;

  int exit_code = kExitOk;

  void install(CLI::App& app) {
    CLI::App* fit = app.add_subcommand("fit", "fitting chain on CSV inputs");
    fit->require_subcommand(1);
    fit->fallthrough();

    CLI::App* peaks = fit->add_subcommand(
        "peaks", "multi-Lorentzian fit of one spectrum");
    peaks->add_option("--input", peaks_input, "spectrum CSV")->required();
    peaks->add_option("--n-peaks", n_peaks, "number of peaks")
        ->capture_default_str();
    peaks->add_option("--output", peaks_output, "report CSV")
        ->capture_default_str();
    peaks->add_option("--plot", peaks_plot, "data + model SVG");
    attach_config(peaks, &peaks_dump);
    peaks->callback([this, peaks] {
      if (maybe_dump_config(peaks, peaks_dump)) return;
      run_peaks();
    });

    CLI::App* zeeman = fit->add_subcommand(
        "zeeman", "quadruplet series -> diamagnetic and g-factor extraction");
    zeeman->add_option("--input", zeeman_inputs,
                       "spectrum CSVs; files sharing a B value (e.g. an H/V "
                       "pair) are summed into one unpolarized spectrum")
        ->delimiter(',')
        ->required();
    zeeman->add_option("--output", zeeman_output, "report CSV")
        ->capture_default_str();
    attach_config(zeeman, &zeeman_dump);
    zeeman->callback([this, zeeman] {
      if (maybe_dump_config(zeeman, zeeman_dump)) return;
      run_zeeman();
    });

    CLI::App* fss = fit->add_subcommand(
        "fss", "fine-structure splitting from an H/V spectrum pair");
    fss->add_option("--input-h", fss_input_h, "H-polarized spectrum CSV")
        ->required();
    fss->add_option("--input-v", fss_input_v, "V-polarized spectrum CSV")
        ->required();
    fss->add_option("--output", fss_output, "report CSV")
        ->capture_default_str();
    attach_config(fss, &fss_dump);
    fss->callback([this, fss] {
      if (maybe_dump_config(fss, fss_dump)) return;
      run_fss();
    });

    CLI::App* sat = fit->add_subcommand(
        "saturation", "I(P) = I_max P / (P + P_sat) fit");
    sat->add_option("--input", sat_input,
                    "two-column (power, intensity) CSV, or a power-sweep CSV "
                    "with --from-power-sweep")
        ->required();
    sat->add_flag("--from-power-sweep", sat_from_sweep,
                  "input is a sweep --mode power output file");
    sat->add_option("--output", sat_output, "report CSV")
        ->capture_default_str();
    attach_config(sat, &sat_dump);
    sat->callback([this, sat] {
      if (maybe_dump_config(sat, sat_dump)) return;
      run_saturation();
    });

    CLI::App* broad = fit->add_subcommand(
        "broadening", "linear and square-root width-vs-power fits");
    broad->add_option("--input", broad_input,
                      "two-column (power, width_uev) CSV, or a power-sweep "
                      "CSV with --from-power-sweep")
        ->required();
    broad->add_flag("--from-power-sweep", broad_from_sweep,
                    "input is a sweep --mode power output file");
    broad->add_option("--output", broad_output, "report CSV")
        ->capture_default_str();
    attach_config(broad, &broad_dump);
    broad->callback([this, broad] {
      if (maybe_dump_config(broad, broad_dump)) return;
      run_broadening();
    });

    CLI::App* res = fit->add_subcommand(
        "resonance", "product vs sum displaced-Lorentzian resonance models");
    res->add_option("--input", res_input, "profile CSV (from scan)")
        ->required();
    res->add_option("--splitting-ghz", res_splitting_ghz,
                    "inner-transition splitting /2pi (GHz)")
        ->capture_default_str();
    res->add_option("--output", res_output, "report CSV")
        ->capture_default_str();
    attach_config(res, &res_dump);
    res->callback([this, res] {
      if (maybe_dump_config(res, res_dump)) return;
      run_resonance();
    });
  }

  void run_peaks() {
    const SpectrumData s = read_spectrum_csv(peaks_input);
    const MultiPeakFit fit = fit_peaks(s, n_peaks);
    std::string out;
    out += "# background=" + format_double(fit.background) + "\n";
    out += "# background_sigma=" + format_double(fit.background_sigma) + "\n";
    out += "# residual_norm=" + format_double(fit.residual_norm) + "\n";
    out += std::string("# ill_conditioned=") +
           (fit.ill_conditioned ? "1" : "0") + "\n";
    out +=
        "peak,center_uev,center_sigma,fwhm_uev,fwhm_sigma,amplitude,"
        "amplitude_sigma\n";
    for (std::size_t k = 0; k < fit.peaks.size(); ++k) {
      const PeakFit& p = fit.peaks[k];
      out += std::to_string(k + 1) + ',' + format_double(p.center_uev) + ',' +
             format_double(p.center_sigma) + ',' + format_double(p.fwhm_uev) +
             ',' + format_double(p.fwhm_sigma) + ',' +
             format_double(p.amplitude) + ',' +
             format_double(p.amplitude_sigma) + '\n';
    }
    atomic_write_text(peaks_output, out);
    for (std::size_t k = 0; k < fit.peaks.size(); ++k) {
      const PeakFit& p = fit.peaks[k];
      std::printf("peak %zu: center %.4f +- %.4f ueV, fwhm %.4f +- %.4f ueV, "
                  "amplitude %.4f +- %.4f\n",
                  k + 1, p.center_uev, p.center_sigma, p.fwhm_uev,
                  p.fwhm_sigma, p.amplitude, p.amplitude_sigma);
    }
    std::printf("background %.4f, residual norm %.6g%s\n", fit.background,
                fit.residual_norm,
                fit.ill_conditioned ? " (ill-conditioned)" : "");
    if (!peaks_plot.empty()) {
      std::vector<double> params{fit.background};
      for (const PeakFit& p : fit.peaks) {
        params.push_back(p.amplitude);
        params.push_back(p.center_uev);
        params.push_back(p.fwhm_uev);
      }
      std::vector<double> model(s.energy_uev.size());
      for (std::size_t i = 0; i < model.size(); ++i) {
        model[i] = peak_sum_model(s.energy_uev[i], params);
      }
      write_svg_chart(peaks_plot, "spectrum and fitted model", "energy (ueV)",
                      "counts",
                      {{s.energy_uev, s.counts, "data", "#1f77b4"},
                       {s.energy_uev, model, "fit", "#d62728"}});
    }
  }

  void run_zeeman() {
    std::vector<SpectrumData> spectra;
    for (const auto& f : zeeman_inputs) {
      SpectrumData s = read_spectrum_csv(f);
      auto same_b = std::find_if(spectra.begin(), spectra.end(),
                                 [&](const SpectrumData& t) {
                                   return t.b_field_tesla == s.b_field_tesla;
                                 });
      if (same_b == spectra.end()) {
        spectra.push_back(std::move(s));
        continue;
      }
      if (same_b->energy_uev != s.energy_uev) {
        throw std::invalid_argument(
            "fit zeeman: spectra at B=" + format_double(s.b_field_tesla) +
            " T have different energy grids and cannot be combined");
      }
      for (std::size_t k = 0; k < s.counts.size(); ++k) {
        same_b->counts[k] += s.counts[k];
      }
      same_b->polarization = Polarization::kUnpolarized;
    }
    const ZeemanSeries series = fit_quadruplet_series(spectra);

    std::string out;
    out += "b_tesla,c1_uev,c2_uev,c3_uev,c4_uev,inner_merged,valid\n";
    for (const auto& pt : series.points) {
      out += format_double(pt.b_tesla);
      for (double c : pt.centers_uev) out += ',' + format_double(c);
      out += pt.inner_merged ? ",1" : ",0";
      out += pt.valid ? ",1" : ",0";
      out += '\n';
    }
    try {
      const ZeemanSeries corrected = remove_diamagnetic(series);
      const GFactorResult g = extract_g_factors(corrected);
      std::string head;
      head += "# kappa_uev_t2=" + format_double(g.kappa_uev_t2) + "\n";
      head += "# kappa_sigma=" + format_double(g.kappa_sigma) + "\n";
      head += "# e0_uev=" + format_double(g.e0_uev) + "\n";
      head += "# e0_sigma=" + format_double(g.e0_sigma) + "\n";
      head += "# g_sum=" + format_double(g.g_sum) + "\n";
      head += "# g_sum_sigma=" + format_double(g.g_sum_sigma) + "\n";
      head += "# g_diff=" + format_double(g.g_diff) + "\n";
      head += "# g_diff_sigma=" + format_double(g.g_diff_sigma) + "\n";
      head += "# g_e=" + format_double(g.g_e) + "\n";
      head += "# g_h=" + format_double(g.g_h) + "\n";
      head += "# assignment_ambiguous=1\n";
      atomic_write_text(zeeman_output, head + out);
      std::printf("kappa = %.4f +- %.4f ueV/T^2, E0 = %.3f ueV\n",
                  g.kappa_uev_t2, g.kappa_sigma, g.e0_uev);
      std::printf("g_sum = %.4f +- %.4f, g_diff = %.4f +- %.4f\n", g.g_sum,
                  g.g_sum_sigma, g.g_diff, g.g_diff_sigma);
      std::printf("assigned g_e = %.4f, g_h = %.4f (electron/hole assignment "
                  "ambiguous from spectra alone)\n",
                  g.g_e, g.g_h);
    } catch (const std::exception& e) {
      atomic_write_text(zeeman_output, out);
      std::fprintf(stderr, "g-factor extraction failed: %s\n", e.what());
      exit_code = kExitFit;
    }
  }

  void run_fss() {
    const SpectrumData h = read_spectrum_csv(fss_input_h);
    const SpectrumData v = read_spectrum_csv(fss_input_v);
    const FssResult fss = extract_fss(h, v);
    atomic_write_text(fss_output,
                      "fss_uev,sigma_uev\n" + format_double(fss.fss_uev) +
                          ',' + format_double(fss.sigma_uev) + '\n');
    std::printf("FSS = %.4f +- %.4f ueV\n", fss.fss_uev, fss.sigma_uev);
  }

  void run_saturation() {
    std::vector<double> p, i;
    if (sat_from_sweep) {
      const PowerSweepResult s = read_power_sweep_csv(sat_input);
      p = s.power;
      i = s.peak;
    } else {
      const XyData d = read_xy_csv(sat_input);
      p = d.x;
      i = d.y;
    }
    const SaturationFit fit = fit_saturation(p, i);
    std::string out =
        "i_max,i_max_sigma,p_sat,p_sat_sigma,residual_norm,p_sat_unbounded\n";
    out += format_double(fit.i_max) + ',' + format_double(fit.i_max_sigma) +
           ',' + format_double(fit.p_sat_uw) + ',' +
           format_double(fit.p_sat_sigma) + ',' +
           format_double(fit.residual_norm) + ',' +
           (fit.p_sat_unbounded ? "1" : "0") + '\n';
    atomic_write_text(sat_output, out);
    std::printf("I_max = %.6g +- %.3g, P_sat = %.6g +- %.3g%s\n", fit.i_max,
                fit.i_max_sigma, fit.p_sat_uw, fit.p_sat_sigma,
                fit.p_sat_unbounded ? " (P_sat unbounded by these data)" : "");
  }

  void run_broadening() {
    std::vector<double> p, w;
    if (broad_from_sweep) {
      const PowerSweepResult s = read_power_sweep_csv(broad_input);
      p = s.power;
      w = s.fwhm_uev;
    } else {
      const XyData d = read_xy_csv(broad_input);
      p = d.x;
      w = d.y;
    }
    const PowerBroadeningFit fit = fit_power_broadening(p, w);
    std::string out;
    out += std::string("# preferred=") +
           (fit.linear_preferred ? "linear" : "sqrt") + "\n";
    out += "model,param1,param1_sigma,param2,param2_sigma,residual_norm\n";
    out += "linear," + format_double(fit.linear.intercept) + ',' +
           format_double(fit.linear.intercept_sigma) + ',' +
           format_double(fit.linear.slope) + ',' +
           format_double(fit.linear.slope_sigma) + ',' +
           format_double(fit.linear.residual_norm) + '\n';
    out += "sqrt," + format_double(fit.sqrt_model.w0) + ',' +
           format_double(fit.sqrt_model.w0_sigma) + ',' +
           format_double(fit.sqrt_model.p_sat) + ',' +
           format_double(fit.sqrt_model.p_sat_sigma) + ',' +
           format_double(fit.sqrt_model.residual_norm) + '\n';
    atomic_write_text(broad_output, out);
    std::printf("linear: w = %.6g + %.6g P (residual %.6g, R^2 %.6f)\n",
                fit.linear.intercept, fit.linear.slope,
                fit.linear.residual_norm, fit.linear.r_squared);
    std::printf("sqrt:   w = %.6g sqrt(1 + P/%.6g) (residual %.6g)\n",
                fit.sqrt_model.w0, fit.sqrt_model.p_sat,
                fit.sqrt_model.residual_norm);
    std::printf("preferred: %s\n", fit.linear_preferred ? "linear" : "sqrt");
  }

  void run_resonance() {
    const ResonanceProfile prof = read_profile_csv(res_input);
    const ResonanceModelComparison cmp =
        fit_resonance_product(prof, res_splitting_ghz);
    std::string out;
    out += std::string("# product_preferred=") +
           (cmp.product_preferred ? "1" : "0") + "\n";
    out += "model,amplitude,amplitude2,splitting_ghz,fwhm_ghz,residual_norm\n";
    out += "product," + format_double(cmp.product.amplitude) + ",," +
           format_double(cmp.product.splitting_ghz) + ',' +
           format_double(cmp.product.fwhm_ghz) + ',' +
           format_double(cmp.product.residual_norm) + '\n';
    out += "sum," + format_double(cmp.sum.amplitude) + ',' +
           format_double(cmp.sum.amplitude2) + ',' +
           format_double(cmp.sum.splitting_ghz) + ',' +
           format_double(cmp.sum.fwhm_ghz) + ',' +
           format_double(cmp.sum.residual_norm) + '\n';
    atomic_write_text(res_output, out);
    std::printf("product: residual %.6g (splitting %.4f GHz, fwhm %.4f GHz)\n",
                cmp.product.residual_norm, cmp.product.splitting_ghz,
                cmp.product.fwhm_ghz);
    std::printf("sum:     residual %.6g (splitting pinned %.4f GHz, fwhm %.4f "
                "GHz)\n",
                cmp.sum.residual_norm, cmp.sum.splitting_ghz,
                cmp.sum.fwhm_ghz);
    std::printf("preferred: %s\n", cmp.product_preferred ? "product" : "sum");
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");
  CLI::App app{
      "spin pump/repump steady-state simulation and spectroscopy fits"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file (INI, one section per subcommand)");
  app.allow_config_extras(false);

  ScanCmd scan_cmd;
  SweepCmd sweep_cmd;
  SynthCmd synth_cmd;
  FitCmd fit_cmd;
  scan_cmd.install(app);
  sweep_cmd.install(app);
  synth_cmd.install(app);
  fit_cmd.install(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const DegenerateSteadyState& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const GridTooNarrow& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const NoConvergence& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const NotUnimodal& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const HalfMaxNotBracketed& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const InsufficientPoints& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const ZeroField& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const NegativeSlope& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return kExitFit;
  } catch (const ZeroRow& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return fit_cmd.exit_code;
}
