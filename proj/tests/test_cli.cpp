#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "spinpump/csv.hpp"
#include "spinpump/synth.hpp"

using namespace spinpump;
namespace fs = std::filesystem;

namespace {

const char* kCli = SPINPUMP_CLI_PATH;

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() /
          ("spinpump_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
};

int run(const Workdir& wd, const std::string& args) {
  const std::string cmd = "cd " + wd.dir.string() + " && " + kCli + " " +
                          args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("scan: default run writes 601 rows with a single maximum") {
  Workdir wd;
  REQUIRE(run(wd, "scan") == 0);
  const ResonanceProfile prof = read_profile_csv(wd.dir / "scan.csv");
  REQUIRE(prof.intensities.size() == 601);
  int argmax = 0;
  for (std::size_t i = 0; i < prof.intensities.size(); ++i) {
    if (prof.intensities[i] > prof.intensities[argmax]) {
      argmax = static_cast<int>(i);
    }
  }
  CHECK(prof.detunings_ghz[argmax] == doctest::Approx(0.0));
  int maxima = 0;
  for (std::size_t i = 1; i + 1 < prof.intensities.size(); ++i) {
    if (prof.intensities[i] > prof.intensities[i - 1] &&
        prof.intensities[i] > prof.intensities[i + 1]) {
      ++maxima;
    }
  }
  CHECK(maxima == 1);
}

TEST_CASE("scan: repeated runs are byte-identical") {
  Workdir wd;
  REQUIRE(run(wd, "scan --points 101 --output a.csv") == 0);
  REQUIRE(run(wd, "scan --points 101 --output b.csv") == 0);
  CHECK(slurp(wd.dir / "a.csv") == slurp(wd.dir / "b.csv"));
}

TEST_CASE("scan: zero drive exits 3 with a degeneracy message") {
  Workdir wd;
  CHECK(run(wd, "scan --omega-ghz 0") == 3);
  const std::string err = slurp(wd.dir / "cli_stderr.txt");
  CHECK(err.find("steady state") != std::string::npos);
}

TEST_CASE("scan: bad grid and unknown options exit 2") {
  Workdir wd;
  CHECK(run(wd, "scan --points 2") == 2);
  CHECK(run(wd, "scan --no-such-flag") == 2);
}

TEST_CASE("scan: dump-config round-trips to the same bytes") {
  Workdir wd;
  REQUIRE(run(wd, "scan --points 51 --stop-ghz 2 --dump-config") == 0);
  fs::copy_file(wd.dir / "cli_stdout.txt", wd.dir / "cfg.ini");
  REQUIRE(run(wd, "scan --points 51 --stop-ghz 2 --output direct.csv") == 0);
  REQUIRE(run(wd, "scan --config cfg.ini --output fromcfg.csv") == 0);
  CHECK(slurp(wd.dir / "direct.csv") == slurp(wd.dir / "fromcfg.csv"));
}

TEST_CASE("scan: plot flag emits an SVG") {
  Workdir wd;
  REQUIRE(run(wd, "scan --points 51 --plot scan.svg") == 0);
  const std::string svg = slurp(wd.dir / "scan.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("sweep: gfactor mode writes raw and normalized long CSVs") {
  Workdir wd;
  REQUIRE(run(wd, "sweep --mode gfactor --g-h-points 3 --g-h-min 0.32 "
                  "--g-h-max 0.36 --points 51 --output sw.csv") == 0);
  const std::string raw = slurp(wd.dir / "sw.csv");
  CHECK(raw.find("g_h,detuning_ghz,intensity") != std::string::npos);
  CHECK(fs::exists(wd.dir / "sw_normalized.csv"));
  // 3 rows x 51 columns of data lines plus header/metadata
  int lines = 0;
  for (char c : raw) lines += c == '\n';
  CHECK(lines == 2 + 3 * 51);
}

TEST_CASE("sweep: empty g grid exits 2") {
  Workdir wd;
  CHECK(run(wd, "sweep --mode gfactor --g-h-points 0") == 2);
}

TEST_CASE("sweep: power mode emits the five-column record") {
  Workdir wd;
  REQUIRE(run(wd, "sweep --mode power --omega-points 4 --omega-min-ghz 0.5 "
                  "--omega-max-ghz 2.0 --output pw.csv") == 0);
  const PowerSweepResult ps = read_power_sweep_csv(wd.dir / "pw.csv");
  REQUIRE(ps.omega_ghz.size() == 4);
  CHECK(ps.fwhm_ghz[3] > ps.fwhm_ghz[0]);
}

TEST_CASE("synth: default field list yields one file per (B, polarization)") {
  Workdir wd;
  REQUIRE(run(wd, "synth --seed 7") == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(wd.dir)) {
    if (e.path().filename().string().starts_with("synth_B")) ++files;
  }
  CHECK(files == 12);

  // seed change alters the noise but not the metadata
  REQUIRE(run(wd, "synth --seed 8 --output-prefix other") == 0);
  const std::string a = slurp(wd.dir / "synth_B3_H.csv");
  const std::string b = slurp(wd.dir / "other_B3_H.csv");
  CHECK(a != b);
  CHECK(a.substr(0, a.find("uev,counts")) ==
        b.substr(0, b.find("uev,counts")));
}

TEST_CASE("synth: noiseless output matches the library synthesizer exactly") {
  Workdir wd;
  REQUIRE(run(wd, "synth --noise none --b 2 --seed 3") == 0);
  const SpectrumData from_cli = read_spectrum_csv(wd.dir / "synth_B2_H.csv");
  SynthTruth t;
  t.kappa_uev_t2 = 5.07;
  t.g_h = 0.30;
  t.fss_uev = 1.8;
  t.b_tesla = 2.0;
  const SpectrumData direct =
      synthesize_spectrum(t, Polarization::kH, NoiseModel::kNone, 3);
  REQUIRE(from_cli.counts.size() == direct.counts.size());
  for (std::size_t i = 0; i < direct.counts.size(); ++i) {
    CHECK(from_cli.counts[i] == direct.counts[i]);
  }
}

TEST_CASE("fit zeeman: synthetic series recovers the diamagnetic shift") {
  Workdir wd;
  REQUIRE(run(wd, "synth --noise none") == 0);
  std::string inputs;
  for (int b = 0; b <= 5; ++b) {
    for (const char* pol : {"H", "V"}) {
      if (!inputs.empty()) inputs += ',';
      inputs += "synth_B" + std::to_string(b) + "_" + pol + ".csv";
    }
  }
  REQUIRE(run(wd, "fit zeeman --input " + inputs) == 0);
  const std::string report = slurp(wd.dir / "zeeman_report.csv");
  auto metadata_value = [&](const std::string& key) {
    const auto pos = report.find("# " + key + "=");
    REQUIRE(pos != std::string::npos);
    return std::strtod(report.c_str() + pos + key.size() + 3, nullptr);
  };
  CHECK(metadata_value("kappa_uev_t2") == doctest::Approx(5.07).epsilon(1e-6));
  CHECK(metadata_value("g_e") == doctest::Approx(0.34).epsilon(1e-6));
  CHECK(metadata_value("g_h") == doctest::Approx(0.30).epsilon(1e-6));
}

TEST_CASE("fit fss: identical inputs give zero splitting") {
  Workdir wd;
  REQUIRE(run(wd, "synth --noise none --b 0") == 0);
  REQUIRE(run(wd, "fit fss --input-h synth_B0_H.csv --input-v synth_B0_H.csv") ==
          0);
  const std::string report = slurp(wd.dir / "fss_report.csv");
  CHECK(report.find("\n0,") != std::string::npos);
}

TEST_CASE("fit: missing input file exits 2") {
  Workdir wd;
  CHECK(run(wd, "fit peaks --input missing.csv") == 2);
  CHECK(run(wd, "fit fss --input-h a.csv --input-v b.csv") == 2);
}

TEST_CASE("fit saturation and broadening consume power sweep output") {
  Workdir wd;
  REQUIRE(run(wd, "sweep --mode power --omega-points 6 --omega-min-ghz 0.3 "
                  "--omega-max-ghz 2.85 --output pw.csv") == 0);
  REQUIRE(run(wd, "fit saturation --input pw.csv --from-power-sweep") == 0);
  const std::string sat = slurp(wd.dir / "saturation_report.csv");
  CHECK(sat.find("i_max,") != std::string::npos);
  REQUIRE(run(wd, "fit broadening --input pw.csv --from-power-sweep") == 0);
  const std::string broad = slurp(wd.dir / "broadening_report.csv");
  CHECK(broad.find("linear,") != std::string::npos);
  CHECK(broad.find("sqrt,") != std::string::npos);
}

TEST_CASE("fit resonance: scan output prefers the product model") {
  Workdir wd;
  // delta_h from g_h = 0.30 at 5 T; delta_e stays at the canonical 23.8 GHz
  REQUIRE(run(wd, "scan --delta-h-ghz 20.99435 --output prof.csv") == 0);
  REQUIRE(run(wd, "fit resonance --input prof.csv --splitting-ghz 2.8 "
                  "--output res.csv") == 0);
  const std::string report = slurp(wd.dir / "res.csv");
  CHECK(report.find("# product_preferred=1") != std::string::npos);
}

TEST_CASE("help exits cleanly for every subcommand") {
  Workdir wd;
  CHECK(run(wd, "--help") == 0);
  CHECK(run(wd, "scan --help") == 0);
  CHECK(run(wd, "sweep --help") == 0);
  CHECK(run(wd, "synth --help") == 0);
  CHECK(run(wd, "fit --help") == 0);
  CHECK(run(wd, "fit zeeman --help") == 0);
  CHECK(run(wd, "") == 2);  // a subcommand is required
}
