#include "spinpump/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "spinpump/lineshape.hpp"
#include "spinpump/units.hpp"

namespace spinpump {

namespace {

struct Line {
  double center_uev;
  double amplitude;
  Polarization pol;
};

std::vector<Line> transition_lines(const SynthTruth& t) {
  std::vector<Line> lines;
  if (t.b_tesla == 0.0) {
    lines.push_back({t.e0_uev - 0.5 * t.fss_uev, t.amp_outer, Polarization::kH});
    lines.push_back({t.e0_uev + 0.5 * t.fss_uev, t.amp_inner, Polarization::kV});
    return lines;
  }
  const double center = t.e0_uev + t.kappa_uev_t2 * t.b_tesla * t.b_tesla;
  const double de = units::zeeman_splitting_uev(t.g_e, t.b_tesla);
  const double dh = units::zeeman_splitting_uev(t.g_h, t.b_tesla);
  lines.push_back({center - 0.5 * (de + dh), t.amp_outer, Polarization::kH});
  lines.push_back({center + 0.5 * (de + dh), t.amp_outer, Polarization::kH});
  lines.push_back({center - 0.5 * (de - dh), t.amp_inner, Polarization::kV});
  lines.push_back({center + 0.5 * (de - dh), t.amp_inner, Polarization::kV});
  return lines;
}

}  // namespace

SpectrumData synthesize_spectrum(const SynthTruth& truth, Polarization pol,
                                 NoiseModel noise, std::uint64_t seed) {
  if (!(truth.fwhm_uev > 0.0)) {
    throw std::invalid_argument("synthesize_spectrum: linewidth must be > 0");
  }
  if (truth.n_points < 2) {
    throw std::invalid_argument("synthesize_spectrum: need >= 2 grid points");
  }

  const std::vector<Line> lines = transition_lines(truth);
  double lo = lines.front().center_uev, hi = lines.front().center_uev;
  for (const Line& l : lines) {
    lo = std::min(lo, l.center_uev);
    hi = std::max(hi, l.center_uev);
  }
  const double mid = 0.5 * (lo + hi);
  double span = truth.span_uev;
  if (!(span > 0.0)) span = (hi - lo) + 12.0 * truth.fwhm_uev;

  SpectrumData s;
  s.polarization = pol;
  s.b_field_tesla = truth.b_tesla;
  s.energy_uev.resize(truth.n_points);
  s.counts.resize(truth.n_points);
  const double step = span / (truth.n_points - 1);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < truth.n_points; ++i) {
    const double e = mid - 0.5 * span + i * step;
    double model = truth.background;
    for (const Line& l : lines) {
      if (pol == Polarization::kUnpolarized || l.pol == pol) {
        model += l.amplitude * lorentzian_unit(e, l.center_uev, truth.fwhm_uev);
      }
    }
    s.energy_uev[i] = e;
    if (noise == NoiseModel::kPoisson) {
      std::poisson_distribution<long> dist(model);
      s.counts[i] = model > 0.0 ? static_cast<double>(dist(rng)) : 0.0;
    } else {
      s.counts[i] = model;
    }
  }
  return s;
}

}  // namespace spinpump
