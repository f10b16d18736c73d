#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qdsps/pulses.hpp"
#include "qdsps/spectrum.hpp"

using namespace qdsps;

namespace {

double time_energy(const EnvelopeGrid& g) {
  double e = 0.0;
  for (const auto& v : g.env) e += std::norm(v);
  return e * g.dt;
}

double spectral_energy(const RawSpectrum& r) {
  double e = 0.0;
  for (const auto& a : r.amplitude) e += std::norm(a);
  return e * r.step() / units::two_pi;
}

EnvelopeGrid preset_grid(Preset p) { return build_envelope(preset_params(p), QubitParams{}); }

}  // namespace

TEST(Spectrum, GaussianInGaussianOut) {
  const double tp = 1.7;
  const auto g = build_dichromatic({tp, 0.0, 0.0, 1.0}, QubitParams{});
  const auto s = pulse_spectrum(g);
  // |F|^2 ~ exp(-w^2 tp^2): unit area, variance 1/(2 tp^2).
  std::vector<double> m2(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) m2[i] = s.omega[i] * s.omega[i] * s.power[i];
  EXPECT_NEAR(trapezoid(s.power, s.step()), 1.0, 1e-9);
  EXPECT_NEAR(trapezoid(m2, s.step()), 1.0 / (2.0 * tp * tp), 1e-6);
  EXPECT_NEAR(s.value_at(0.3), tp / std::sqrt(units::pi) * std::exp(-0.09 * tp * tp), 1e-4);
}

TEST(Spectrum, UnitIntegralForPresets) {
  for (auto p : kAllPresets) {
    const auto s = pulse_spectrum(preset_grid(p));
    EXPECT_NEAR(trapezoid(s.power, s.step()), 1.0, 1e-9) << preset_name(p);
    for (double v : s.power) ASSERT_GE(v, 0.0);
  }
}

TEST(Spectrum, ParsevalForPresets) {
  for (auto p : kAllPresets) {
    const auto g = preset_grid(p);
    const double et = time_energy(g);
    EXPECT_NEAR(spectral_energy(raw_spectrum(g)), et, 1e-8 * et) << preset_name(p);
  }
}

TEST(Spectrum, NarpHoleIsEmptyAtResonance) {
  const auto s = pulse_spectrum(preset_grid(Preset::narp));
  EXPECT_LE(s.value_at(0.0), 1e-12 * s.peak());
}

TEST(Spectrum, SuperHasLobesAtBothDetunings) {
  const auto sp = std::get<SuperParams>(preset_params(Preset::super_pulse));
  const auto s = pulse_spectrum(preset_grid(Preset::super_pulse));
  auto local_peak = [&](double centre, double half) {
    double best = -1.0, at = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (std::abs(s.omega[i] - centre) < half && s.power[i] > best) best = s.power[i], at = s.omega[i];
    return at;
  };
  // The first tone is exactly Gaussian and lands on -Delta1; the second is
  // pulled slightly by the overlapping first lobe.
  EXPECT_NEAR(local_peak(-sp.delta1, 3.0), -sp.delta1, 0.01);
  EXPECT_NEAR(local_peak(-sp.delta2, 3.0), -sp.delta2, 0.15);
  EXPECT_LT(s.value_at(0.0), 1e-20 * s.peak());
}

TEST(Spectrum, UndecayedEdgesRejected) {
  EnvelopeGrid g = build_dichromatic({1.0, 0.0, 0.0, 1.0}, QubitParams{}, GridOptions{8.0, 0.01});
  g.env.resize(g.size() / 2);
  g.nominal_detuning.resize(g.size());
  EXPECT_THROW(pulse_spectrum(g), InvalidInput);
}

TEST(Overlap, MatchesIndependentQuadrature) {
  // Independent oracle: analytic dichromatic spectrum (peak-normalized) against
  // the unit-area Lorentzian of FWHM gamma, by adaptive quadrature.
  for (auto pr : {Preset::long_dichromatic, Preset::short_dichromatic}) {
    const auto p = std::get<DichromaticParams>(preset_params(pr));
    auto amp = [&](double w) {
      return std::exp(-0.5 * (w - p.delta) * (w - p.delta) * p.t_p * p.t_p) +
             std::exp(-0.5 * (w + p.delta) * (w + p.delta) * p.t_p * p.t_p);
    };
    double pk = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double w = -2.0 * p.delta + 4.0 * p.delta * i / 20000.0;
      pk = std::max(pk, amp(w) * amp(w));
    }
    const double h = 0.5 * QubitParams{}.gamma;
    auto f = [&](double w) { return amp(w) * amp(w) / pk * (h / units::pi) / (w * w + h * h); };
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double W = p.delta + 12.0 / p.t_p;
    // Break points at the Lorentzian core and at both drive lines.
    const double c = 50.0 * h;
    const double cuts[] = {-W, -p.delta, -c, 0.0, c, p.delta, W};
    double ref = 0.0;
    for (int k = 0; k + 1 < 7; ++k) ref += Q::integrate(f, cuts[k], cuts[k + 1], 15, 1e-11);
    const double got = overlap_measure(pulse_spectrum(preset_grid(pr)), emission_line(QubitParams{}));
    EXPECT_NEAR(got, ref, 2e-3 * ref) << preset_name(pr);
  }
}

TEST(Overlap, BoundedAndSuperIsNegligible) {
  for (auto p : kAllPresets) {
    const double o = overlap_measure(pulse_spectrum(preset_grid(p)), emission_line(QubitParams{}));
    EXPECT_GE(o, 0.0);
    EXPECT_LE(o, 1.0);
  }
  // Only the Lorentzian tail reaches the SUPER lobes 8 meV away.
  EXPECT_LT(overlap_measure(pulse_spectrum(preset_grid(Preset::super_pulse)), emission_line(QubitParams{})), 1e-5);
}

TEST(Overlap, DecreasesWithDichromaticSeparation) {
  double last = 2.0;
  // Below delta*t_p = 1 the two lines merge into one peak at resonance.
  for (double x : {1.5, 2.0, 2.5, 3.0, 3.5, 4.0}) {
    DichromaticParams p{3.0, x / 3.0, 0.0, 0.0};
    p.omega0_amp = calibrate_dichromatic_amplitude(p).value;
    const double o = overlap_measure(pulse_spectrum(build_dichromatic(p, QubitParams{})), emission_line(QubitParams{}));
    EXPECT_LT(o, last) << x;
    last = o;
  }
}

TEST(Overlap, SelfOverlapDefinition) {
  const auto s = pulse_spectrum(build_dichromatic({0.5, 0.0, 0.0, 1.0}, QubitParams{}));
  std::vector<double> sq(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) sq[i] = s.power[i] * s.power[i];
  const double ref = trapezoid(sq, s.step()) / s.peak() / trapezoid(s.power, s.step());
  EXPECT_NEAR(overlap_measure(s, s), ref, 1e-12);
}

TEST(Overlap, AnalyticAndSampledLorentzianAgree) {
  const auto s = pulse_spectrum(preset_grid(Preset::short_dichromatic));
  const auto line = emission_line(QubitParams{});
  // A sampled Lorentzian on the drive grid misses its far tails; compare on a
  // window where those are below the tolerance.
  SpectralDensity L = line.sample(s.omega);
  const double a = overlap_measure(s, line);
  const double b = overlap_measure(s, L) * trapezoid(L.power, L.step());
  EXPECT_NEAR(a, b, 1e-3 * a);
}
