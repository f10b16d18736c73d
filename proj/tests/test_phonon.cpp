#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qdsps/phonon.hpp"
#include "qdsps/pulses.hpp"

using namespace qdsps;

TEST(SpectralFunction, Values) {
  const PhononParams p;
  EXPECT_EQ(spectral_function(0.0, p), 0.0);
  const double wb = 0.9 / 0.6582119569;
  EXPECT_NEAR(spectral_function(wb, p), 0.03 * wb * wb * wb * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(spectral_function(wb, p), 0.0465, 5e-4);
  EXPECT_THROW(spectral_function(-1.0, p), InvalidInput);
}

TEST(SpectralFunction, MaximumAtRootThreeOmegaB) {
  // Golden-section search on J, compared with the stationary point of w^3 e^{-w^2/2wb^2}.
  const PhononParams p;
  double a = 0.1 * p.omega_b, b = 5.0 * p.omega_b;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200; ++i) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (spectral_function(c, p) > spectral_function(d, p)) b = d;
    else a = c;
  }
  EXPECT_NEAR(0.5 * (a + b), std::sqrt(3.0) * p.omega_b, 1e-7);
}

TEST(Rates, ZeroDriveGivesZero) {
  const PhononParams p;
  const auto r = phonon_rates(0.0, 3.0, p);
  EXPECT_EQ(r.dephasing, 0.0);
  EXPECT_EQ(r.excitation, 0.0);
  GridOptions o{5.0, 0.01};
  auto g = build_dichromatic({1.0, 0.0, 0.0, 0.0}, QubitParams{}, o);
  const auto tr = rates_along_pulse(g, p);
  EXPECT_EQ(tr.peak_dephasing(), 0.0);
  EXPECT_EQ(tr.peak_excitation(), 0.0);
}

TEST(Rates, MatchPrintedFormulas) {
  // Direct evaluation with coth and J, independent of the rewritten forms.
  const PhononParams p;
  const double a = p.half_inverse_thermal();
  for (double eps : {0.1, 1.0, 3.0}) {
    for (double d : {0.0, 0.5, -2.0, 12.0}) {
      const double er = std::hypot(eps, d);
      const double pd = units::pi * (eps / er) * (eps / er) * spectral_function(er, p) / std::tanh(a * er);
      const double up = 0.25 * units::pi * (eps / er) * spectral_function(er, p);
      const auto r = phonon_rates(eps, d, p);
      EXPECT_NEAR(r.dephasing, pd, 1e-12 * (1.0 + pd));
      EXPECT_NEAR(r.excitation, up, 1e-12 * (1.0 + up));
      RateOptions sq;
      sq.excitation_exponent = 2;
      EXPECT_NEAR(phonon_rates(eps, d, p, sq).excitation, up * eps / er, 1e-12 * (1.0 + up));
    }
  }
}

TEST(Rates, NonNegativeAndSignInvariant) {
  const PhononParams p;
  std::mt19937_64 eng(11);
  std::normal_distribution<double> n(0.0, 3.0);
  EnvelopeGrid g;
  g.t0 = 0.0;
  g.dt = 0.01;
  for (int i = 0; i < 500; ++i) {
    g.env.push_back({n(eng), n(eng)});
    g.nominal_detuning.push_back(n(eng));
  }
  const auto a = rates_along_pulse(g, p);
  for (auto& v : g.env) v = -v;
  const auto b = rates_along_pulse(g, p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GE(a.gamma_pd[i], 0.0);
    EXPECT_GE(a.gamma_up[i], 0.0);
    EXPECT_EQ(a.gamma_pd[i], b.gamma_pd[i]);
    EXPECT_EQ(a.gamma_up[i], b.gamma_up[i]);
  }
}

TEST(Rates, VanishAtLargeDetuning) {
  const PhononParams p;
  double last_pd = 1e9, last_up = 1e9;
  for (double d : {2.0, 5.0, 10.0, 20.0, 40.0}) {
    const auto r = phonon_rates(1.0, d, p);
    EXPECT_LT(r.dephasing, last_pd);
    EXPECT_LT(r.excitation, last_up);
    last_pd = r.dephasing, last_up = r.excitation;
  }
  EXPECT_LT(last_pd, 1e-100);
}

TEST(Rates, SeriesBranchContinuous) {
  const PhononParams p;
  const double a = p.half_inverse_thermal();
  const double thr = 1e-6 * p.omega_b;
  for (double x : {thr * (1 - 1e-9), thr, thr * (1 + 1e-9)}) {
    const double series = detail::x_coth(x, a, 1.0);  // always series
    const double direct = x / std::tanh(a * x);
    EXPECT_NEAR(series, direct, 1e-9 * direct);
    EXPECT_NEAR(detail::x_coth(x, a, thr), direct, 1e-9 * direct);
  }
  // Finite limit of the dephasing rate as eps_R -> 0: pi alpha eps^2 2 k_B T / hbar.
  const double eps = 1e-9;
  EXPECT_NEAR(phonon_rates(eps, 0.0, p).dephasing, units::pi * p.alpha_ph * eps * eps / a, 1e-9 * eps * eps);
}

TEST(Rates, PresetMagnitudes) {
  const PhononParams p;
  const QubitParams q;
  const auto sup = rates_along_pulse(build_envelope(preset_params(Preset::super_pulse), q), p);
  EXPECT_LT(std::max(sup.peak_dephasing(), sup.peak_excitation()), 1e-12);
  const auto lng = rates_along_pulse(build_envelope(preset_params(Preset::long_dichromatic), q), p);
  EXPECT_GT(units::rate_ps_to_ghz(lng.peak_dephasing()), 100.0);
}

TEST(PolaronShift, Values) {
  PhononParams p;
  EXPECT_NEAR(polaron_shift(p), 0.03 * std::pow(0.9 / 0.6582119569, 3) * std::sqrt(units::pi / 2.0), 1e-15);
  EXPECT_NEAR(polaron_shift(p), 0.0961, 5e-4);
  const double base = polaron_shift(p);
  p.omega_b *= 2.0;
  EXPECT_NEAR(polaron_shift(p), 8.0 * base, 1e-12);
  p.alpha_ph = 0.0;
  EXPECT_EQ(polaron_shift(p), 0.0);
}

TEST(FranckCondon, Values) {
  PhononParams p;
  EXPECT_NEAR(franck_condon(p), 0.96, 0.005);
  EXPECT_NEAR(indistinguishability_cap(p), 0.849, 0.02);
  EXPECT_NEAR(indistinguishability_cap(p), std::pow(franck_condon(p), 4), 1e-15);
  PhononParams z = p;
  z.alpha_ph = 0.0;
  EXPECT_EQ(franck_condon(z), 1.0);
  EXPECT_EQ(indistinguishability_cap(z), 1.0);
}

TEST(FranckCondon, ZeroTemperatureClosedForm) {
  // At T = 0, coth -> 1 and int_0^inf alpha w e^{-w^2/2wb^2} dw = alpha wb^2.
  PhononParams p;
  p.temperature = 0.0;
  EXPECT_NEAR(franck_condon_exponent(p), 0.5 * p.alpha_ph * p.omega_b * p.omega_b, 1e-10);
  PhononParams cold = p;
  cold.temperature = 1e-3;
  EXPECT_NEAR(franck_condon(cold), franck_condon(p), 1e-9);
}

TEST(FranckCondon, MonotoneInTemperatureAndCoupling) {
  PhononParams p;
  double last = 2.0;
  for (double T : {0.5, 2.0, 4.0, 8.0, 20.0}) {
    p.temperature = T;
    EXPECT_LT(franck_condon(p), last);
    last = franck_condon(p);
  }
  p.temperature = 4.0;
  last = 2.0;
  for (double a : {0.0, 0.01, 0.03, 0.06}) {
    p.alpha_ph = a;
    const double b = franck_condon(p);
    EXPECT_LT(b, last);
    last = b;
  }
}
