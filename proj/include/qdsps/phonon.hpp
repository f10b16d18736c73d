#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qdsps/error.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

/// LA-phonon bath with superohmic spectral function J(w) = alpha w^3 exp(-w^2/2wb^2).
struct PhononParams {
  double alpha_ph = 0.03;
  double omega_b = units::mev_to_rad_ps(0.9);
  double temperature = 4.0;

  void validate(bool allow_zero_temperature = false) const {
    require(alpha_ph >= 0.0 && std::isfinite(alpha_ph), "phonon: alpha_ph must be non-negative");
    require(omega_b > 0.0 && std::isfinite(omega_b), "phonon: omega_b must be positive");
    require(allow_zero_temperature ? temperature >= 0.0 : temperature > 0.0,
            "phonon: temperature must be positive");
  }

  /// hbar / (2 k_B T) in ps.
  double half_inverse_thermal() const {
    return units::hbar / (2.0 * units::thermal_energy(temperature));
  }
};

inline double spectral_function(double omega, const PhononParams& p) {
  require(omega >= 0.0, "spectral_function: omega must be non-negative");
  return p.alpha_ph * omega * omega * omega * std::exp(-0.5 * omega * omega / (p.omega_b * p.omega_b));
}

namespace detail {

/// x coth(a x), continued to 1/a at x = 0. Series below `threshold`.
inline double x_coth(double x, double a, double threshold) {
  if (x < threshold) {
    const double ax2 = a * x * x;
    return 1.0 / a + ax2 / 3.0 - a * ax2 * ax2 / 45.0;
  }
  return x / std::tanh(a * x);
}

}  // namespace detail

struct RateOptions {
  /// Power of (|eps|/eps_R) in the excitation rate; 1 as printed, 2 for the squared variant.
  int excitation_exponent = 1;
  /// Use the grid's instantaneous detuning trace; otherwise the frame detuning.
  bool use_nominal_detuning = true;
  /// Relative switchover (in units of omega_b) to the small-eps_R series.
  double series_threshold = 1e-6;
};

/// Instantaneous rates (rad/ps) for drive magnitude eps and detuning delta.
struct InstantRates {
  double dephasing = 0.0;
  double excitation = 0.0;
};

inline InstantRates phonon_rates(double eps_abs, double delta, const PhononParams& p, const RateOptions& opt = {}) {
  const double er = std::hypot(eps_abs, delta);
  InstantRates r;
  if (eps_abs == 0.0 || p.alpha_ph == 0.0) return r;
  const double a = p.half_inverse_thermal();
  const double cutoff = std::exp(-0.5 * er * er / (p.omega_b * p.omega_b));
  // pi (eps/eR)^2 J(eR) coth(a eR) = pi alpha eps^2 e^{..} eR coth(a eR)
  r.dephasing = units::pi * p.alpha_ph * eps_abs * eps_abs * cutoff *
                detail::x_coth(er, a, opt.series_threshold * p.omega_b);
  // (pi/4) (eps/eR)^n alpha eR^3 e^{..}
  const double ratio = eps_abs / er;
  const double weight = opt.excitation_exponent == 2 ? ratio * ratio : ratio;
  r.excitation = 0.25 * units::pi * weight * p.alpha_ph * er * er * er * cutoff;
  return r;
}

/// Phonon rates sampled on the envelope grid (interpolated linearly by solvers).
struct PhononRateTrace {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> gamma_pd;
  std::vector<double> gamma_up;

  std::size_t size() const { return gamma_pd.size(); }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double dephasing_at(double t) const { return interp_uniform(gamma_pd, t0, dt, t, 0.0); }
  double excitation_at(double t) const { return interp_uniform(gamma_up, t0, dt, t, 0.0); }
  double peak_dephasing() const {
    double m = 0.0;
    for (double v : gamma_pd) m = std::max(m, v);
    return m;
  }
  double peak_excitation() const {
    double m = 0.0;
    for (double v : gamma_up) m = std::max(m, v);
    return m;
  }
};

inline PhononRateTrace rates_along_pulse(const EnvelopeGrid& e, const PhononParams& p, const RateOptions& opt = {}) {
  e.validate();
  p.validate();
  require(opt.excitation_exponent == 1 || opt.excitation_exponent == 2, "phonon: excitation exponent must be 1 or 2");
  PhononRateTrace tr;
  tr.t0 = e.t0;
  tr.dt = e.dt;
  tr.gamma_pd.resize(e.size());
  tr.gamma_up.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double delta = opt.use_nominal_detuning ? e.nominal_detuning[i] : e.frame_detuning;
    const auto r = phonon_rates(std::abs(e.env[i]), delta, p, opt);
    tr.gamma_pd[i] = r.dephasing;
    tr.gamma_up[i] = r.excitation;
  }
  return tr;
}

inline double polaron_shift(const PhononParams& p) {
  return p.alpha_ph * p.omega_b * p.omega_b * p.omega_b * std::sqrt(0.5 * units::pi);
}

/// Exponent 0.5 int_0^inf J(w)/w^2 coth(hbar w / 2 k_B T) dw of the Franck-Condon factor.
inline double franck_condon_exponent(const PhononParams& p) {
  p.validate(true);
  if (p.alpha_ph == 0.0) return 0.0;
  const double wb = p.omega_b;
  const bool zero_t = p.temperature == 0.0;
  const double a = zero_t ? 0.0 : p.half_inverse_thermal();
  auto f = [&](double w) {
    const double g = p.alpha_ph * std::exp(-0.5 * w * w / (wb * wb));
    if (zero_t) return g * w;
    return g * detail::x_coth(w, a, 1e-8 * wb);
  };
  // The Gaussian cutoff makes the integrand negligible beyond 14 wb.
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 14.0 * wb, 20, 1e-13, &err);
  return 0.5 * integral;
}

inline double franck_condon(const PhononParams& p) { return std::exp(-franck_condon_exponent(p)); }

/// Sideband limit on the unfiltered indistinguishability, <B>^4.
inline double indistinguishability_cap(const PhononParams& p) {
  const double b = franck_condon(p);
  return b * b * b * b;
}

}  // namespace qdsps
