#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qdsps/error.hpp"
#include "qdsps/fft.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/pulses.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

/// Power spectrum on a uniform frequency axis (omega - omega0, rad/ps),
/// normalized to unit integral.
struct SpectralDensity {
  std::vector<double> omega;
  std::vector<double> power;

  std::size_t size() const { return omega.size(); }
  double step() const { return omega.size() > 1 ? omega[1] - omega[0] : 0.0; }
  double peak() const { return power.empty() ? 0.0 : *std::max_element(power.begin(), power.end()); }
  double value_at(double w) const {
    if (omega.size() < 2) return 0.0;
    return interp_uniform(power, omega.front(), step(), w, 0.0);
  }
};

inline double trapezoid(const std::vector<double>& y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

struct SpectrumOptions {
  /// Target frequency resolution (rad/ps); sets the zero padding.
  double resolution = 1e-4;
  /// Allow decimating an oversampled envelope before the transform.
  bool decimate = true;
};

/// Unnormalized complex spectrum F(nu) = sum_j env(t_j) exp(+i nu t_j) dt on
/// the frame axis nu (ascending), plus the qubit-relative axis offset.
struct RawSpectrum {
  std::vector<double> nu;
  std::vector<cplx> amplitude;
  double dt = 0.0;
  /// omega - omega0 = nu - frame_detuning.
  double offset = 0.0;

  double step() const { return nu.size() > 1 ? nu[1] - nu[0] : 0.0; }
};

namespace detail {

inline void require_decayed_edges(const EnvelopeGrid& g) {
  const double peak = g.peak_magnitude();
  require(peak > 0.0, "spectrum: envelope is identically zero");
  const double edge = std::max(std::abs(g.env.front()), std::abs(g.env.back()));
  require(edge <= 1e-6 * peak, "spectrum: envelope not decayed at the window edges");
}

inline RawSpectrum transform_samples(const std::vector<cplx>& x, double t0, double dt, std::size_t n_pad) {
  std::vector<cplx> buf(n_pad, cplx{});
  std::copy(x.begin(), x.end(), buf.begin());
  auto spec = fft::sum_plus(buf);
  RawSpectrum r;
  r.dt = dt;
  r.nu.resize(n_pad);
  r.amplitude.resize(n_pad);
  // Ascending order: negative bins first.
  const std::size_t half = (n_pad + 1) / 2;
  for (std::size_t m = 0; m < n_pad; ++m) {
    const std::size_t k = (m + half) % n_pad;
    const double nu = fft::bin_frequency(k, n_pad, dt);
    r.nu[m] = nu;
    // Shift the time origin from sample 0 to t0.
    r.amplitude[m] = spec[k] * dt * std::polar(1.0, nu * t0);
  }
  return r;
}

}  // namespace detail

inline RawSpectrum raw_spectrum(const EnvelopeGrid& g, const SpectrumOptions& opt = {}) {
  g.validate();
  detail::require_decayed_edges(g);
  require(opt.resolution > 0.0, "spectrum: resolution must be positive");

  std::size_t stride = 1;
  if (opt.decimate) {
    // Find the band that holds the envelope's spectral content and keep
    // only enough samples for it.
    const auto probe = detail::transform_samples(g.env, g.t0, g.dt, fft::next_pow2(g.size()));
    double pmax = 0.0;
    for (const auto& a : probe.amplitude) pmax = std::max(pmax, std::norm(a));
    double extent = 0.0;
    for (std::size_t m = 0; m < probe.nu.size(); ++m)
      if (std::norm(probe.amplitude[m]) > 1e-16 * pmax) extent = std::max(extent, std::abs(probe.nu[m]));
    extent = std::max(extent, probe.step());
    const double dt_max = units::pi / (1.5 * extent);
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(dt_max / g.dt));
  }
  std::vector<cplx> x;
  x.reserve(g.size() / stride + 1);
  // Centre the decimated samples on the grid midpoint for symmetry.
  const std::size_t first = ((g.size() - 1) % stride) / 2;
  for (std::size_t i = first; i < g.size(); i += stride) x.push_back(g.env[i]);
  const double dt = g.dt * static_cast<double>(stride);
  const double t0 = g.time(first);

  const auto need = static_cast<std::size_t>(std::ceil(units::two_pi / (opt.resolution * dt)));
  const std::size_t n_pad = fft::next_pow2(std::max(need, 2 * x.size()));
  auto r = detail::transform_samples(x, t0, dt, n_pad);
  r.offset = -g.frame_detuning;
  return r;
}

/// Unit-normalized power spectrum of the drive on the omega - omega0 axis.
inline SpectralDensity pulse_spectrum(const EnvelopeGrid& g, const SpectrumOptions& opt = {}) {
  const auto r = raw_spectrum(g, opt);
  SpectralDensity s;
  s.omega.resize(r.nu.size());
  s.power.resize(r.nu.size());
  for (std::size_t m = 0; m < r.nu.size(); ++m) {
    s.omega[m] = r.nu[m] + r.offset;
    s.power[m] = std::norm(r.amplitude[m]);
  }
  const double norm = trapezoid(s.power, s.step());
  require(norm > 0.0, "spectrum: zero spectral power");
  for (auto& p : s.power) p /= norm;
  return s;
}

/// Lorentzian emission line, unit area, FWHM `fwhm` (rad/ps).
struct EmissionLine {
  double center = 0.0;
  double fwhm = units::rate_ghz_to_ps(1.0);

  double density(double w) const {
    const double h = 0.5 * fwhm;
    const double x = w - center;
    return (h / units::pi) / (x * x + h * h);
  }
  /// Antiderivative of density.
  double cdf(double w) const { return std::atan((w - center) / (0.5 * fwhm)) / units::pi; }
  /// Antiderivative of (w - center) * density.
  double first_moment_primitive(double w) const {
    const double h = 0.5 * fwhm;
    const double x = w - center;
    return (h / (2.0 * units::pi)) * std::log(x * x + h * h);
  }

  SpectralDensity sample(const std::vector<double>& omega) const {
    SpectralDensity s;
    s.omega = omega;
    s.power.resize(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) s.power[i] = density(omega[i]);
    return s;
  }
};

/// Emission line of the bare qubit: centred on omega0, FWHM gamma.
inline EmissionLine emission_line(const QubitParams& q) { return {0.0, q.gamma}; }

/// Overlap O = int P(w) S(w) dw / int S(w) dw with the drive spectrum scaled
/// to unit peak, so that O lies in [0,1]. The Lorentzian is integrated
/// exactly against the piecewise-linear spectrum; outside the sampled band
/// the drive power is taken as zero.
inline double overlap_measure(const SpectralDensity& s, const EmissionLine& line) {
  require(s.size() >= 2, "overlap: spectrum needs at least two samples");
  require(line.fwhm > 0.0, "overlap: emission FWHM must be positive");
  const double pk = s.peak();
  require(pk > 0.0, "overlap: zero drive spectrum");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double a = s.omega[i], b = s.omega[i + 1];
    const double pa = s.power[i] / pk, pb = s.power[i + 1] / pk;
    if (pa == 0.0 && pb == 0.0) continue;
    const double slope = (pb - pa) / (b - a);
    // p(w) = pa + slope (w - a) = (pa - slope (a - c)) + slope (w - c)
    const double c0 = pa - slope * (a - line.center);
    acc += c0 * (line.cdf(b) - line.cdf(a)) +
           slope * (line.first_moment_primitive(b) - line.first_moment_primitive(a));
  }
  return std::clamp(acc, 0.0, 1.0);
}

/// Sampled variant: both spectra on (possibly different) uniform grids; the
/// emission is interpolated onto the drive grid.
inline double overlap_measure(const SpectralDensity& s, const SpectralDensity& emission) {
  require(s.size() >= 2 && emission.size() >= 2, "overlap: spectra need at least two samples");
  const double pk = s.peak();
  require(pk > 0.0, "overlap: zero drive spectrum");
  std::vector<double> prod(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) prod[i] = s.power[i] / pk * emission.value_at(s.omega[i]);
  const double denom = trapezoid(emission.power, emission.step());
  require(denom > 0.0, "overlap: zero emission spectrum");
  return std::clamp(trapezoid(prod, s.step()) / denom, 0.0, 1.0);
}

}  // namespace qdsps
