#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qdsps/error.hpp"
#include "qdsps/fft.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

/// Two-level emitter. The frame is always referenced to omega0, so omega0
/// itself only enters through detunings.
struct QubitParams {
  double omega0 = 0.0;
  /// Radiative rate into the waveguide (ps^-1); 1 GHz = 10^9 s^-1 by default.
  double gamma = units::rate_ghz_to_ps(1.0);

  void validate() const { require(gamma > 0.0 && std::isfinite(gamma), "qubit: gamma must be positive"); }
};

/// Sampling controls shared by all builders. Zero means "choose automatically".
struct GridOptions {
  double half_window = 0.0;
  double dt = 0.0;
};

/// Solver steps per fastest period; a step must satisfy dt <= 2 pi / (50 f).
inline constexpr double kStabilityFraction = 0.02;

/// Envelope grids are sampled at half the solver step so that every RK4
/// stage of a default-sized step lands on a sample.
inline double default_grid_dt(double max_frequency) {
  return 0.5 * kStabilityFraction * units::two_pi / std::max(max_frequency, 1e-6);
}

// ---------------------------------------------------------------------------
// Dichromatic

struct DichromaticParams {
  double t_p = 1.0;
  /// Symmetric detuning delta of the two tones (rad/ps).
  double delta = 0.0;
  double phi = 0.0;
  double omega0_amp = 1.0;

  void validate() const {
    require(t_p > 0.0, "dichromatic: t_p must be positive");
    require(delta >= 0.0, "dichromatic: delta must be non-negative");
    require(std::isfinite(omega0_amp), "dichromatic: amplitude must be finite");
  }
};

struct CalibratedAmplitude {
  double value = 0.0;
  /// Set when the amplitude exceeds the 10^3 rad/ps sanity bound.
  bool flagged = false;
};

inline constexpr double kAmplitudeSanityBound = 1e3;

/// Amplitude giving a pulse area of exactly pi for the beat envelope
/// Omega0 exp(-t^2/2t_p^2) cos(delta t + phi/2).
inline CalibratedAmplitude calibrate_dichromatic_amplitude(const DichromaticParams& p) {
  require(p.t_p > 0.0, "dichromatic: t_p must be positive");
  const double c = std::cos(0.5 * p.phi);
  require(std::abs(c) > 1e-300, "dichromatic: cos(phi/2) vanishes, no finite amplitude");
  const double damp = std::exp(-0.5 * p.delta * p.delta * p.t_p * p.t_p);
  require(damp > 1e-300, "dichromatic: delta*t_p too large (exp underflow)");
  const double value = units::pi / (std::sqrt(units::two_pi) * p.t_p * c * damp);
  return {value, !(std::abs(value) <= kAmplitudeSanityBound)};
}

/// Exact integral of the (complex-phase-stripped) dichromatic envelope.
inline double dichromatic_pulse_area(const DichromaticParams& p) {
  return p.omega0_amp * std::sqrt(units::two_pi) * p.t_p * std::cos(0.5 * p.phi) *
         std::exp(-0.5 * p.delta * p.delta * p.t_p * p.t_p);
}

inline cplx dichromatic_envelope(const DichromaticParams& p, double t) {
  const double g = p.omega0_amp * std::exp(-0.5 * t * t / (p.t_p * p.t_p));
  return g * std::cos(p.delta * t + 0.5 * p.phi) * std::polar(1.0, -0.5 * p.phi);
}

namespace detail {

inline std::size_t sample_count(double half_window, double dt) {
  return static_cast<std::size_t>(std::ceil(2.0 * half_window / dt)) + 1;
}

template <class F>
EnvelopeGrid sample_envelope(double half_window, double dt, F&& f) {
  EnvelopeGrid g;
  const std::size_t n = sample_count(half_window, dt);
  g.dt = dt;
  g.t0 = -0.5 * dt * static_cast<double>(n - 1);
  g.env.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.env[i] = f(g.time(i));
  return g;
}

inline double grid_energy(const EnvelopeGrid& g) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double w = (i == 0 || i + 1 == g.size()) ? 0.5 : 1.0;
    e += w * std::norm(g.env[i]);
  }
  return e * g.dt;
}

}  // namespace detail

inline EnvelopeGrid build_dichromatic(const DichromaticParams& p, const QubitParams& q,
                                      const GridOptions& opt = {}) {
  p.validate();
  q.validate();
  const double half = opt.half_window > 0.0 ? opt.half_window : 8.0 * p.t_p;
  const double dt =
      opt.dt > 0.0 ? opt.dt : default_grid_dt(std::abs(p.omega0_amp) + p.delta + 1.0 / p.t_p);
  auto g = detail::sample_envelope(half, dt, [&](double t) { return dichromatic_envelope(p, t); });

  // Closed-form total energy of Omega0^2 exp(-t^2/t_p^2) cos^2(delta t + phi/2).
  const double total = p.omega0_amp * p.omega0_amp * std::sqrt(units::pi) * p.t_p * 0.5 *
                       (1.0 + std::cos(p.phi) * std::exp(-p.delta * p.delta * p.t_p * p.t_p));
  if (total > 0.0)
    require(detail::grid_energy(g) >= (1.0 - 1e-6) * total,
            "dichromatic: window holds less than 1-1e-6 of the pulse energy");

  g.frame_detuning = 0.0;
  g.nominal_detuning.assign(g.size(), 0.0);
  g.scheme = SchemeTag::dichromatic;
  g.width = p.t_p;
  return g;
}

// ---------------------------------------------------------------------------
// NARP: chirped Gaussian with a spectral hole at the qubit frequency.

struct NarpParams {
  /// Envelope width of the chirped pulse Omega0 exp(-t^2/2t_p^2) exp(-i alpha t^2/2).
  double t_p = 1.0;
  double omega0_amp = 1.0;
  /// Temporal chirp alpha (rad/ps^2); instantaneous detuning is -alpha t.
  double alpha = 0.0;
  /// Half width of the spectral hole (2 delta is its FWHM), rad/ps. Zero disables the hole.
  double delta = 0.0;
  /// FFT grid: half width (ps) and sample count; zero picks defaults.
  double fft_half_window = 0.0;
  std::size_t fft_samples = 0;

  void validate() const {
    require(t_p > 0.0, "narp: t_p must be positive");
    require(delta >= 0.0, "narp: delta must be non-negative");
    require(std::isfinite(alpha) && std::isfinite(omega0_amp), "narp: non-finite parameter");
  }
};

/// Adiabaticity figures: ARP needs |alpha| t_p^2 >> 1 and Omega0^2 t_p^2 >> |alpha| t_p^2.
struct NarpDiagnostics {
  double chirp_product = 0.0;
  double area_product = 0.0;
  double spectral_chirp = 0.0;
  /// Fraction of pulse energy removed by the hole.
  double removed_energy_fraction = 0.0;
  double fft_half_window = 0.0;
  std::size_t fft_samples = 0;
};

inline double narp_amplitude_mask(double nu, double delta) {
  if (delta <= 0.0) return 1.0;
  return 1.0 - std::exp(-std::numbers::ln2 * nu * nu / (delta * delta));
}

/// Spectral chirp alpha' of the chirped pulse: its spectrum carries phase alpha' nu^2 / 2.
inline double narp_spectral_chirp(double alpha, double t_p) {
  const double t4 = t_p * t_p * t_p * t_p;
  return alpha * t4 / (1.0 + alpha * alpha * t4);
}

inline double narp_spectral_phase(double nu, double spectral_chirp) { return 0.5 * spectral_chirp * nu * nu; }

inline cplx narp_chirped_envelope(const NarpParams& p, double t) {
  return p.omega0_amp * std::exp(-0.5 * t * t / (p.t_p * p.t_p)) * std::polar(1.0, -0.5 * p.alpha * t * t);
}

inline NarpDiagnostics narp_diagnostics(const NarpParams& p) {
  NarpDiagnostics d;
  d.chirp_product = std::abs(p.alpha) * p.t_p * p.t_p;
  d.area_product = p.omega0_amp * p.omega0_amp * p.t_p * p.t_p;
  d.spectral_chirp = narp_spectral_chirp(p.alpha, p.t_p);
  return d;
}

struct NarpBuild {
  EnvelopeGrid grid;
  NarpDiagnostics diagnostics;
};

/// Builds the masked envelope F^-1[F[eps] A] on a long FFT grid and resamples
/// it onto the solver grid as eps(t) - hole(t); the hole term is narrow-band
/// so its linear interpolation is accurate while the chirped part is exact.
inline NarpBuild build_narp_detailed(const NarpParams& p, const QubitParams& q, const GridOptions& opt = {}) {
  p.validate();
  q.validate();
  NarpBuild out;
  out.diagnostics = narp_diagnostics(p);

  const double t4 = std::pow(p.t_p, 4);
  // Spectral amplitude width of the chirped pulse.
  const double sigma_nu = std::sqrt(1.0 + p.alpha * p.alpha * t4) / p.t_p;
  double w_fft = p.fft_half_window;
  if (w_fft <= 0.0) {
    w_fft = 12.0 * p.t_p;
    if (p.delta > 0.0) w_fft = std::max(w_fft, 16.0 * units::pi / p.delta);
  }
  std::size_t n_fft = p.fft_samples;
  if (n_fft == 0) {
    const double dt_need = units::pi / (8.0 * sigma_nu);
    n_fft = std::max<std::size_t>(1u << 16, fft::next_pow2(static_cast<std::size_t>(2.0 * w_fft / dt_need) + 1));
  }
  const double dt_fft = 2.0 * w_fft / static_cast<double>(n_fft);
  if (p.delta > 0.0) {
    const double dnu = units::two_pi / (static_cast<double>(n_fft) * dt_fft);
    require(2.0 * p.delta / dnu >= 32.0, "narp: FFT grid resolves the spectral hole with fewer than 32 samples");
  }
  require(units::pi / dt_fft >= 6.0 * sigma_nu, "narp: FFT grid does not resolve the pulse bandwidth");
  out.diagnostics.fft_half_window = w_fft;
  out.diagnostics.fft_samples = n_fft;

  std::vector<cplx> chirped(n_fft);
  for (std::size_t j = 0; j < n_fft; ++j) chirped[j] = narp_chirped_envelope(p, -w_fft + dt_fft * static_cast<double>(j));
  const auto masked = fft::apply_spectral_mask(chirped, dt_fft, [&](double nu) { return narp_amplitude_mask(nu, p.delta); });

  double peak = 0.0, e_in = 0.0, e_out = 0.0;
  for (std::size_t j = 0; j < n_fft; ++j) {
    peak = std::max(peak, std::abs(masked[j]));
    e_in += std::norm(chirped[j]);
    e_out += std::norm(masked[j]);
  }
  out.diagnostics.removed_energy_fraction = e_in > 0.0 ? 1.0 - e_out / e_in : 0.0;
  const std::size_t edge = std::max<std::size_t>(1, n_fft / 100);
  for (std::size_t j = 0; j < edge; ++j) {
    if (std::abs(masked[j]) > 1e-6 * peak || std::abs(masked[n_fft - 1 - j]) > 1e-6 * peak)
      throw InvalidInput("narp: envelope not decayed at FFT window edges (aliasing)");
  }

  // Hole term on the FFT grid.
  std::vector<cplx> hole(n_fft);
  for (std::size_t j = 0; j < n_fft; ++j) hole[j] = chirped[j] - masked[j];

  // Output window: where the masked envelope is still above 1e-9 of its peak.
  double half = opt.half_window;
  if (half <= 0.0) {
    std::size_t last = n_fft / 2;
    for (std::size_t j = n_fft - 1; j > n_fft / 2; --j) {
      if (std::abs(masked[j]) > 1e-9 * peak) {
        last = j;
        break;
      }
    }
    half = std::max(8.0 * p.t_p, -w_fft + dt_fft * static_cast<double>(last) + 4.0 * dt_fft);
  }
  // Phase-rate bound where the chirped pulse still carries weight (|eps| >= 1e-3 peak).
  const double f_max = std::abs(p.omega0_amp) + std::abs(p.alpha) * p.t_p * 3.72 + 1.0 / p.t_p;
  const double dt = opt.dt > 0.0 ? opt.dt : default_grid_dt(f_max);

  out.grid = detail::sample_envelope(half, dt, [&](double t) {
    return narp_chirped_envelope(p, t) - interp_uniform(hole, -w_fft, dt_fft, t, cplx{});
  });
  out.grid.frame_detuning = 0.0;
  out.grid.nominal_detuning.resize(out.grid.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i) out.grid.nominal_detuning[i] = -p.alpha * out.grid.time(i);
  out.grid.scheme = SchemeTag::narp;
  out.grid.width = p.t_p;
  return out;
}

inline EnvelopeGrid build_narp(const NarpParams& p, const QubitParams& q, const GridOptions& opt = {}) {
  return build_narp_detailed(p, q, opt).grid;
}

// ---------------------------------------------------------------------------
// SUPER: two red-detuned Gaussians whose beat swings the population up.

struct SuperParams {
  double omega1 = 1.0;
  double omega2 = 0.0;
  double t_p1 = 1.0;
  double t_p2 = 1.0;
  /// Detunings Delta_i = omega0 - omega_i (rad/ps).
  double delta1 = 0.0;
  double delta2 = 0.0;
  double tau = 0.0;
  double phi = 0.0;

  void validate() const {
    require(t_p1 > 0.0 && t_p2 > 0.0, "super: pulse widths must be positive");
    require(std::isfinite(omega1) && std::isfinite(omega2) && std::isfinite(delta1) && std::isfinite(delta2) &&
                std::isfinite(tau) && std::isfinite(phi),
            "super: non-finite parameter");
  }
};

/// Envelope in the frame of the first laser.
inline cplx super_envelope(const SuperParams& p, double t) {
  const double s = t - p.tau;
  const cplx e1 = p.omega1 * std::exp(-0.5 * t * t / (p.t_p1 * p.t_p1));
  const cplx e2 = p.omega2 * std::exp(-0.5 * s * s / (p.t_p2 * p.t_p2)) *
                  std::polar(1.0, -(p.delta1 - p.delta2) * t - p.phi);
  return e1 + e2;
}

inline EnvelopeGrid build_super(const SuperParams& p, const QubitParams& q, const GridOptions& opt = {}) {
  p.validate();
  q.validate();
  const double half =
      opt.half_window > 0.0 ? opt.half_window : std::max(8.0 * p.t_p1, 8.0 * p.t_p2 + std::abs(p.tau));
  const double f_max = std::abs(p.omega1) + std::abs(p.omega2) + std::abs(p.delta1) +
                       std::abs(p.delta1 - p.delta2) + 1.0 / std::min(p.t_p1, p.t_p2);
  const double dt = opt.dt > 0.0 ? opt.dt : default_grid_dt(f_max);
  auto g = detail::sample_envelope(half, dt, [&](double t) { return super_envelope(p, t); });
  g.frame_detuning = p.delta1;
  g.nominal_detuning.assign(g.size(), p.delta1);
  g.scheme = SchemeTag::super_pulse;
  g.width = std::max(p.t_p1, p.t_p2);
  return g;
}

/// Both roots of the swing-up detuning condition |Delta1 - Delta2| = sqrt(eps1(0)^2 + Delta1^2).
struct SuperDetuningRoots {
  /// Red-detuned root Delta1 + sqrt(...) (the one the presets use).
  double outer = 0.0;
  /// Delta1 - sqrt(...).
  double inner = 0.0;
};

inline SuperDetuningRoots super_detuning_roots(double delta1, double eps1_peak) {
  const double r = std::hypot(eps1_peak, delta1);
  return {delta1 + r, delta1 - r};
}

/// Second-laser detuning for the swing-up condition, red-detuned root.
inline double super_detuning_condition(double delta1, double eps1_peak) {
  return super_detuning_roots(delta1, eps1_peak).outer;
}

// ---------------------------------------------------------------------------
// Presets

enum class Preset { long_dichromatic, short_dichromatic, narp, super_pulse };

inline constexpr Preset kAllPresets[] = {Preset::long_dichromatic, Preset::short_dichromatic, Preset::narp,
                                         Preset::super_pulse};

constexpr std::string_view preset_name(Preset p) {
  switch (p) {
    case Preset::long_dichromatic: return "long-dichromatic";
    case Preset::short_dichromatic: return "short-dichromatic";
    case Preset::narp: return "narp";
    case Preset::super_pulse: return "super";
  }
  return "?";
}

inline Preset parse_preset(std::string_view name) {
  for (auto p : kAllPresets)
    if (preset_name(p) == name) return p;
  throw InvalidInput("unknown preset '" + std::string(name) + "'");
}

using PulseParams = std::variant<DichromaticParams, NarpParams, SuperParams>;

/// Tabulated dichromatic amplitudes (meV); kept for the area-theorem diagnostic.
inline constexpr double kLongDichromaticTableAmplitudeMeV = 0.314;
inline constexpr double kShortDichromaticTableAmplitudeMeV = 7.842;

/// Preset pulse parameters. Dichromatic amplitudes are area-calibrated to pi.
inline PulseParams preset_params(Preset p) {
  using namespace units;
  switch (p) {
    case Preset::long_dichromatic: {
      DichromaticParams d{74.96, uev_to_rad_ps(26.3), 0.0, 0.0};
      d.omega0_amp = calibrate_dichromatic_amplitude(d).value;
      return d;
    }
    case Preset::short_dichromatic: {
      DichromaticParams d{3.00, uev_to_rad_ps(658.2), 0.0, 0.0};
      d.omega0_amp = calibrate_dichromatic_amplitude(d).value;
      return d;
    }
    case Preset::narp: {
      NarpParams n;
      n.t_p = 1.80;
      n.omega0_amp = mev_to_rad_ps(3.547);
      n.alpha = -1.111;
      n.delta = uev_to_rad_ps(5.3);
      return n;
    }
    case Preset::super_pulse: {
      SuperParams s;
      s.omega1 = mev_to_rad_ps(7.785);
      s.omega2 = mev_to_rad_ps(5.235);
      s.t_p1 = 2.40;
      s.t_p2 = 3.04;
      s.delta1 = mev_to_rad_ps(8.00);
      s.delta2 = mev_to_rad_ps(19.163);
      s.tau = -0.73;
      s.phi = 0.0;
      return s;
    }
  }
  throw InvalidInput("unknown preset");
}

inline EnvelopeGrid build_envelope(const PulseParams& params, const QubitParams& q, const GridOptions& opt = {}) {
  return std::visit(
      [&](const auto& p) -> EnvelopeGrid {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DichromaticParams>) return build_dichromatic(p, q, opt);
        else if constexpr (std::is_same_v<T, NarpParams>) return build_narp(p, q, opt);
        else return build_super(p, q, opt);
      },
      params);
}

/// Shifts the qubit resonance by -shift (red shift) in an already built grid.
inline void apply_resonance_shift(EnvelopeGrid& g, double shift) {
  g.frame_detuning -= shift;
  for (auto& d : g.nominal_detuning) d -= shift;
}

/// Rewrites a phase-carrying envelope as |env| with an explicit detuning
/// trace Delta(t) = Delta_frame + d(arg env)/dt. This is a pure gauge change.
inline EnvelopeGrid to_explicit_detuning(const EnvelopeGrid& g) {
  EnvelopeGrid out = g;
  const std::size_t n = g.size();
  std::vector<double> phase(n);
  for (std::size_t i = 0; i < n; ++i) phase[i] = std::arg(g.env[i]);
  for (std::size_t i = 1; i < n; ++i) {
    double d = phase[i] - phase[i - 1];
    d -= units::two_pi * std::round(d / units::two_pi);
    phase[i] = phase[i - 1] + d;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.env[i] = std::abs(g.env[i]);
    double rate = 0.0;
    if (n > 1) {
      if (i == 0) rate = (phase[1] - phase[0]) / g.dt;
      else if (i + 1 == n) rate = (phase[n - 1] - phase[n - 2]) / g.dt;
      else rate = (phase[i + 1] - phase[i - 1]) / (2.0 * g.dt);
    }
    // env ~ |env| exp(i theta): moving theta into the state adds theta' to the detuning.
    out.nominal_detuning[i] = g.frame_detuning + rate;
  }
  out.explicit_detuning = true;
  return out;
}

}  // namespace qdsps
