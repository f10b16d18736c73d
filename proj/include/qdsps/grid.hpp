#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include "qdsps/error.hpp"

namespace qdsps {

using cplx = std::complex<double>;

enum class SchemeTag { gaussian, dichromatic, narp, super_pulse };

constexpr std::string_view to_string(SchemeTag s) {
  switch (s) {
    case SchemeTag::gaussian: return "gaussian";
    case SchemeTag::dichromatic: return "dichromatic";
    case SchemeTag::narp: return "narp";
    case SchemeTag::super_pulse: return "super";
  }
  return "?";
}

/// Linear interpolation on a uniform grid; `outside` beyond either end.
template <class T>
T interp_uniform(const std::vector<T>& v, double t0, double dt, double t, T outside) {
  if (v.empty()) return outside;
  const double x = (t - t0) / dt;
  const double last = static_cast<double>(v.size() - 1);
  // Tolerate round-off at the end points.
  if (x < -1e-9 || x > last + 1e-9) return outside;
  if (x <= 0.0) return v.front();
  if (x >= last) return v.back();
  const auto i = static_cast<std::size_t>(x);
  const double f = x - static_cast<double>(i);
  return v[i] * (1.0 - f) + v[i + 1] * f;
}

/// Sampled complex drive envelope in a rotating frame. The Hamiltonian in that
/// frame is H/hbar = frame_detuning |e><e| + (env sigma+ + conj(env) sigma-)/2.
/// All four pulse setups compile to this one representation.
struct EnvelopeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<cplx> env;
  /// Delta = omega0 - omega_L of the frame, rad/ps.
  double frame_detuning = 0.0;
  /// Instantaneous detuning Delta(t) seen by the phonon-rate evaluation.
  std::vector<double> nominal_detuning;
  SchemeTag scheme = SchemeTag::gaussian;
  /// When set, the Hamiltonian uses nominal_detuning(t) in place of the
  /// constant frame detuning (chirp carried as a detuning trace).
  bool explicit_detuning = false;
  /// Characteristic pulse width (ps); used for default padding decisions.
  double width = 1.0;

  std::size_t size() const { return env.size(); }
  double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
  double t_end() const { return env.empty() ? t0 : time(env.size() - 1); }
  bool contains(double t) const { return t >= t0 - 1e-9 * dt && t <= t_end() + 1e-9 * dt; }

  std::vector<double> times() const {
    std::vector<double> t(size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
    return t;
  }

  /// Envelope at arbitrary t; zero outside the sampled window.
  cplx envelope_at(double t) const { return interp_uniform(env, t0, dt, t, cplx{}); }
  double detuning_at(double t) const {
    return interp_uniform(nominal_detuning, t0, dt, t, frame_detuning);
  }

  /// Detuning entering H/hbar at time t.
  double hamiltonian_detuning(double t) const { return explicit_detuning ? detuning_at(t) : frame_detuning; }

  double peak_magnitude() const {
    double m = 0.0;
    for (const auto& v : env) m = std::max(m, std::abs(v));
    return m;
  }

  void validate() const {
    require(dt > 0.0, "envelope grid: dt must be positive");
    require(env.size() >= 2, "envelope grid: needs at least two samples");
    require(nominal_detuning.size() == env.size(), "envelope grid: detuning trace length mismatch");
    for (const auto& v : env)
      require(std::isfinite(v.real()) && std::isfinite(v.imag()), "envelope grid: non-finite sample");
  }
};

}  // namespace qdsps
