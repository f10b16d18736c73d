#pragma once

#include <numbers>

// Unit system: energies in meV, times in ps, angular frequencies and rates in
// rad/ps (equivalently ps^-1). Conversions at the I/O boundary go through here.
namespace qdsps::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// hbar in meV ps.
inline constexpr double hbar = 0.6582119569;
/// Boltzmann constant in meV/K.
inline constexpr double k_boltzmann = 0.08617333;

constexpr double mev_to_rad_ps(double e_mev) { return e_mev / hbar; }
constexpr double rad_ps_to_mev(double w) { return w * hbar; }
constexpr double uev_to_rad_ps(double e_uev) { return e_uev * 1e-3 / hbar; }
constexpr double rad_ps_to_uev(double w) { return w * hbar * 1e3; }

/// Cyclic frequency f in GHz (f = omega / 2 pi) to angular rad/ps.
constexpr double cyclic_ghz_to_rad_ps(double f_ghz) { return two_pi * f_ghz * 1e-3; }
constexpr double rad_ps_to_cyclic_ghz(double w) { return w / two_pi * 1e3; }

/// Transition rate in ps^-1 to 10^9 s^-1 (the "GHz" used for phonon rates).
constexpr double rate_ps_to_ghz(double r) { return r * 1e3; }
constexpr double rate_ghz_to_ps(double r) { return r * 1e-3; }

/// Thermal energy k_B T in meV.
constexpr double thermal_energy(double temperature_k) { return k_boltzmann * temperature_k; }

}  // namespace qdsps::units
