#pragma once

#include <array>
#include <memory>
#include <string_view>

#include "qdsps/error.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/phonon.hpp"
#include "qdsps/pulses.hpp"

namespace qdsps {

/// Collapse channels of one emitter. Operators are fixed (sigma-, sigma+sigma-,
/// sigma+); only the rates vary in time.
enum class Channel : int { radiative = 0, dephasing = 1, excitation = 2 };
inline constexpr int kChannelCount = 3;

constexpr std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::radiative: return "radiative";
    case Channel::dephasing: return "dephasing";
    case Channel::excitation: return "excitation";
  }
  return "?";
}

/// Collapse rates r_k(t) for C_k = sqrt(r_k) O_k.
struct ChannelRates {
  double radiative = 0.0;
  /// Rate on sigma+sigma-; coherences decay at half this value.
  double dephasing = 0.0;
  double excitation = 0.0;

  double total() const { return radiative + dephasing + excitation; }
};

struct ChannelSet {
  double gamma = units::rate_ghz_to_ps(1.0);
  /// Drive-induced phonon rates; null for a lossless-phonon run.
  std::shared_ptr<const PhononRateTrace> phonon;
  /// Constant extra pure dephasing: coherence decay rate gamma_pd (rad/ps).
  double pure_dephasing = 0.0;
  /// Collapse rate on sigma+sigma- is this factor times gamma'_eff, so
  /// coherences decay at factor * gamma'_eff / 2.
  double phonon_dephasing_factor = 1.0;

  void validate() const {
    require(gamma >= 0.0, "channels: radiative rate must be non-negative");
    require(pure_dephasing >= 0.0, "channels: pure dephasing must be non-negative");
    require(phonon_dephasing_factor >= 0.0, "channels: dephasing factor must be non-negative");
  }

  ChannelRates at(double t) const {
    ChannelRates r;
    r.radiative = gamma;
    r.dephasing = 2.0 * pure_dephasing;
    if (phonon) {
      r.dephasing += phonon_dephasing_factor * phonon->dephasing_at(t);
      r.excitation = phonon->excitation_at(t);
    }
    return r;
  }

  /// Rates once the drive is over (phonon rates vanish with the envelope).
  ChannelRates free_rates() const { return {gamma, 2.0 * pure_dephasing, 0.0}; }

  double max_rate() const {
    double m = gamma + 2.0 * pure_dephasing;
    if (phonon) m += phonon_dephasing_factor * phonon->peak_dephasing() + phonon->peak_excitation();
    return m;
  }
};

/// No dissipation at all: used for lossless inversion checks.
inline ChannelSet lossless_channels() {
  ChannelSet c;
  c.gamma = 0.0;
  return c;
}

inline ChannelSet radiative_channels(const QubitParams& q) {
  ChannelSet c;
  c.gamma = q.gamma;
  return c;
}

inline ChannelSet phonon_channels(const QubitParams& q, const EnvelopeGrid& e, const PhononParams& p,
                                  const RateOptions& opt = {}) {
  ChannelSet c = radiative_channels(q);
  c.phonon = std::make_shared<const PhononRateTrace>(rates_along_pulse(e, p, opt));
  return c;
}

}  // namespace qdsps
