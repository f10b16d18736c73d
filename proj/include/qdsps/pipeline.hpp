#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/config.hpp"
#include "qdsps/correlations.hpp"
#include "qdsps/ensemble.hpp"
#include "qdsps/master_equation.hpp"
#include "qdsps/phonon.hpp"
#include "qdsps/pulses.hpp"
#include "qdsps/spectrum.hpp"

namespace qdsps {

/// Everything a run needs, built once from a RunConfig.
struct PreparedRun {
  RunConfig cfg;
  /// Envelope the solvers integrate.
  EnvelopeGrid dynamics;
  /// Envelope whose spectrum is reported; differs from `dynamics` only for
  /// NARP with the hole kept out of the dynamics.
  EnvelopeGrid spectral;
  ChannelSet channels;
  std::optional<NarpDiagnostics> narp;
  /// Applied resonance shift (rad/ps); zero unless the polaron shift is on.
  double resonance_shift = 0.0;

  StepOptions steps() const { return {cfg.solver.dt, cfg.solver.coarse_factor}; }
};

inline PreparedRun prepare(const RunConfig& cfg) {
  validate(cfg);
  PreparedRun r;
  r.cfg = cfg;
  if (const auto* n = std::get_if<NarpParams>(&cfg.pulse)) {
    auto built = build_narp_detailed(*n, cfg.qubit);
    r.narp = built.diagnostics;
    r.spectral = std::move(built.grid);
    if (cfg.hole_in_dynamics) {
      r.dynamics = r.spectral;
    } else {
      NarpParams bare = *n;
      bare.delta = 0.0;
      r.dynamics = build_narp(bare, cfg.qubit);
    }
  } else {
    r.dynamics = build_envelope(cfg.pulse, cfg.qubit);
    r.spectral = r.dynamics;
  }
  if (cfg.phonon.enabled && cfg.phonon.polaron_shift) {
    r.resonance_shift = polaron_shift(cfg.phonon.params);
    apply_resonance_shift(r.dynamics, r.resonance_shift);
    apply_resonance_shift(r.spectral, r.resonance_shift);
  }
  if (cfg.phonon.enabled) {
    r.channels = phonon_channels(cfg.qubit, r.dynamics, cfg.phonon.params, cfg.phonon.rates);
    r.channels.phonon_dephasing_factor = cfg.phonon.dephasing_factor;
  } else {
    r.channels = radiative_channels(cfg.qubit);
  }
  return r;
}

struct OracleRun {
  CorrelationResult correlations;
  FiguresOfMerit fom;
};

inline OracleRun run_oracle(const PreparedRun& r, std::size_t keep_every = 0) {
  CorrelationOptions co;
  co.steps = r.steps();
  co.stride = r.cfg.solver.stride;
  co.keep_every = keep_every;
  OracleRun o;
  o.correlations = regression_correlations(r.dynamics, r.channels, Mat2::ground(), co);
  o.fom = fom_from_me(o.correlations);
  return o;
}

/// Final excited population with every loss channel switched off.
inline double lossless_final_population(const PreparedRun& r) {
  MeOptions mo;
  mo.steps = r.steps();
  return evolve_me(r.dynamics, lossless_channels(), Mat2::ground(), mo).final_rho.excited();
}

struct TrajectoryRun {
  EnsembleStats ensemble;
  HbtResult hbt;
  std::optional<HomResult> hom_interfering;
  std::optional<HomResult> hom_distinguishable;
  FiguresOfMerit fom;
};

inline TrajectoryRun run_trajectories(const PreparedRun& r, unsigned workers) {
  const auto& s = r.cfg.solver;
  TrajectoryRun out;
  EnsembleOptions eo;
  eo.n_traj = s.n_traj;
  eo.seed = s.seed;
  eo.workers = workers;
  eo.steps = r.steps();
  eo.keep_records = false;
  out.ensemble = run_ensemble(r.dynamics, r.channels, eo);
  out.hbt = hbt_histogram(out.ensemble);

  out.fom.source = "trajectories";
  out.fom.eta = efficiency_from_counts(out.ensemble);
  out.fom.eta_at_least_one = emission_probability(out.ensemble);
  out.fom.g2 = g2_from_counts(out.ensemble);
  if (s.hom) {
    HomOptions ho;
    ho.n_traj = s.n_traj;
    ho.workers = workers;
    ho.steps = r.steps();
    ho.seed = splitmix64(s.seed + 1);
    out.hom_interfering = run_hom_pair(r.dynamics, r.channels, {HomConfig::Mode::interfering}, ho);
    ho.seed = splitmix64(s.seed + 2);
    out.hom_distinguishable = run_hom_pair(r.dynamics, r.channels, {HomConfig::Mode::distinguishable}, ho);
    out.fom.indist =
        indistinguishability_from_hom(out.hom_interfering->coincidence, out.hom_distinguishable->coincidence);
    out.fom.indist_convention = "1 - P_coinc(interfering) / P_coinc(distinguishable)";
  }
  return out;
}

/// Overlap of the drive spectrum with the Lorentzian emission line.
inline double preset_overlap(const PreparedRun& r) {
  return overlap_measure(pulse_spectrum(r.spectral), emission_line(r.cfg.qubit));
}

struct PeakRates {
  double dephasing = 0.0;
  double excitation = 0.0;
};

/// Peak phonon rates along the pulse (rad/ps); zero with phonons off.
inline PeakRates peak_phonon_rates(const PreparedRun& r) {
  if (!r.channels.phonon) return {};
  return {r.channels.phonon_dephasing_factor * r.channels.phonon->peak_dephasing(),
          r.channels.phonon->peak_excitation()};
}

struct PresetReport {
  FiguresOfMerit oracle;
  std::optional<FiguresOfMerit> trajectory;
  double overlap = 0.0;
  PeakRates rates;
  double max_population = 0.0;
};

inline PresetReport run_preset(const PreparedRun& r, bool trajectories, unsigned workers) {
  PresetReport rep;
  const auto o = run_oracle(r);
  rep.oracle = o.fom;
  rep.max_population = max_population(o.correlations.population);
  rep.overlap = preset_overlap(r);
  rep.rates = peak_phonon_rates(r);
  if (trajectories) rep.trajectory = run_trajectories(r, workers).fom;
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepPoint {
  double x = 0.0;
  double y = 0.0;
  FiguresOfMerit oracle;
  std::optional<FiguresOfMerit> trajectory;
  double overlap = 0.0;
};

using SweepRowSink = std::function<void(const SweepPoint&)>;

namespace detail {

/// Runs the points in parallel (one worker per point) and hands finished rows
/// to `sink` in index order from whichever thread completes the prefix.
inline std::vector<SweepPoint> run_points(const std::vector<RunConfig>& cfgs, const std::vector<double>& xs,
                                          const std::vector<double>& ys, bool trajectories, unsigned workers,
                                          const SweepRowSink& sink) {
  const std::size_t n = cfgs.size();
  std::vector<SweepPoint> pts(n);
  std::vector<char> done(n, 0);
  std::size_t next = 0;
  std::mutex m;
  parallel_for(n, workers, [&](std::size_t i) {
    const auto r = prepare(cfgs[i]);
    const auto rep = run_preset(r, trajectories, 1);
    SweepPoint p{xs[i], ys[i], rep.oracle, rep.trajectory, rep.overlap};
    std::lock_guard<std::mutex> lock(m);
    pts[i] = p;
    done[i] = 1;
    while (next < n && done[next]) {
      if (sink) sink(pts[next]);
      ++next;
    }
  });
  return pts;
}

}  // namespace detail

/// Spectral-gap scan. Dichromatic: x = delta * t_p with the amplitude
/// recalibrated to area pi at every point. NARP: x = hole half width in ueV.
inline std::vector<SweepPoint> sweep_gap(const RunConfig& base, const std::vector<double>& values, bool trajectories,
                                         const SweepRowSink& sink = {}) {
  require(!values.empty(), "sweep-gap: no points");
  std::vector<RunConfig> cfgs;
  for (double x : values) {
    RunConfig c = base;
    if (auto* d = std::get_if<DichromaticParams>(&c.pulse)) {
      require(x >= 0.0, "sweep-gap: delta*t_p must be non-negative");
      d->delta = x / d->t_p;
      d->omega0_amp = calibrate_dichromatic_amplitude(*d).value;
    } else if (auto* n = std::get_if<NarpParams>(&c.pulse)) {
      require(x > 0.0, "sweep-gap: hole width must be positive");
      n->delta = units::uev_to_rad_ps(x);
    } else {
      throw InvalidInput("sweep-gap: needs a dichromatic or narp preset");
    }
    cfgs.push_back(c);
  }
  return detail::run_points(cfgs, values, std::vector<double>(values.size(), 0.0), trajectories, base.solver.workers,
                            sink);
}

/// Second-pulse parameters scanned around the SUPER preset.
enum class SuperAxis { omega2_rel, t_p2_rel, delta2_shift_meV };

inline SuperAxis parse_super_axis(std::string_view s) {
  if (s == "omega2") return SuperAxis::omega2_rel;
  if (s == "t_p2") return SuperAxis::t_p2_rel;
  if (s == "delta2") return SuperAxis::delta2_shift_meV;
  throw InvalidInput("sweep-super: unknown axis '" + std::string(s) + "' (omega2, t_p2, delta2)");
}

constexpr std::string_view super_axis_name(SuperAxis a) {
  switch (a) {
    case SuperAxis::omega2_rel: return "omega2_rel";
    case SuperAxis::t_p2_rel: return "t_p2_rel";
    case SuperAxis::delta2_shift_meV: return "delta2_shift_meV";
  }
  return "?";
}

/// Relative changes for omega2 and t_p2 (0.2 = +20%), absolute shifts in meV for delta2.
inline void apply_super_axis(SuperParams& s, SuperAxis a, double v) {
  switch (a) {
    case SuperAxis::omega2_rel:
      require(std::abs(v) <= 0.3 + 1e-12, "sweep-super: omega2 change limited to +-30%");
      s.omega2 *= 1.0 + v;
      break;
    case SuperAxis::t_p2_rel:
      require(std::abs(v) <= 0.3 + 1e-12, "sweep-super: t_p2 change limited to +-30%");
      s.t_p2 *= 1.0 + v;
      break;
    case SuperAxis::delta2_shift_meV:
      require(std::abs(units::mev_to_rad_ps(v)) <= 0.02 * std::abs(s.delta2) * (1.0 + 1e-9),
              "sweep-super: delta2 shift limited to +-2%");
      s.delta2 += units::mev_to_rad_ps(v);
      break;
  }
}

struct SuperScanAxis {
  SuperAxis axis = SuperAxis::omega2_rel;
  std::vector<double> values;
};

inline std::vector<SweepPoint> sweep_super_robustness(const RunConfig& base, const SuperScanAxis& a1,
                                                      const std::optional<SuperScanAxis>& a2, bool trajectories,
                                                      const SweepRowSink& sink = {}) {
  require(std::holds_alternative<SuperParams>(base.pulse), "sweep-super: needs the super preset");
  require(!a1.values.empty(), "sweep-super: no points on axis 1");
  require(!a2 || (!a2->values.empty() && a2->axis != a1.axis), "sweep-super: axis 2 must be distinct and non-empty");
  std::vector<RunConfig> cfgs;
  std::vector<double> xs, ys;
  const std::vector<double> second = a2 ? a2->values : std::vector<double>{0.0};
  for (double x : a1.values) {
    for (double y : second) {
      RunConfig c = base;
      auto& s = std::get<SuperParams>(c.pulse);
      apply_super_axis(s, a1.axis, x);
      if (a2) apply_super_axis(s, a2->axis, y);
      cfgs.push_back(c);
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  return detail::run_points(cfgs, xs, ys, trajectories, base.solver.workers, sink);
}

}  // namespace qdsps
