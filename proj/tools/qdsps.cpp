// qdsps command line front end.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdsps/qdsps.hpp"

namespace fs = std::filesystem;
using namespace qdsps;

namespace {

struct Common {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ntraj;
  std::optional<unsigned> workers;
  bool no_phonons = false;
  bool polaron_shift = false;
  std::string out_dir;
};

RunConfig resolve(const Common& c) {
  ConfigEntries e;
  if (!c.config.empty()) e = read_config_file(c.config);
  if (!c.preset.empty()) e.emplace_back("preset", c.preset);
  RunConfig cfg = apply_config(RunConfig{}, e);
  if (c.seed) cfg.solver.seed = *c.seed;
  if (c.ntraj) cfg.solver.n_traj = *c.ntraj;
  if (c.workers) cfg.solver.workers = *c.workers;
  if (c.no_phonons) cfg.phonon.enabled = false;
  if (c.polaron_shift) cfg.phonon.polaron_shift = true;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  validate(cfg);
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

void write_record(const RunConfig& cfg, const std::string& command) {
  io::write_text(out_path(cfg, "run_record.txt"), "# command: " + command + "\n" + to_config_text(cfg));
}

std::string fmt_est(const std::optional<Estimate>& e) {
  if (!e) return "n/a";
  char b[64];
  std::snprintf(b, sizeof b, "%.4f +- %.4f", e->value, e->se);
  return b;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  require(n >= 1, "sweep: steps must be >= 1");
  if (n == 1) return {a};
  require(a != b, "sweep: degenerate range");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

int cmd_pulse(const RunConfig& cfg) {
  const auto r = prepare(cfg);
  io::write_envelope_csv(out_path(cfg, "envelope.csv"), r.spectral);
  const auto s = pulse_spectrum(r.spectral);
  io::write_spectrum_csv(out_path(cfg, "spectrum.csv"), s);
  std::printf("preset        %s\n", std::string(preset_name(cfg.preset)).c_str());
  std::printf("samples       %zu (dt %.4g ps, window %.4g..%.4g ps)\n", r.spectral.size(), r.spectral.dt,
              r.spectral.t0, r.spectral.t_end());
  std::printf("peak |env|    %.6g meV\n", units::rad_ps_to_mev(r.spectral.peak_magnitude()));
  std::printf("overlap       %.6g\n", preset_overlap(r));
  if (r.narp) std::printf("hole removes  %.6g of the pulse energy\n", r.narp->removed_energy_fraction);
  write_record(cfg, "pulse");
  return 0;
}

int cmd_rates(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.phonon.enabled = true;
  const auto r = prepare(c);
  io::write_rates_csv(out_path(cfg, "rates.csv"), *r.channels.phonon, r.channels.phonon_dephasing_factor);
  const auto pk = peak_phonon_rates(r);
  std::printf("peak dephasing  %.6g GHz\n", units::rate_ps_to_ghz(pk.dephasing));
  std::printf("peak excitation %.6g GHz\n", units::rate_ps_to_ghz(pk.excitation));
  write_record(c, "rates");
  return 0;
}

int cmd_evolve(const RunConfig& cfg) {
  const auto r = prepare(cfg);
  MeOptions mo;
  mo.steps = r.steps();
  mo.extend = 8.0 / cfg.qubit.gamma;
  mo.extend_dt = 0.05 / cfg.qubit.gamma;
  const auto me = evolve_me(r.dynamics, r.channels, Mat2::ground(), mo);
  const std::size_t every = std::max<std::size_t>(1, me.population.t.size() / 20000);
  io::write_population_csv(out_path(cfg, "population.csv"), me.population, every);
  std::printf("max N_x           %.6f\n", max_population(me.population));
  std::printf("lossless final N  %.7f\n", lossless_final_population(r));
  std::printf("trace drift       %.3g\n", me.max_trace_drift);
  std::printf("min eigenvalue    %.3g\n", me.min_eigenvalue);
  write_record(cfg, "evolve");
  return 0;
}

int cmd_fom(const RunConfig& cfg, bool correlations, bool jumps) {
  const auto r = prepare(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto o = run_oracle(r, correlations ? 10 : 0);
  io::write_population_csv(out_path(cfg, "population.csv"), o.correlations.population,
                           std::max<std::size_t>(1, o.correlations.population.t.size() / 20000));
  if (correlations) io::write_correlation_csv(out_path(cfg, "correlations.csv"), o.correlations.grid);
  std::fprintf(stderr, "oracle done, running %zu trajectories\n", cfg.solver.n_traj);
  const auto tr = run_trajectories(r, cfg.solver.workers);
  if (jumps) {
    EnsembleOptions eo;
    eo.n_traj = cfg.solver.n_traj;
    eo.seed = cfg.solver.seed;
    eo.workers = cfg.solver.workers;
    eo.steps = r.steps();
    io::write_jumps_csv(out_path(cfg, "jumps.csv"), run_ensemble(r.dynamics, r.channels, eo).records);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto j = io::fom_json(tr.fom, o.fom, cfg.solver.n_traj, cfg.solver.seed);
  j["preset"] = preset_name(cfg.preset);
  j["g2_hbt"] = io::to_json(tr.hbt.g2);
  j["g2_hbt_se"] = io::se_json(tr.hbt.g2);
  j["overlap"] = preset_overlap(r);
  j["version"] = kVersion;
  io::write_text(out_path(cfg, "fom.json"), j.dump(2) + "\n");
  std::printf("%-14s %-18s %-18s\n", "", "trajectories", "master equation");
  std::printf("%-14s %-18s %.4f\n", "eta", fmt_est(tr.fom.eta).c_str(), o.fom.eta.value);
  std::printf("%-14s %-18s\n", "P(>=1)", fmt_est(tr.fom.eta_at_least_one).c_str());
  std::printf("%-14s %-18s %s\n", "g2(0)", fmt_est(tr.fom.g2).c_str(),
              o.fom.g2 ? std::to_string(o.fom.g2->value).c_str() : "n/a");
  std::printf("%-14s %-18s\n", "g2(0) HBT", fmt_est(tr.hbt.g2).c_str());
  std::printf("%-14s %-18s %s\n", "I", fmt_est(tr.fom.indist).c_str(),
              o.fom.indist ? std::to_string(o.fom.indist->value).c_str() : "n/a");
  std::fprintf(stderr, "%.1f s\n", secs);
  write_record(cfg, "fom");
  return 0;
}

int run_sweep(const RunConfig& cfg, const std::string& file, const std::string& command,
              const std::function<std::vector<SweepPoint>(const SweepRowSink&)>& body) {
  auto f = std::ofstream(out_path(cfg, file));
  if (!f) throw InvalidInput("cannot write sweep output");
  f << io::kSweepHeader << '\n';
  f.flush();
  body([&](const SweepPoint& p) {
    f << io::sweep_row(p) << '\n';
    f.flush();
    std::fprintf(stderr, "point x=%g y=%g done\n", p.x, p.y);
  });
  write_record(cfg, command);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-dot single-photon source simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--preset", c.preset, "long-dichromatic | short-dichromatic | narp | super");
  app.add_option("--config", c.config, "key = value configuration file (a run_record.txt works too)");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--ntraj", c.ntraj, "trajectories per ensemble");
  app.add_option("--workers", c.workers, "worker threads");
  app.add_flag("--no-phonons", c.no_phonons, "switch the phonon bath off");
  app.add_flag("--polaron-shift", c.polaron_shift, "shift the qubit by the polaron shift");
  app.add_option("--out-dir", c.out_dir, "output directory");

  auto* pulse = app.add_subcommand("pulse", "envelope and spectrum CSV");
  auto* rates = app.add_subcommand("rates", "phonon rate CSV");
  auto* evolve = app.add_subcommand("evolve", "master-equation population trace");
  auto* fom = app.add_subcommand("fom", "full run: oracle, trajectories, HBT and HOM");
  bool with_corr = false, with_jumps = false;
  fom->add_flag("--correlations", with_corr, "also export the two-time correlation grid");
  fom->add_flag("--jumps", with_jumps, "also export the jump log");

  auto* gap = app.add_subcommand("sweep-gap", "scan delta*t_p (dichromatic) or the hole width in ueV (narp)");
  double g_from = 0.0, g_to = 4.0;
  std::size_t g_steps = 9;
  std::vector<double> g_values;
  bool g_oracle_only = false;
  gap->add_option("--from", g_from);
  gap->add_option("--to", g_to);
  gap->add_option("--steps", g_steps);
  gap->add_option("--values", g_values, "explicit axis values (overrides the range)");
  gap->add_flag("--oracle-only", g_oracle_only, "skip the trajectory ensembles");

  auto* sup = app.add_subcommand("sweep-super", "SUPER robustness scan");
  std::string s_axis = "omega2", s_axis2;
  std::vector<double> s_values{-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3}, s_values2;
  bool s_oracle_only = false;
  sup->add_option("--axis", s_axis, "omega2 | t_p2 (relative change) | delta2 (shift in meV)");
  sup->add_option("--values", s_values);
  sup->add_option("--axis2", s_axis2);
  sup->add_option("--values2", s_values2);
  sup->add_flag("--oracle-only", s_oracle_only, "skip the trajectory ensembles");

  auto* info = app.add_subcommand("info", "Franck-Condon factor, cap, polaron shift, pulse diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*info) {
      RunConfig cfg = resolve(c);
      const auto& p = cfg.phonon.params;
      const double b = franck_condon(p);
      std::printf("franck_condon           %.6f\n", b);
      std::printf("indistinguishability_cap %.6f\n", indistinguishability_cap(p));
      std::printf("polaron_shift           %.6f rad/ps (%.6f meV)\n", polaron_shift(p),
                  units::rad_ps_to_mev(polaron_shift(p)));
      const auto narp = std::get_if<NarpParams>(&cfg.pulse) ? std::get<NarpParams>(cfg.pulse)
                                                           : std::get<NarpParams>(preset_params(Preset::narp));
      const auto d = narp_diagnostics(narp);
      std::printf("narp |alpha| t_p^2      %.4f\n", d.chirp_product);
      std::printf("narp Omega0^2 t_p^2     %.4f\n", d.area_product);
      std::printf("narp spectral chirp     %.6f ps^2\n", d.spectral_chirp);
      for (auto pr : {Preset::long_dichromatic, Preset::short_dichromatic}) {
        const auto dp = std::get<DichromaticParams>(preset_params(pr));
        const double table = pr == Preset::long_dichromatic ? kLongDichromaticTableAmplitudeMeV
                                                            : kShortDichromaticTableAmplitudeMeV;
        std::printf("%-18s area-pi Omega0 %.4f meV, tabulated %.4f meV (ratio %.4f)\n",
                    std::string(preset_name(pr)).c_str(), units::rad_ps_to_mev(dp.omega0_amp), table,
                    units::rad_ps_to_mev(dp.omega0_amp) / table);
      }
      return 0;
    }
    RunConfig cfg = resolve(c);
    if (*pulse) return cmd_pulse(cfg);
    if (*rates) return cmd_rates(cfg);
    if (*evolve) return cmd_evolve(cfg);
    if (*fom) return cmd_fom(cfg, with_corr, with_jumps);
    if (*gap) {
      auto values = g_values.empty() ? linspace(g_from, g_to, g_steps) : g_values;
      if (const auto* n = std::get_if<NarpParams>(&cfg.pulse); n && g_values.empty() && gap->count("--from") == 0) {
        // Hole widths 0.5x..4x of the configured one.
        values = linspace(0.5, 4.0, 8);
        for (auto& v : values) v *= units::rad_ps_to_uev(n->delta);
      }
      return run_sweep(cfg, "sweep_gap.csv", "sweep-gap", [&](const SweepRowSink& sink) {
        return sweep_gap(cfg, values, !g_oracle_only, sink);
      });
    }
    if (*sup) {
      SuperScanAxis a1{parse_super_axis(s_axis), s_values};
      std::optional<SuperScanAxis> a2;
      if (!s_axis2.empty()) a2 = SuperScanAxis{parse_super_axis(s_axis2), s_values2};
      return run_sweep(cfg, "sweep_super.csv", "sweep-super", [&](const SweepRowSink& sink) {
        return sweep_super_robustness(cfg, a1, a2, !s_oracle_only, sink);
      });
    }
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
