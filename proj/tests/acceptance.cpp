// Acceptance run: one PASS/FAIL line per criterion, plus indented detail.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qdsps/qdsps.hpp"
#include "stat_util.hpp"

using namespace qdsps;

namespace {

using Clock = std::chrono::steady_clock;

struct Reference {
  double eta, g2, indist, tol;
};

// Target (eta, g2, I) per preset and the accepted absolute deviation.
Reference reference(Preset p) {
  switch (p) {
    case Preset::long_dichromatic: return {0.4948, 0.4619, 0.5850, 0.05};
    case Preset::short_dichromatic: return {0.8519, 0.0074, 0.9889, 0.03};
    case Preset::narp: return {0.9302, 0.0036, 0.9929, 0.03};
    case Preset::super_pulse: return {0.9890, 0.0012, 0.9987, 0.03};
  }
  return {};
}

double target_overlap(Preset p) {
  switch (p) {
    case Preset::long_dichromatic: return 0.0049;
    case Preset::short_dichromatic: return 0.0005;
    case Preset::narp: return 0.0263;
    case Preset::super_pulse: return 0.0;
  }
  return 0.0;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

int failures = 0;

void verdict(int id, bool pass, Clock::time_point start) {
  const double s = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("criterion %d: %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", s);
  std::fflush(stdout);
  if (!pass) ++failures;
}

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

double value_or_nan(const std::optional<Estimate>& e) { return e ? e->value : std::nan(""); }
double se_or_nan(const std::optional<Estimate>& e) { return e ? e->se : std::nan(""); }

void print_fom(const char* label, const FiguresOfMerit& f) {
  detail("%-28s eta %.4f +- %.4f  g2 %.4f +- %.4f  I %.4f +- %.4f", label, f.eta.value, f.eta.se,
         value_or_nan(f.g2), se_or_nan(f.g2), value_or_nan(f.indist), se_or_nan(f.indist));
}

RunConfig with_traj(RunConfig c, std::size_t n) {
  c.solver.n_traj = n;
  c.solver.workers = workers();
  return c;
}

// ---------------------------------------------------------------------------

void criterion1() {
  const auto t0 = Clock::now();
  const PhononParams p;
  const double b = franck_condon(p), cap = indistinguishability_cap(p);
  detail("<B> = %.6f, cap <B>^4 = %.6f", b, cap);
  verdict(1, std::abs(b - 0.96) <= 0.005 && std::abs(cap - 0.849) <= 0.02, t0);
}

void criterion2() {
  const auto t0 = Clock::now();
  bool ok = true;
  for (auto p : kAllPresets) {
    const double n = lossless_final_population(prepare(preset_config(p)));
    const double need = p == Preset::long_dichromatic ? 1.0 - 1e-4 : 0.9996;
    const bool pass = n >= need;
    ok = ok && pass;
    detail("%-18s final N = %.7f (need >= %.4f) %s", std::string(preset_name(p)).c_str(), n, need, pass ? "ok" : "below");
  }
  auto c = preset_config(Preset::narp);
  c.hole_in_dynamics = false;
  detail("info: narp with the hole kept out of the dynamics: final N = %.7f",
         lossless_final_population(prepare(c)));
  verdict(2, ok, t0);
}

void criterion3() {
  const auto t0 = Clock::now();
  bool ok = true;
  for (auto p : kAllPresets) {
    const double o = preset_overlap(prepare(preset_config(p)));
    const double ref = target_overlap(p);
    const bool pass = ref == 0.0 ? o <= 1e-10 : std::abs(o - ref) <= 0.25 * ref;
    ok = ok && pass;
    if (ref == 0.0)
      detail("%-18s O = %.3e (need <= 1e-10) %s", std::string(preset_name(p)).c_str(), o, pass ? "ok" : "off");
    else
      detail("%-18s O = %.5f (target %.4f +-25%%, ratio %.3f) %s", std::string(preset_name(p)).c_str(), o, ref,
             o / ref, pass ? "ok" : "off");
  }
  verdict(3, ok, t0);
}

struct PresetRun {
  FiguresOfMerit traj;
  FiguresOfMerit oracle;
};

std::vector<PresetRun> criterion4() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::vector<PresetRun> out;
  for (auto p : kAllPresets) {
    const auto run = prepare(with_traj(preset_config(p), 5000));
    const auto oracle = run_oracle(run).fom;
    const auto traj = run_trajectories(run, workers()).fom;
    out.push_back({traj, oracle});
    const auto ref = reference(p);
    const bool pass = std::abs(traj.eta.value - ref.eta) <= ref.tol && traj.g2 &&
                      std::abs(traj.g2->value - ref.g2) <= ref.tol && traj.indist &&
                      std::abs(traj.indist->value - ref.indist) <= ref.tol;
    ok = ok && pass;
    const std::string name(preset_name(p));
    detail("%s: target (%.4f, %.4f, %.4f) +- %.2f %s", name.c_str(), ref.eta, ref.g2, ref.indist, ref.tol,
           pass ? "ok" : "off");
    print_fom("  trajectories (n = 5000)", traj);
    print_fom("  master equation", oracle);
  }
  auto c = preset_config(Preset::narp);
  c.hole_in_dynamics = false;
  print_fom("info: narp, hole out of dynamics, master equation", run_oracle(prepare(c)).fom);
  verdict(4, ok, t0);
  return out;
}

void criterion5() {
  const auto t0 = Clock::now();
  const auto sup = peak_phonon_rates(prepare(preset_config(Preset::super_pulse)));
  const auto lng = peak_phonon_rates(prepare(preset_config(Preset::long_dichromatic)));
  const double sup_ghz = units::rate_ps_to_ghz(std::max(sup.dephasing, sup.excitation));
  const double lng_ghz = units::rate_ps_to_ghz(lng.dephasing);
  detail("super peak rate %.3e GHz (need < 1e-12)", sup_ghz);
  detail("long-dichromatic peak dephasing %.1f GHz (need > 100)", lng_ghz);
  verdict(5, sup_ghz < 1e-12 && lng_ghz > 100.0, t0);
}

void criterion6(const PresetRun& base) {
  const auto t0 = Clock::now();
  const auto base_cfg = with_traj(preset_config(Preset::super_pulse), 5000);
  auto variant = [&](SuperAxis a, double v) {
    auto c = base_cfg;
    apply_super_axis(std::get<SuperParams>(c.pulse), a, v);
    return c;
  };
  bool ok = true;

  // Spot checks with trajectories.
  const auto up20 = run_trajectories(prepare(variant(SuperAxis::omega2_rel, 0.2)), workers()).fom;
  const bool p1 = std::abs(up20.eta.value - 0.718) <= 0.05;
  print_fom("omega2 +20%", up20);
  detail("  eta target 0.718 +- 0.05 %s", p1 ? "ok" : "off");
  ok = ok && p1;
  for (double shift : {+0.19, -0.19}) {
    const auto f = run_trajectories(prepare(variant(SuperAxis::delta2_shift_meV, shift)), workers()).fom;
    const bool p = f.eta.value < 0.9;
    char label[64];
    std::snprintf(label, sizeof label, "delta2 %+.2f meV", shift);
    print_fom(label, f);
    detail("  eta target < 0.9 %s", p ? "ok" : "off");
    ok = ok && p;
    detail("  trajectory change vs preset: dg2 %+.4f, dI %+.4f", value_or_nan(f.g2) - value_or_nan(base.traj.g2),
           value_or_nan(f.indist) - value_or_nan(base.traj.indist));
  }
  detail("  trajectory change at omega2 +20%%: dg2 %+.4f, dI %+.4f",
         value_or_nan(up20.g2) - value_or_nan(base.traj.g2), value_or_nan(up20.indist) - value_or_nan(base.traj.indist));

  // g2 and I stability over both scans from the deterministic master equation.
  double worst_g2 = 0.0, worst_i = 0.0;
  const double g0 = value_or_nan(base.oracle.g2), i0 = value_or_nan(base.oracle.indist);
  auto scan = [&](SuperAxis a, std::initializer_list<double> vs) {
    for (double v : vs) {
      const auto f = run_oracle(prepare(variant(a, v))).fom;
      worst_g2 = std::max(worst_g2, std::abs(value_or_nan(f.g2) - g0));
      worst_i = std::max(worst_i, std::abs(value_or_nan(f.indist) - i0));
      detail("  scan %-16s %+.2f: ME eta %.4f g2 %.4f I %.4f", std::string(super_axis_name(a)).c_str(), v,
             f.eta.value, value_or_nan(f.g2), value_or_nan(f.indist));
    }
  };
  scan(SuperAxis::omega2_rel, {-0.3, -0.2, -0.1, 0.1, 0.2, 0.3});
  scan(SuperAxis::delta2_shift_meV, {-0.19, -0.10, 0.10, 0.19});
  const bool p3 = worst_g2 < 0.01 && worst_i < 0.01;
  detail("largest ME change over both scans: g2 %.4f, I %.4f (need < 0.01) %s", worst_g2, worst_i, p3 ? "ok" : "off");
  ok = ok && p3;
  verdict(6, ok, t0);
}

void criterion7(const PresetRun& base) {
  const auto t0 = Clock::now();
  const auto cfg = with_traj(preset_config(Preset::narp), 5000);
  const double delta0 = std::get<NarpParams>(cfg.pulse).delta;
  bool ok = true;
  print_fom("hole x1", base.traj);
  auto flat = [](const char* what, double a, double sa, double b, double sb) {
    const double lim = 2.0 * std::hypot(sa, sb);
    const bool p = std::abs(a - b) <= lim;
    detail("  %-6s diff %+.4f, 2 combined se %.4f %s", what, b - a, lim, p ? "ok" : "off");
    return p;
  };
  for (int k = 2; k <= 4; ++k) {
    auto c = cfg;
    std::get<NarpParams>(c.pulse).delta = k * delta0;
    const auto f = run_trajectories(prepare(c), workers()).fom;
    char label[32];
    std::snprintf(label, sizeof label, "hole x%d", k);
    print_fom(label, f);
    ok = flat("eta", base.traj.eta.value, base.traj.eta.se, f.eta.value, f.eta.se) && ok;
    ok = flat("g2", value_or_nan(base.traj.g2), se_or_nan(base.traj.g2), value_or_nan(f.g2), se_or_nan(f.g2)) && ok;
    ok = flat("I", value_or_nan(base.traj.indist), se_or_nan(base.traj.indist), value_or_nan(f.indist),
              se_or_nan(f.indist)) && ok;
  }
  verdict(7, ok, t0);
}

// ---------------------------------------------------------------------------
// Criterion 8: property suite

bool check(const char* what, bool pass) {
  detail("%-52s %s", what, pass ? "ok" : "FAILED");
  return pass;
}

EnvelopeGrid idle(double span, double dt) {
  EnvelopeGrid g;
  g.t0 = 0.0;
  g.dt = dt;
  const auto n = static_cast<std::size_t>(std::llround(span / dt)) + 1;
  g.env.assign(n, cplx{});
  g.nominal_detuning.assign(n, 0.0);
  return g;
}

void criterion8() {
  const auto t0 = Clock::now();
  bool ok = true;

  // Master equation keeps a physical state.
  {
    bool pass = true;
    for (auto p : kAllPresets) {
      const auto run = prepare(preset_config(p));
      MeOptions mo;
      mo.steps = run.steps();
      const auto r = evolve_me(run.dynamics, run.channels, Mat2::ground(), mo);
      pass = pass && r.max_trace_drift <= 1e-8 && r.max_hermiticity_error <= 1e-10 && r.min_eigenvalue >= -1e-9;
    }
    ok = check("ME trace, hermiticity, positivity (4 presets)", pass) && ok;
  }

  // Trajectory populations against the master equation, and the two g2 estimators.
  {
    bool pop_pass = true, g2_pass = true;
    int probes = 0, outside = 0;
    for (auto p : kAllPresets) {
      const auto run = prepare(preset_config(p));
      MeOptions mo;
      mo.steps = run.steps();
      const auto me = evolve_me(run.dynamics, run.channels, Mat2::ground(), mo);
      const double top = max_population(me.population);
      std::vector<std::size_t> live;
      for (std::size_t i = 0; i < me.population.n.size(); ++i)
        if (me.population.n[i] > 0.01 * top) live.push_back(i);
      EnsembleOptions eo;
      eo.n_traj = 5000;
      eo.seed = 20240601;
      eo.workers = workers();
      eo.steps = run.steps();
      eo.keep_records = false;
      std::vector<std::size_t> idx;
      for (int k = 0; k < 12; ++k) idx.push_back(live[k * (live.size() - 1) / 11]);
      for (auto i : idx) eo.trajectory.probe_times.push_back(me.population.t[i]);
      const auto s = run_ensemble(run.dynamics, run.channels, eo);
      double worst = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double d = std::abs(s.probes[k].value - me.population.n[idx[k]]);
        // 1e-4 absolute floor covers the jump-time resolution of the unraveling.
        const double lim = 3.0 * s.probes[k].se + 1e-4;
        ++probes;
        if (d > lim) ++outside, pop_pass = false;
        worst = std::max(worst, d / lim);
      }
      const auto gc = g2_from_counts(s);
      const auto gh = hbt_histogram(s).g2;
      const bool g2ok = gc && gh && std::abs(gc->value - gh->value) <= 2.0 * std::hypot(gc->se, gh->se);
      g2_pass = g2_pass && g2ok;
      detail("%-18s worst |dN| / (3 se + 1e-4) = %.2f; g2 counts %.4f +- %.4f, hbt %.4f +- %.4f",
             std::string(preset_name(p)).c_str(), worst, value_or_nan(gc), se_or_nan(gc), value_or_nan(gh),
             se_or_nan(gh));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "trajectory vs ME population, 3 sigma (%d/%d inside)", probes - outside, probes);
    ok = check(buf, pop_pass) && ok;
    ok = check("g2 from counts vs HBT histogram, 2 sigma", g2_pass) && ok;
  }

  // Exponential waiting time from |e>.
  {
    ChannelSet ch;
    ch.gamma = 0.5;
    EnsembleOptions eo;
    eo.n_traj = 10000;
    eo.seed = 77;
    const auto s = run_ensemble(idle(2.0, 0.01), ch, eo, {0.0, 1.0});
    std::vector<double> t;
    for (const auto& r : s.records)
      if (!r.jumps.empty()) t.push_back(r.jumps.front().t);
    const double d = stats::ks_statistic(t, [](double x) { return 1.0 - std::exp(-0.5 * x); });
    const double pv = stats::ks_p_value(d, t.size());
    detail("KS D = %.4f, p = %.3f", d, pv);
    ok = check("jump-time law, KS p > 0.01", t.size() == 10000 && pv > 0.01) && ok;
  }

  // HOM trivial cases with two excited emitters.
  {
    ChannelSet ch;
    ch.gamma = 0.5;
    HomOptions ho;
    ho.n_traj = 4000;
    ho.seed = 11;
    const EmitterPair::State ee{0.0, 0.0, 0.0, 1.0};
    const auto a = run_hom_pair(idle(2.0, 0.01), ch, {HomConfig::Mode::interfering}, ho, ee);
    ho.seed = 12;
    const auto b = run_hom_pair(idle(2.0, 0.01), ch, {HomConfig::Mode::distinguishable}, ho, ee);
    detail("coincidence identical %.4f, distinguishable %.4f +- %.4f", a.coincidence.value, b.coincidence.value,
           b.coincidence.se);
    ok = check("HOM coincidences 0 and 1/2",
               a.coincidence.value == 0.0 && std::abs(b.coincidence.value - 0.5) <= 3.0 * b.coincidence.se) &&
         ok;
  }

  // FFT round trip and Parseval.
  {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> n;
    std::vector<cplx> x(4096);
    for (auto& v : x) v = {n(eng), n(eng)};
    const auto y = fft::apply_spectral_mask(x, 0.1, [](double) { return cplx{1.0, 0.0}; });
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) num += std::norm(y[i] - x[i]), den += std::norm(x[i]);
    ok = check("FFT identity-mask round trip", std::sqrt(num / den) < 1e-9) && ok;

    bool pass = true;
    for (auto p : kAllPresets) {
      const auto g = build_envelope(preset_params(p), QubitParams{});
      double et = 0.0;
      for (const auto& v : g.env) et += std::norm(v);
      et *= g.dt;
      const auto r = raw_spectrum(g);
      double es = 0.0;
      for (const auto& a : r.amplitude) es += std::norm(a);
      es *= r.step() / units::two_pi;
      pass = pass && std::abs(es - et) <= 1e-8 * et;
    }
    ok = check("Parseval (4 presets)", pass) && ok;
  }

  // Gauge equivalence: envelope phase versus explicit detuning trace.
  {
    auto np = std::get<NarpParams>(preset_params(Preset::narp));
    np.delta = 0.0;
    const QubitParams q;
    const double base_dt = build_narp(np, q).dt;
    double gap[2], fin = 0.0;
    for (int k = 0; k < 2; ++k) {
      GridOptions go;
      go.dt = base_dt / (1 << k);
      const auto g = build_narp(np, q, go);
      const auto x = to_explicit_detuning(g);
      const auto ch = phonon_channels(q, g, PhononParams{});
      MeOptions mo;
      mo.steps = {0.0018, 1};
      const auto a = evolve_me(g, ch, Mat2::ground(), mo);
      const auto b = evolve_me(x, ch, Mat2::ground(), mo);
      gap[k] = 0.0;
      for (std::size_t i = 0; i < a.population.n.size(); ++i)
        gap[k] = std::max(gap[k], std::abs(a.population.n[i] - b.population.n[i]));
      if (k == 0) fin = std::abs(a.final_rho.excited() - b.final_rho.excited());
    }
    detail("NARP gauge gap %.2e (final %.2e), %.2e on a grid twice as fine", gap[0], fin, gap[1]);
    ok = check("gauge equivalence of NARP forms", gap[0] < 5e-6 && fin < 1e-7 && gap[0] / gap[1] > 3.0) && ok;
  }

  // Bit-identical re-run, also across worker counts.
  {
    const auto run = prepare(preset_config(Preset::short_dichromatic));
    EnsembleOptions eo;
    eo.n_traj = 300;
    eo.seed = 4242;
    eo.steps = run.steps();
    eo.workers = 1;
    const auto a = run_ensemble(run.dynamics, run.channels, eo);
    eo.workers = std::max(2u, workers());
    const auto b = run_ensemble(run.dynamics, run.channels, eo);
    bool same = a.counts == b.counts;
    for (std::size_t i = 0; same && i < a.records.size(); ++i) {
      same = a.records[i].jumps.size() == b.records[i].jumps.size();
      for (std::size_t k = 0; same && k < a.records[i].jumps.size(); ++k)
        same = a.records[i].jumps[k].t == b.records[i].jumps[k].t &&
               a.records[i].jumps[k].channel == b.records[i].jumps[k].channel;
    }
    ok = check("deterministic re-run, bit-identical", same) && ok;
  }

  // Pure dephasing gamma_pd = gamma/2 gives I = 0.5 by both estimators.
  {
    ChannelSet ch;
    ch.gamma = 0.5;
    ch.pure_dephasing = 0.25;
    CorrelationOptions co;
    co.steps = {0.002, 1};
    co.stride = 5;
    const auto f = fom_from_me(regression_correlations(idle(4.0, 0.01), ch, Mat2::excited_state(), co));
    HomOptions ho;
    ho.n_traj = 50000;
    ho.workers = workers();
    ho.seed = 21;
    const EmitterPair::State ee{0.0, 0.0, 0.0, 1.0};
    const auto a = run_hom_pair(idle(2.0, 0.01), ch, {HomConfig::Mode::interfering}, ho, ee);
    ho.seed = 22;
    const auto b = run_hom_pair(idle(2.0, 0.01), ch, {HomConfig::Mode::distinguishable}, ho, ee);
    const auto i = indistinguishability_from_hom(a.coincidence, b.coincidence);
    detail("I oracle %.4f, HOM %.4f +- %.4f", value_or_nan(f.indist), value_or_nan(i), se_or_nan(i));
    ok = check("dephasing I = 0.5 +- 0.01 (oracle and HOM)",
               f.indist && std::abs(f.indist->value - 0.5) <= 0.01 && i && std::abs(i->value - 0.5) <= 0.01) &&
         ok;
  }

  verdict(8, ok, t0);
}

}  // namespace

int main() {
  std::printf("%s acceptance, %u worker(s)\n", std::string(kVersion).c_str(), workers());
  try {
    criterion1();
    criterion2();
    criterion3();
    const auto runs = criterion4();
    criterion5();
    criterion6(runs[3]);
    criterion7(runs[2]);
    criterion8();
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
