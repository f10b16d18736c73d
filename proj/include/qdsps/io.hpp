#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "qdsps/correlations.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fom.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/phonon.hpp"
#include "qdsps/pipeline.hpp"
#include "qdsps/spectrum.hpp"
#include "qdsps/units.hpp"

namespace qdsps::io {

namespace detail {

inline std::ofstream open(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write '" + path + "'");
  f.precision(12);
  return f;
}

}  // namespace detail

inline void write_envelope_csv(const std::string& path, const EnvelopeGrid& g) {
  auto f = detail::open(path);
  f << "t_ps,re_env,im_env\n";
  for (std::size_t i = 0; i < g.size(); ++i) f << g.time(i) << ',' << g.env[i].real() << ',' << g.env[i].imag() << '\n';
}

/// Spectrum on the omega - omega0 axis in meV, dropping the empty far band.
inline void write_spectrum_csv(const std::string& path, const SpectralDensity& s, double floor = 1e-12) {
  auto f = detail::open(path);
  f << "omega_meV,power\n";
  const double pk = s.peak();
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && s.power[lo] < floor * pk) ++lo;
  while (hi > lo && s.power[hi - 1] < floor * pk) --hi;
  for (std::size_t i = lo; i < hi; ++i) f << units::rad_ps_to_mev(s.omega[i]) << ',' << s.power[i] << '\n';
}

inline void write_rates_csv(const std::string& path, const PhononRateTrace& r, double dephasing_factor = 1.0) {
  auto f = detail::open(path);
  f << "t_ps,gamma_pd_GHz,gamma_up_GHz\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    f << r.time(i) << ',' << units::rate_ps_to_ghz(dephasing_factor * r.gamma_pd[i]) << ','
      << units::rate_ps_to_ghz(r.gamma_up[i]) << '\n';
}

inline void write_population_csv(const std::string& path, const PopulationTrace& p, std::size_t every = 1) {
  auto f = detail::open(path);
  f << "t_ps,Nx\n";
  every = std::max<std::size_t>(1, every);
  for (std::size_t i = 0; i < p.t.size(); ++i)
    if (i % every == 0 || i + 1 == p.t.size()) f << p.t[i] << ',' << p.n[i] << '\n';
}

inline void write_correlation_csv(const std::string& path, const CorrelationGrid& g) {
  auto f = detail::open(path);
  f << "t_ps,tprime_ps,re_g1,im_g1,g2\n";
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = 0; b < g.size(); ++b)
      f << g.t[a] << ',' << g.t[b] << ',' << g.g1(a, b).real() << ',' << g.g1(a, b).imag() << ',' << g.g2(a, b)
        << '\n';
}

inline void write_jumps_csv(const std::string& path, const std::vector<TrajectoryRecord>& recs) {
  auto f = detail::open(path);
  f << "traj_id,t_ps,channel\n";
  for (std::size_t i = 0; i < recs.size(); ++i)
    for (const auto& j : recs[i].jumps) f << i << ',' << j.t << ',' << j.channel << '\n';
}

inline nlohmann::json to_json(const std::optional<Estimate>& e) {
  if (!e) return nullptr;
  return e->value;
}
inline nlohmann::json se_json(const std::optional<Estimate>& e) {
  if (!e) return nullptr;
  return e->se;
}

/// Estimator summary {eta, eta_se, g2, g2_se, indist, indist_se, n_traj, seed}
/// plus the oracle values and conventions.
inline nlohmann::json fom_json(const FiguresOfMerit& traj, const FiguresOfMerit& oracle, std::size_t n_traj,
                               std::uint64_t seed) {
  nlohmann::json j;
  j["eta"] = traj.eta.value;
  j["eta_se"] = traj.eta.se;
  j["g2"] = to_json(traj.g2);
  j["g2_se"] = se_json(traj.g2);
  j["indist"] = to_json(traj.indist);
  j["indist_se"] = se_json(traj.indist);
  j["n_traj"] = n_traj;
  j["seed"] = seed;
  j["eta_at_least_one"] = to_json(traj.eta_at_least_one);
  j["eta_at_least_one_se"] = se_json(traj.eta_at_least_one);
  j["indist_convention"] = traj.indist_convention;
  j["oracle"] = {{"eta", oracle.eta.value},
                 {"g2", to_json(oracle.g2)},
                 {"indist", to_json(oracle.indist)},
                 {"indist_convention", oracle.indist_convention}};
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  auto f = detail::open(path);
  f << text;
}

inline constexpr const char* kSweepHeader =
    "x,y,eta,eta_se,p1,p1_se,g2,g2_se,indist,indist_se,overlap,me_eta,me_g2,me_indist";

inline std::string sweep_row(const SweepPoint& p) {
  auto v = [](const std::optional<Estimate>& e, bool se) -> std::string {
    if (!e) return "nan";
    char b[32];
    std::snprintf(b, sizeof b, "%.10g", se ? e->se : e->value);
    return b;
  };
  auto d = [](double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.10g", x);
    return std::string(b);
  };
  std::string s = d(p.x) + ',' + d(p.y) + ',';
  if (p.trajectory) {
    const auto& t = *p.trajectory;
    s += d(t.eta.value) + ',' + d(t.eta.se) + ',' + v(t.eta_at_least_one, false) + ',' + v(t.eta_at_least_one, true) +
         ',' + v(t.g2, false) + ',' + v(t.g2, true) + ',' + v(t.indist, false) + ',' + v(t.indist, true);
  } else {
    s += "nan,nan,nan,nan,nan,nan,nan,nan";
  }
  s += ',' + d(p.overlap) + ',' + d(p.oracle.eta.value) + ',' + v(p.oracle.g2, false) + ',' + v(p.oracle.indist, false);
  return s;
}

}  // namespace qdsps::io
