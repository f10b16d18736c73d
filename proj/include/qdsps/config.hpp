#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/phonon.hpp"
#include "qdsps/pulses.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

inline constexpr std::string_view kVersion = "qdsps 1.0.0";

// Flat "dotted.key = value" configuration. Units at this boundary are meV,
// ueV (hole widths, dichromatic detuning), ps, K and GHz; everything is
// converted to rad/ps on the way in.

struct PhononConfig {
  bool enabled = true;
  PhononParams params;
  RateOptions rates;
  double dephasing_factor = 1.0;
  bool polaron_shift = false;
};

struct SolverConfig {
  /// Fine RK4 step in ps; 0 derives it from the envelope sample spacing.
  double dt = 0.0;
  std::size_t coarse_factor = 50;
  std::size_t stride = 20;
  std::size_t n_traj = 5000;
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  /// Run the HOM pair simulations (the costly part of a trajectory run).
  bool hom = true;
};

struct RunConfig {
  Preset preset = Preset::super_pulse;
  PulseParams pulse = preset_params(Preset::super_pulse);
  /// Dichromatic only: recalibrate Omega0 to area pi whenever t_p, delta or phi change.
  bool calibrate_amplitude = true;
  /// NARP only: keep the spectral hole in the envelope the solvers see.
  bool hole_in_dynamics = true;
  QubitParams qubit;
  PhononConfig phonon;
  SolverConfig solver;
  std::string out_dir = "out";
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size() || !std::isfinite(x))
    throw InvalidInput("config: '" + key + "' expects a number, got '" + v + "'");
  return x;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw InvalidInput("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw InvalidInput("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace detail

/// Ordered key/value pairs as read from text; later entries override earlier ones.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries parse_config_text(std::string_view text) {
  ConfigEntries out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config: line " + std::to_string(line_no) + " is not 'key = value'");
    auto key = detail::trim(std::string_view(s).substr(0, eq));
    auto value = detail::trim(std::string_view(s).substr(eq + 1));
    if (key.empty() || value.empty())
      throw InvalidInput("config: line " + std::to_string(line_no) + " has an empty key or value");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline ConfigEntries read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline void apply_pulse_key(RunConfig& c, const std::string& key, const std::string& v, bool& amp_given) {
  using namespace units;
  const std::string k = key.substr(6);  // after "pulse."
  auto num = [&] { return parse_double(key, v); };
  auto unknown = [&]() -> void {
    throw InvalidInput("config: '" + key + "' does not apply to preset " + std::string(preset_name(c.preset)));
  };
  if (auto* d = std::get_if<DichromaticParams>(&c.pulse)) {
    if (k == "t_p_ps") d->t_p = num();
    else if (k == "delta_ueV") d->delta = uev_to_rad_ps(num());
    else if (k == "phi_rad") d->phi = num();
    else if (k == "omega0_meV") d->omega0_amp = mev_to_rad_ps(num()), amp_given = true;
    else if (k == "calibrate") c.calibrate_amplitude = parse_bool(key, v);
    else unknown();
  } else if (auto* n = std::get_if<NarpParams>(&c.pulse)) {
    if (k == "t_p_ps") n->t_p = num();
    else if (k == "omega0_meV") n->omega0_amp = mev_to_rad_ps(num());
    else if (k == "alpha_ps2") n->alpha = num();
    else if (k == "delta_ueV") n->delta = uev_to_rad_ps(num());
    else if (k == "fft_half_window_ps") n->fft_half_window = num();
    else if (k == "fft_samples") n->fft_samples = parse_uint(key, v);
    else if (k == "flip_chirp") {
      if (parse_bool(key, v)) n->alpha = -n->alpha;
    } else if (k == "hole_in_dynamics") c.hole_in_dynamics = parse_bool(key, v);
    else unknown();
  } else if (auto* s = std::get_if<SuperParams>(&c.pulse)) {
    if (k == "omega1_meV") s->omega1 = mev_to_rad_ps(num());
    else if (k == "omega2_meV") s->omega2 = mev_to_rad_ps(num());
    else if (k == "t_p1_ps") s->t_p1 = num();
    else if (k == "t_p2_ps") s->t_p2 = num();
    else if (k == "delta1_meV") s->delta1 = mev_to_rad_ps(num());
    else if (k == "delta2_meV") s->delta2 = mev_to_rad_ps(num());
    else if (k == "tau_ps") s->tau = num();
    else if (k == "phi_rad") s->phi = num();
    else unknown();
  }
}

}  // namespace detail

/// Applies entries on top of `base`. A `preset` entry resets the pulse block to
/// that preset before any pulse.* key is read, wherever it appears.
inline RunConfig apply_config(RunConfig c, const ConfigEntries& entries) {
  using namespace units;
  for (const auto& [k, v] : entries) {
    if (k == "preset") {
      c.preset = parse_preset(v);
      c.pulse = preset_params(c.preset);
    }
  }
  bool amp_given = false;
  for (const auto& [k, v] : entries) {
    auto num = [&] { return detail::parse_double(k, v); };
    if (k == "preset") continue;
    if (k.rfind("pulse.", 0) == 0) detail::apply_pulse_key(c, k, v, amp_given);
    else if (k == "qubit.gamma_GHz") c.qubit.gamma = rate_ghz_to_ps(num());
    else if (k == "phonon.enabled") c.phonon.enabled = detail::parse_bool(k, v);
    else if (k == "phonon.alpha_ps2") c.phonon.params.alpha_ph = num();
    else if (k == "phonon.omega_b_meV") c.phonon.params.omega_b = mev_to_rad_ps(num());
    else if (k == "phonon.T_K") c.phonon.params.temperature = num();
    else if (k == "phonon.excitation_exponent") c.phonon.rates.excitation_exponent = static_cast<int>(detail::parse_uint(k, v));
    else if (k == "phonon.dephasing_factor") c.phonon.dephasing_factor = num();
    else if (k == "phonon.nominal_detuning") c.phonon.rates.use_nominal_detuning = detail::parse_bool(k, v);
    else if (k == "phonon.polaron_shift") c.phonon.polaron_shift = detail::parse_bool(k, v);
    else if (k == "solver.dt_ps") c.solver.dt = num();
    else if (k == "solver.coarse_factor") c.solver.coarse_factor = detail::parse_uint(k, v);
    else if (k == "solver.stride") c.solver.stride = detail::parse_uint(k, v);
    else if (k == "solver.n_traj") c.solver.n_traj = detail::parse_uint(k, v);
    else if (k == "solver.seed") c.solver.seed = detail::parse_uint(k, v);
    else if (k == "solver.workers") c.solver.workers = static_cast<unsigned>(detail::parse_uint(k, v));
    else if (k == "solver.hom") c.solver.hom = detail::parse_bool(k, v);
    else if (k == "output.dir") c.out_dir = v;
    else throw InvalidInput("config: unknown key '" + k + "'");
  }
  if (auto* d = std::get_if<DichromaticParams>(&c.pulse); d && c.calibrate_amplitude && !amp_given)
    d->omega0_amp = calibrate_dichromatic_amplitude(*d).value;
  return c;
}

inline void validate(const RunConfig& c) {
  c.qubit.validate();
  std::visit([](const auto& p) { p.validate(); }, c.pulse);
  if (c.phonon.enabled) c.phonon.params.validate();
  require(c.phonon.rates.excitation_exponent == 1 || c.phonon.rates.excitation_exponent == 2,
          "config: phonon.excitation_exponent must be 1 or 2");
  require(c.phonon.dephasing_factor >= 0.0, "config: phonon.dephasing_factor must be non-negative");
  require(c.solver.dt >= 0.0, "config: solver.dt_ps must be non-negative");
  require(c.solver.coarse_factor >= 1, "config: solver.coarse_factor must be >= 1");
  require(c.solver.stride >= 1, "config: solver.stride must be >= 1");
  require(c.solver.n_traj >= 1, "config: solver.n_traj must be >= 1");
  require(c.solver.workers >= 1, "config: solver.workers must be >= 1");
}

/// Fully resolved configuration in the input format; reading it back gives
/// the same RunConfig.
inline std::string to_config_text(const RunConfig& c) {
  using namespace units;
  using detail::fmt;
  std::ostringstream o;
  auto b = [](bool x) { return x ? "true" : "false"; };
  o << "# " << kVersion << "\n";
  o << "preset = " << preset_name(c.preset) << "\n";
  if (const auto* d = std::get_if<DichromaticParams>(&c.pulse)) {
    o << "pulse.t_p_ps = " << fmt(d->t_p) << "\n";
    o << "pulse.delta_ueV = " << fmt(rad_ps_to_uev(d->delta)) << "\n";
    o << "pulse.phi_rad = " << fmt(d->phi) << "\n";
    o << "pulse.omega0_meV = " << fmt(rad_ps_to_mev(d->omega0_amp)) << "\n";
  } else if (const auto* n = std::get_if<NarpParams>(&c.pulse)) {
    o << "pulse.t_p_ps = " << fmt(n->t_p) << "\n";
    o << "pulse.omega0_meV = " << fmt(rad_ps_to_mev(n->omega0_amp)) << "\n";
    o << "pulse.alpha_ps2 = " << fmt(n->alpha) << "\n";
    o << "pulse.delta_ueV = " << fmt(rad_ps_to_uev(n->delta)) << "\n";
    o << "pulse.fft_half_window_ps = " << fmt(n->fft_half_window) << "\n";
    o << "pulse.fft_samples = " << n->fft_samples << "\n";
    o << "pulse.hole_in_dynamics = " << b(c.hole_in_dynamics) << "\n";
  } else if (const auto* s = std::get_if<SuperParams>(&c.pulse)) {
    o << "pulse.omega1_meV = " << fmt(rad_ps_to_mev(s->omega1)) << "\n";
    o << "pulse.omega2_meV = " << fmt(rad_ps_to_mev(s->omega2)) << "\n";
    o << "pulse.t_p1_ps = " << fmt(s->t_p1) << "\n";
    o << "pulse.t_p2_ps = " << fmt(s->t_p2) << "\n";
    o << "pulse.delta1_meV = " << fmt(rad_ps_to_mev(s->delta1)) << "\n";
    o << "pulse.delta2_meV = " << fmt(rad_ps_to_mev(s->delta2)) << "\n";
    o << "pulse.tau_ps = " << fmt(s->tau) << "\n";
    o << "pulse.phi_rad = " << fmt(s->phi) << "\n";
  }
  o << "qubit.gamma_GHz = " << fmt(rate_ps_to_ghz(c.qubit.gamma)) << "\n";
  o << "phonon.enabled = " << b(c.phonon.enabled) << "\n";
  o << "phonon.alpha_ps2 = " << fmt(c.phonon.params.alpha_ph) << "\n";
  o << "phonon.omega_b_meV = " << fmt(rad_ps_to_mev(c.phonon.params.omega_b)) << "\n";
  o << "phonon.T_K = " << fmt(c.phonon.params.temperature) << "\n";
  o << "phonon.excitation_exponent = " << c.phonon.rates.excitation_exponent << "\n";
  o << "phonon.dephasing_factor = " << fmt(c.phonon.dephasing_factor) << "\n";
  o << "phonon.nominal_detuning = " << b(c.phonon.rates.use_nominal_detuning) << "\n";
  o << "phonon.polaron_shift = " << b(c.phonon.polaron_shift) << "\n";
  o << "solver.dt_ps = " << fmt(c.solver.dt) << "\n";
  o << "solver.coarse_factor = " << c.solver.coarse_factor << "\n";
  o << "solver.stride = " << c.solver.stride << "\n";
  o << "solver.n_traj = " << c.solver.n_traj << "\n";
  o << "solver.seed = " << c.solver.seed << "\n";
  o << "solver.workers = " << c.solver.workers << "\n";
  o << "solver.hom = " << b(c.solver.hom) << "\n";
  o << "output.dir = " << c.out_dir << "\n";
  return o.str();
}

inline RunConfig preset_config(Preset p) {
  RunConfig c;
  c.preset = p;
  c.pulse = preset_params(p);
  return c;
}

}  // namespace qdsps
