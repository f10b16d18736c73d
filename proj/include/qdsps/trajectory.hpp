#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/stepping.hpp"

namespace qdsps {

template <std::size_t D>
using Ket = std::array<cplx, D>;

template <std::size_t D>
double norm2(const Ket<D>& k) {
  double s = 0.0;
  for (const auto& c : k) s += std::norm(c);
  return s;
}

struct Jump {
  double t = 0.0;
  int channel = 0;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<Jump> jumps;
  /// Norm left at the end of the run relative to the last redraw threshold.
  double final_norm_check = 0.0;
  /// Normalized excited population at the requested probe times.
  std::vector<double> probes;

  std::size_t count(int channel) const {
    std::size_t n = 0;
    for (const auto& j : jumps) n += j.channel == channel;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Random numbers

/// splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based per-trajectory seed: independent of scheduling.
constexpr std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ull);
}

/// Uniform double in (0,1) from a 64-bit engine; never returns 0.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : eng_(seed) {}
  double operator()() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Shared, read-only drive data for a batch of trajectories

/// Step plan plus coefficients at every node and midpoint; built once and
/// shared by all trajectories of an ensemble.
struct DriveContext {
  const EnvelopeGrid* envelope = nullptr;
  const ChannelSet* channels = nullptr;
  StepPlan plan;
  std::vector<double> t_node;
  std::vector<double> h;
  std::vector<Coefficients> node;
  std::vector<Coefficients> mid;
  ChannelRates free_rates;
  double free_detuning = 0.0;

  Coefficients at(double t) const { return coefficients_at(*envelope, *channels, t); }
  std::size_t steps() const { return h.size(); }
};

inline DriveContext make_drive_context(const EnvelopeGrid& e, const ChannelSet& ch, const StepOptions& opt = {}) {
  DriveContext c;
  c.envelope = &e;
  c.channels = &ch;
  c.plan = plan_steps(e, ch, opt);
  const std::size_t n = c.plan.step_count();
  c.t_node.reserve(n + 1);
  c.h.reserve(n);
  c.node.reserve(n + 1);
  c.mid.reserve(n);
  c.t_node.push_back(c.plan.t_start());
  c.node.push_back(c.at(c.plan.t_start()));
  for (const auto& b : c.plan.blocks) {
    for (std::size_t s = 0; s < b.count; ++s) {
      const double t = b.t + b.h * static_cast<double>(s);
      c.h.push_back(b.h);
      c.mid.push_back(c.at(t + 0.5 * b.h));
      c.t_node.push_back(t + b.h);
      c.node.push_back(c.at(t + b.h));
    }
  }
  c.free_rates = ch.free_rates();
  c.free_detuning = e.hamiltonian_detuning(e.t_end() + 1.0);
  return c;
}

// ---------------------------------------------------------------------------
// Models

/// One emitter, basis {|g>, |e>}; channels follow the Channel enum.
struct SingleEmitter {
  static constexpr std::size_t dim = 2;
  static constexpr int channel_count = kChannelCount;
  using State = Ket<2>;

  State deriv(const State& s, const Coefficients& c) const {
    const cplx h = 0.5 * c.drive;
    const double kappa = c.rates.radiative + c.rates.dephasing;
    static constexpr cplx i{0.0, 1.0};
    return {-i * std::conj(h) * s[1] - 0.5 * c.rates.excitation * s[0],
            -i * (h * s[0] + c.detuning * s[1]) - 0.5 * kappa * s[1]};
  }

  double weight(int k, const State& s, const ChannelRates& r) const {
    switch (static_cast<Channel>(k)) {
      case Channel::radiative: return r.radiative * std::norm(s[1]);
      case Channel::dephasing: return r.dephasing * std::norm(s[1]);
      case Channel::excitation: return r.excitation * std::norm(s[0]);
    }
    return 0.0;
  }

  State jump(int k, const State& s) const {
    switch (static_cast<Channel>(k)) {
      case Channel::radiative: return {s[1], 0.0};
      case Channel::dephasing: return {0.0, s[1]};
      case Channel::excitation: return {0.0, s[0]};
    }
    return s;
  }

  /// Free (undriven) evolution: diagonal energies and norm decay rates.
  std::array<double, dim> free_energy(double delta) const { return {0.0, delta}; }
  std::array<double, dim> free_decay(const ChannelRates& r) const {
    return {r.excitation, r.radiative + r.dephasing};
  }

  double excited(const State& s) const { return std::norm(s[1]) / norm2(s); }
  bool is_photon(int k) const { return k == static_cast<int>(Channel::radiative); }
};

/// Hong-Ou-Mandel configuration for a pair of identically driven emitters.
struct HomConfig {
  enum class Mode { interfering, distinguishable };
  Mode mode = Mode::interfering;
  /// Draw a uniform drive phase for emitter 2 per trajectory.
  bool random_phase = false;
  /// Extra detuning of emitter 2 (rad/ps) and scale of its drive.
  double emitter2_detuning = 0.0;
  double emitter2_drive_scale = 1.0;
};

/// Two emitters feeding the two inputs of a 50/50 beamsplitter.
/// Basis index 2 n1 + n2 with n_k = 1 if emitter k is excited.
/// Interfering channels: 0 = D+, 1 = D-, with D+- = sqrt(gamma/2)(s1 +- s2).
/// Distinguishable channels: 0/1 = emitter 1 to port +/-, 2/3 = emitter 2 to port +/-.
/// Phonon channels follow the photon channels: dephasing 1, dephasing 2, excitation 1, excitation 2.
struct EmitterPair {
  static constexpr std::size_t dim = 4;
  static constexpr int channel_count = 8;
  using State = Ket<4>;

  HomConfig::Mode mode = HomConfig::Mode::interfering;
  cplx drive2_factor{1.0, 0.0};
  double detuning2_offset = 0.0;

  int photon_channels() const { return mode == HomConfig::Mode::interfering ? 2 : 4; }

  State deriv(const State& s, const Coefficients& c) const {
    static constexpr cplx i{0.0, 1.0};
    const cplx h1 = 0.5 * c.drive;
    const cplx h2 = h1 * drive2_factor;
    const double d1 = c.detuning, d2 = c.detuning + detuning2_offset;
    const double kappa = c.rates.radiative + c.rates.dephasing;
    const double up = c.rates.excitation;
    return {
        -i * (std::conj(h1) * s[2] + std::conj(h2) * s[1]) - up * s[0],
        -i * (std::conj(h1) * s[3] + h2 * s[0] + d2 * s[1]) - 0.5 * (up + kappa) * s[1],
        -i * (h1 * s[0] + std::conj(h2) * s[3] + d1 * s[2]) - 0.5 * (up + kappa) * s[2],
        -i * (h1 * s[1] + h2 * s[2] + (d1 + d2) * s[3]) - kappa * s[3],
    };
  }

  /// Image of a channel operator without its rate prefactor.
  State apply(int k, const State& s) const {
    const int np = photon_channels();
    if (k < np) {
      if (mode == HomConfig::Mode::interfering) {
        const double sign = k == 0 ? 1.0 : -1.0;
        return {s[2] + sign * s[1], s[3], sign * s[3], 0.0};
      }
      if (k < 2) return {s[2], s[3], 0.0, 0.0};  // sigma1-
      return {s[1], 0.0, s[3], 0.0};             // sigma2-
    }
    switch (k - np) {
      case 0: return {0.0, 0.0, s[2], s[3]};  // P_e of emitter 1
      case 1: return {0.0, s[1], 0.0, s[3]};  // P_e of emitter 2
      case 2: return {0.0, 0.0, s[0], s[1]};  // sigma1+
      case 3: return {0.0, s[0], 0.0, s[2]};  // sigma2+
    }
    return {};
  }

  double weight(int k, const State& s, const ChannelRates& r) const {
    const int np = photon_channels();
    if (k >= np + 4) return 0.0;
    double rate = 0.0;
    if (k < np) rate = 0.5 * r.radiative;
    else if (k - np < 2) rate = r.dephasing;
    else rate = r.excitation;
    if (rate == 0.0) return 0.0;
    return rate * norm2(apply(k, s));
  }

  State jump(int k, const State& s) const { return apply(k, s); }

  std::array<double, dim> free_energy(double delta) const {
    const double d2 = delta + detuning2_offset;
    return {0.0, d2, delta, delta + d2};
  }
  std::array<double, dim> free_decay(const ChannelRates& r) const {
    const double k = r.radiative + r.dephasing;
    return {2.0 * r.excitation, r.excitation + k, r.excitation + k, 2.0 * k};
  }

  double excited(const State& s) const { return (std::norm(s[2]) + std::norm(s[3])) / norm2(s); }

  /// Beamsplitter output port of a channel: +1, -1, or 0 for non-photon channels.
  int port(int k) const {
    if (k >= photon_channels()) return 0;
    return (k % 2 == 0) ? 1 : -1;
  }
  bool is_photon(int k) const { return k < photon_channels(); }
};

// ---------------------------------------------------------------------------
// Jump unraveling

struct TrajectoryOptions {
  /// Probe times (ascending, inside the grid) for the excited population.
  std::vector<double> probe_times;
  /// Continue past the grid end with the exact free evolution until no
  /// further jump can occur.
  bool free_tail = true;
  /// Bisection depth for jump times: resolution h / 2^depth.
  int bisection_depth = 4;
};

namespace detail {

template <class Model>
typename Model::State rk4_ket(const Model& m, const typename Model::State& s, const Coefficients& c0,
                              const Coefficients& c1, const Coefficients& c2, double h) {
  using S = typename Model::State;
  auto axpy = [](const S& x, double a, const S& k) {
    S out;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * k[i];
    return out;
  };
  const S k1 = m.deriv(s, c0);
  const S k2 = m.deriv(axpy(s, 0.5 * h, k1), c1);
  const S k3 = m.deriv(axpy(s, 0.5 * h, k2), c1);
  const S k4 = m.deriv(axpy(s, h, k3), c2);
  S out;
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <class Model>
class Unraveler {
 public:
  using State = typename Model::State;

  Unraveler(const DriveContext& ctx, const Model& model, const TrajectoryOptions& opt, std::uint64_t seed)
      : ctx_(ctx), model_(model), opt_(opt), rng_(seed) {
    rec_.seed = seed;
  }

  TrajectoryRecord run(const State& psi0) {
    psi_ = psi0;
    const double n0 = norm2(psi_);
    require(n0 > 0.0, "trajectory: zero initial state");
    for (auto& c : psi_) c /= std::sqrt(n0);
    threshold_ = rng_();
    std::size_t probe = 0;
    const auto& probes = opt_.probe_times;
    const double t_begin = ctx_.t_node.front();
    while (probe < probes.size() && probes[probe] <= t_begin) {
      rec_.probes.push_back(model_.excited(psi_));
      ++probe;
    }
    for (std::size_t k = 0; k < ctx_.steps(); ++k) {
      advance(ctx_.t_node[k], ctx_.t_node[k + 1], ctx_.node[k], ctx_.mid[k], ctx_.node[k + 1]);
      const double t = ctx_.t_node[k + 1];
      while (probe < probes.size() && probes[probe] <= t + 1e-9 * ctx_.h[k]) {
        rec_.probes.push_back(model_.excited(psi_));
        ++probe;
      }
    }
    while (probe < probes.size()) {
      rec_.probes.push_back(model_.excited(psi_));
      ++probe;
    }
    if (opt_.free_tail) free_tail(ctx_.t_node.back());
    rec_.final_norm_check = norm2(psi_) / threshold_;
    return std::move(rec_);
  }

 private:
  /// Integrates from ta to tb (coefficients known at ta, midpoint, tb),
  /// resolving any number of jumps inside the interval.
  void advance(double ta, double tb, Coefficients ca, Coefficients cm, const Coefficients& cb) {
    while (true) {
      const double h = tb - ta;
      const double n0 = norm2(psi_);
      State next = rk4_ket(model_, psi_, ca, cm, cb, h);
      const double n1 = norm2(next);
      if (!(std::isfinite(n1)) || n1 > n0 * (1.0 + 1e-9))
        throw NumericalFault("trajectory: norm increased between jumps (dt too large?)");
      if (n1 > threshold_) {
        psi_ = next;
        return;
      }
      // Bisect the threshold crossing inside (0, h].
      double lo = 0.0, hi = h;
      for (int it = 0; it < opt_.bisection_depth; ++it) {
        const double mid = 0.5 * (lo + hi);
        const State s = substep(ta, mid, ca);
        if (norm2(s) > threshold_) lo = mid;
        else hi = mid;
      }
      const double tau = 0.5 * (lo + hi);
      const double tj = ta + tau;
      psi_ = substep(ta, tau, ca);
      const Coefficients cj = ctx_.at(tj);
      do_jump(tj, cj.rates);
      ta = tj;
      ca = cj;
      cm = ctx_.at(0.5 * (ta + tb));
    }
  }

  State substep(double ta, double tau, const Coefficients& ca) const {
    return rk4_ket(model_, psi_, ca, ctx_.at(ta + 0.5 * tau), ctx_.at(ta + tau), tau);
  }

  void do_jump(double t, const ChannelRates& rates) {
    std::array<double, Model::channel_count> w{};
    double total = 0.0;
    for (int k = 0; k < Model::channel_count; ++k) {
      w[static_cast<std::size_t>(k)] = model_.weight(k, psi_, rates);
      total += w[static_cast<std::size_t>(k)];
    }
    if (!(total > 0.0)) throw NumericalFault("trajectory: threshold crossed with no active channel");
    const double pick = rng_() * total;
    int chosen = Model::channel_count - 1;
    double acc = 0.0;
    for (int k = 0; k < Model::channel_count; ++k) {
      acc += w[static_cast<std::size_t>(k)];
      if (pick < acc) {
        chosen = k;
        break;
      }
    }
    while (w[static_cast<std::size_t>(chosen)] == 0.0 && chosen > 0) --chosen;
    psi_ = model_.jump(chosen, psi_);
    const double n = norm2(psi_);
    if (!(n > 0.0)) throw NumericalFault("trajectory: jump produced a null state");
    for (auto& c : psi_) c /= std::sqrt(n);
    rec_.jumps.push_back({t, chosen});
    threshold_ = rng_();
  }

  /// Undriven evolution after the grid: diagonal, so the norm is a sum of
  /// exponentials and the next jump time is found by root bracketing.
  void free_tail(double t) {
    const auto& rates = ctx_.free_rates;
    const auto energy = model_.free_energy(ctx_.free_detuning);
    const auto decay = model_.free_decay(rates);
    for (int guard = 0; guard < 1000; ++guard) {
      auto norm_at = [&](double tau) {
        double s = 0.0;
        for (std::size_t b = 0; b < Model::dim; ++b) s += std::norm(psi_[b]) * std::exp(-decay[b] * tau);
        return s;
      };
      double floor = 0.0;
      for (std::size_t b = 0; b < Model::dim; ++b)
        if (decay[b] == 0.0) floor += std::norm(psi_[b]);
      if (floor >= threshold_) return;
      double hi = 1.0;
      double slowest = std::numeric_limits<double>::infinity();
      for (std::size_t b = 0; b < Model::dim; ++b)
        if (decay[b] > 0.0 && std::norm(psi_[b]) > 0.0) slowest = std::min(slowest, decay[b]);
      if (std::isfinite(slowest)) hi = 1.0 / slowest;
      while (norm_at(hi) > threshold_) hi *= 2.0;
      double lo = 0.0;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (norm_at(mid) > threshold_) lo = mid;
        else hi = mid;
      }
      const double tau = 0.5 * (lo + hi);
      for (std::size_t b = 0; b < Model::dim; ++b)
        psi_[b] *= std::exp(cplx{-0.5 * decay[b], -energy[b]} * tau);
      t += tau;
      do_jump(t, rates);
    }
    throw NumericalFault("trajectory: runaway jump sequence in free decay");
  }

  const DriveContext& ctx_;
  const Model& model_;
  const TrajectoryOptions& opt_;
  Uniform rng_;
  State psi_{};
  double threshold_ = 1.0;
  TrajectoryRecord rec_;
};

}  // namespace detail

template <class Model>
TrajectoryRecord run_trajectory(const DriveContext& ctx, const Model& model, const typename Model::State& psi0,
                                std::uint64_t seed, const TrajectoryOptions& opt = {}) {
  detail::Unraveler<Model> u(ctx, model, opt, seed);
  return u.run(psi0);
}

/// Single emitter starting in |g>.
inline TrajectoryRecord run_trajectory(const EnvelopeGrid& e, const ChannelSet& ch, std::uint64_t seed,
                                       const StepOptions& steps = {}, const TrajectoryOptions& opt = {}) {
  const auto ctx = make_drive_context(e, ch, steps);
  return run_trajectory(ctx, SingleEmitter{}, SingleEmitter::State{1.0, 0.0}, seed, opt);
}

}  // namespace qdsps
