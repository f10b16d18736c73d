#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fom.hpp"
#include "qdsps/trajectory.hpp"
#include "qdsps/units.hpp"

namespace qdsps {

/// Runs fn(i) for i in [0, n) on `workers` threads. Work is claimed by an
/// atomic counter; callers write results by index, so the outcome does not
/// depend on the schedule. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned extra = static_cast<unsigned>(std::min<std::size_t>(workers, n)) - 1;
  for (unsigned w = 0; w < extra; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Fixed-order pairwise summation: the result depends only on the inputs.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// Mean and standard error of the mean.
inline Estimate mean_se(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const double mean = pairwise_sum(x) / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (x[i] - mean) * (x[i] - mean);
  const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

struct EnsembleOptions {
  std::size_t n_traj = 5000;
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  StepOptions steps;
  TrajectoryOptions trajectory;
  bool keep_records = true;
};

struct EnsembleStats {
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
  /// Photon (radiative) jumps per trajectory, by trajectory index.
  std::vector<int> counts;
  /// histogram[m] = number of trajectories with m photons.
  std::vector<std::size_t> histogram;
  std::vector<TrajectoryRecord> records;
  /// Ensemble mean of the excited population at the probe times.
  std::vector<Estimate> probes;
};

inline std::vector<std::size_t> count_histogram(const std::vector<int>& counts) {
  int top = 0;
  for (int c : counts) top = std::max(top, c);
  std::vector<std::size_t> h(static_cast<std::size_t>(top) + 1, 0);
  for (int c : counts) ++h[static_cast<std::size_t>(c)];
  return h;
}

/// Ensemble of single-emitter trajectories from |g>, or from `initial`.
inline EnsembleStats run_ensemble(const EnvelopeGrid& e, const ChannelSet& ch, const EnsembleOptions& opt,
                                  SingleEmitter::State initial = {1.0, 0.0}) {
  require(opt.n_traj >= 1, "ensemble: n_traj must be >= 1");
  const auto ctx = make_drive_context(e, ch, opt.steps);
  const SingleEmitter model;
  std::vector<TrajectoryRecord> recs(opt.n_traj);
  parallel_for(opt.n_traj, opt.workers, [&](std::size_t i) {
    recs[i] = run_trajectory(ctx, model, initial, trajectory_seed(opt.seed, i), opt.trajectory);
  });

  EnsembleStats s;
  s.n_traj = opt.n_traj;
  s.seed = opt.seed;
  s.counts.resize(opt.n_traj);
  for (std::size_t i = 0; i < opt.n_traj; ++i)
    s.counts[i] = static_cast<int>(recs[i].count(static_cast<int>(Channel::radiative)));
  s.histogram = count_histogram(s.counts);
  const std::size_t np = opt.trajectory.probe_times.size();
  std::vector<double> col(opt.n_traj);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t i = 0; i < opt.n_traj; ++i) col[i] = recs[i].probes[p];
    s.probes.push_back(mean_se(col));
  }
  if (opt.keep_records) s.records = std::move(recs);
  return s;
}

inline std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

/// Mean photon number per pulse.
inline Estimate efficiency_from_counts(const EnsembleStats& s) { return mean_se(as_doubles(s.counts)); }

/// Probability of at least one photon per pulse.
inline Estimate emission_probability(const EnsembleStats& s) {
  std::vector<double> x(s.counts.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s.counts[i] > 0 ? 1.0 : 0.0;
  return mean_se(x);
}

/// Pulsed g2 = E[m(m-1)] / E[m]^2 with a bootstrap standard error.
inline std::optional<Estimate> g2_from_counts(const EnsembleStats& s, std::size_t resamples = 1000,
                                              std::uint64_t bootstrap_seed = 0x5EEDB007ull) {
  const std::size_t n = s.counts.size();
  if (n == 0) return std::nullopt;
  auto ratio = [](double sum_m, double sum_pairs, double count) -> std::optional<double> {
    if (sum_m <= 0.0) return std::nullopt;
    const double mean = sum_m / count;
    return (sum_pairs / count) / (mean * mean);
  };
  std::vector<double> m(n), pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.counts[i];
    pairs[i] = m[i] * (m[i] - 1.0);
  }
  const auto value = ratio(pairwise_sum(m), pairwise_sum(pairs), static_cast<double>(n));
  if (!value) return std::nullopt;

  std::mt19937_64 eng(bootstrap_seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> boot;
  boot.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    double sm = 0.0, sp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = pick(eng);
      sm += m[i];
      sp += pairs[i];
    }
    if (auto v = ratio(sm, sp, static_cast<double>(n))) boot.push_back(*v);
  }
  double se = 0.0;
  if (boot.size() > 1) {
    const double mu = pairwise_sum(boot) / static_cast<double>(boot.size());
    double var = 0.0;
    for (double b : boot) var += (b - mu) * (b - mu);
    se = std::sqrt(var / static_cast<double>(boot.size() - 1));
  }
  return Estimate{*value, se};
}

struct HbtResult {
  /// Coincidences per pulse pair at pulse delay k = -max_delay..max_delay.
  std::vector<double> histogram;
  int max_delay = 0;
  /// Central peak over mean side peak.
  std::optional<Estimate> g2;
};

/// Synthesized Hanbury Brown-Twiss measurement: every photon goes to
/// detector A or B by a fair coin; trajectory i plays the pulse i of a train.
/// The same-pulse A-B pair count is compared with the cross-pulse count of
/// neighbouring pulses.
inline HbtResult hbt_histogram(const EnsembleStats& s, int max_delay = 5, std::uint64_t coin_seed = 0xC01Full) {
  const std::size_t n = s.counts.size();
  require(max_delay >= 1, "hbt: max_delay must be >= 1");
  std::vector<double> a(n, 0.0), b(n, 0.0);
  Uniform coin(coin_seed);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < s.counts[i]; ++k) (coin() < 0.5 ? a[i] : b[i]) += 1.0;

  HbtResult r;
  r.max_delay = max_delay;
  r.histogram.assign(2 * static_cast<std::size_t>(max_delay) + 1, 0.0);
  for (int d = -max_delay; d <= max_delay; ++d) {
    const std::size_t ad = static_cast<std::size_t>(std::abs(d));
    if (ad >= n) continue;
    std::vector<double> x;
    x.reserve(n - ad);
    for (std::size_t i = 0; i + ad < n; ++i) x.push_back(d >= 0 ? a[i] * b[i + ad] : b[i] * a[i + ad]);
    r.histogram[static_cast<std::size_t>(d + max_delay)] = pairwise_sum(x) / static_cast<double>(x.size());
  }
  if (n < 2) return r;

  // Ratio of means with a delta-method error: x_i same-pulse, y_i neighbour.
  const std::size_t m = n - 1;
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = a[i] * b[i];
    y[i] = 0.5 * (a[i] * b[i + 1] + b[i] * a[i + 1]);
  }
  const double mx = pairwise_sum(x) / static_cast<double>(m);
  const double my = pairwise_sum(y) / static_cast<double>(m);
  if (my <= 0.0) return r;
  std::vector<double> vxx(m), vyy(m), vxy(m);
  for (std::size_t i = 0; i < m; ++i) {
    vxx[i] = (x[i] - mx) * (x[i] - mx);
    vyy[i] = (y[i] - my) * (y[i] - my);
    vxy[i] = (x[i] - mx) * (y[i] - my);
  }
  const double dn = static_cast<double>(m) * static_cast<double>(m > 1 ? m - 1 : 1);
  const double sxx = pairwise_sum(vxx) / dn, syy = pairwise_sum(vyy) / dn, sxy = pairwise_sum(vxy) / dn;
  const double q = mx / my;
  const double var = (sxx - 2.0 * q * sxy + q * q * syy) / (my * my);
  r.g2 = Estimate{q, std::sqrt(std::max(0.0, var))};
  return r;
}

// ---------------------------------------------------------------------------
// Hong-Ou-Mandel

struct HomResult {
  Estimate coincidence;
  std::size_t n_traj = 0;
  std::vector<int> plus_counts;
  std::vector<int> minus_counts;
};

struct HomOptions {
  std::size_t n_traj = 5000;
  std::uint64_t seed = 20240601;
  unsigned workers = 1;
  StepOptions steps;
  TrajectoryOptions trajectory;
};

/// Coincidence probability (at least one click in each output port) for two
/// independent, identically driven emitters starting in `initial`.
inline HomResult run_hom_pair(const EnvelopeGrid& e, const ChannelSet& ch, const HomConfig& cfg, const HomOptions& opt,
                              EmitterPair::State initial = {1.0, 0.0, 0.0, 0.0}) {
  require(opt.n_traj >= 1, "hom: n_traj must be >= 1");
  const auto ctx = make_drive_context(e, ch, opt.steps);
  HomResult res;
  res.n_traj = opt.n_traj;
  res.plus_counts.resize(opt.n_traj);
  res.minus_counts.resize(opt.n_traj);
  parallel_for(opt.n_traj, opt.workers, [&](std::size_t i) {
    const std::uint64_t seed = trajectory_seed(opt.seed, i);
    EmitterPair model;
    model.mode = cfg.mode;
    model.detuning2_offset = cfg.emitter2_detuning;
    double theta = 0.0;
    if (cfg.random_phase) {
      // Separate stream so the phase does not shift the jump sequence.
      Uniform u(splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ull));
      theta = units::two_pi * u();
    }
    model.drive2_factor = cfg.emitter2_drive_scale * std::polar(1.0, theta);
    const auto rec = run_trajectory(ctx, model, initial, seed, opt.trajectory);
    int plus = 0, minus = 0;
    for (const auto& j : rec.jumps) {
      const int p = model.port(j.channel);
      plus += p > 0;
      minus += p < 0;
    }
    res.plus_counts[i] = plus;
    res.minus_counts[i] = minus;
  });
  std::vector<double> hit(opt.n_traj);
  for (std::size_t i = 0; i < opt.n_traj; ++i) hit[i] = (res.plus_counts[i] > 0 && res.minus_counts[i] > 0) ? 1.0 : 0.0;
  res.coincidence = mean_se(hit);
  return res;
}

/// Visibility 1 - p_int / p_dist with first-order error propagation.
inline std::optional<Estimate> indistinguishability_from_hom(const Estimate& p_int, const Estimate& p_dist) {
  if (!(p_dist.value > 0.0)) return std::nullopt;
  const double q = p_int.value / p_dist.value;
  const double rel = std::hypot(p_int.se / p_dist.value, q * p_dist.se / p_dist.value);
  return Estimate{1.0 - q, rel};
}

}  // namespace qdsps
