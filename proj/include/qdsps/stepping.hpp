#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/pulses.hpp"

namespace qdsps {

/// Everything a solver needs at one instant.
struct Coefficients {
  cplx drive;      // env(t), rad/ps
  double detuning; // Delta entering H/hbar
  ChannelRates rates;
};

inline Coefficients coefficients_at(const EnvelopeGrid& e, const ChannelSet& ch, double t) {
  return {e.envelope_at(t), e.hamiltonian_detuning(t), ch.at(t)};
}

/// A run of `count` equal RK4 steps of length h starting at t.
struct StepBlock {
  double t = 0.0;
  double h = 0.0;
  std::size_t count = 0;

  double t_end() const { return t + h * static_cast<double>(count); }
};

struct StepPlan {
  std::vector<StepBlock> blocks;
  /// Fine step length; strides for correlation sampling count in these units.
  double h_fine = 0.0;

  double t_start() const { return blocks.empty() ? 0.0 : blocks.front().t; }
  double t_end() const { return blocks.empty() ? 0.0 : blocks.back().t_end(); }
  std::size_t step_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.count;
    return n;
  }

  StepPlan halved() const {
    StepPlan p = *this;
    p.h_fine *= 0.5;
    for (auto& b : p.blocks) {
      b.h *= 0.5;
      b.count *= 2;
    }
    return p;
  }
};

/// Automatically chosen steps stay at this fraction of the stability bound;
/// at h f = 0.05 RK4 loses < 1e-7 purity over a lossless pulse.
inline constexpr double kAutoStepFraction = 0.4;

struct StepOptions {
  /// Fine step (ps); zero derives it from the envelope sample spacing.
  double dt = 0.0;
  /// Longest coarse step in units of the fine step.
  std::size_t coarse_factor = 50;
};

/// Fastest local frequency the RK4 step has to resolve at sample i.
inline double local_demand(const EnvelopeGrid& e, const ChannelSet& ch, std::size_t i, double peak) {
  const std::size_t n = e.size();
  const double t = e.time(i);
  const std::size_t lo = i == 0 ? 0 : i - 1;
  const std::size_t hi = i + 1 == n ? i : i + 1;
  const double span = e.dt * static_cast<double>(hi - lo);
  const double slope = hi > lo ? std::abs(e.env[hi] - e.env[lo]) / span : 0.0;
  double phase_rate = slope / (std::abs(e.env[i]) + 1e-3 * peak);
  // A chirped tail rotates fast even where it is tiny.
  if (hi > lo && std::abs(e.env[lo]) > 1e-12 * peak && std::abs(e.env[hi]) > 1e-12 * peak)
    phase_rate = std::max(phase_rate, std::abs(std::arg(e.env[hi] * std::conj(e.env[lo]))) / span);
  return std::abs(e.hamiltonian_detuning(t)) + std::abs(e.env[i]) + phase_rate + ch.at(t).total();
}

/// Fine steps inside the drive, coarse steps (a divisor of coarse_factor
/// times the fine step) in blocks where the local demand allows it.
inline StepPlan plan_steps(const EnvelopeGrid& e, const ChannelSet& ch, const StepOptions& opt = {}) {
  e.validate();
  ch.validate();
  // Grids are sampled at half the stability bound, so 2 kAutoStepFraction dt
  // puts the fine step at kAutoStepFraction of it.
  const double h = opt.dt > 0.0 ? opt.dt : 2.0 * kAutoStepFraction * e.dt;
  const double bound = kStabilityFraction * units::two_pi;
  const double coarse_bound = kAutoStepFraction * bound;
  if (opt.dt > 0.0) {
    double f = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      f = std::max(f, std::abs(e.hamiltonian_detuning(e.time(i))) + std::abs(e.env[i]));
    f += ch.max_rate();
    require(h * f <= bound * (1.0 + 1e-9), "solver: dt too large for the fastest drive frequency");
  }
  const std::size_t k = std::max<std::size_t>(1, opt.coarse_factor);
  const double span = e.t_end() - e.t0;
  const auto n_fine = static_cast<std::size_t>(std::floor(span / h + 1e-9));
  const double peak = e.peak_magnitude();

  StepPlan plan;
  plan.h_fine = h;
  auto push = [&](double t, double step, std::size_t count) {
    if (count == 0) return;
    if (!plan.blocks.empty()) {
      auto& last = plan.blocks.back();
      if (last.h == step && std::abs(last.t_end() - t) < 1e-9 * step) {
        last.count += count;
        return;
      }
    }
    plan.blocks.push_back({t, step, count});
  };

  std::size_t done = 0;
  while (done < n_fine) {
    const std::size_t len = std::min(k, n_fine - done);
    const double t = e.t0 + h * static_cast<double>(done);
    std::size_t m = 1;
    if (len == k && k > 1) {
      // Demand over the samples covered by this block.
      const double t_hi = t + h * static_cast<double>(len);
      auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor((t - e.t0) / e.dt)));
      auto i1 = std::min(e.size() - 1, static_cast<std::size_t>(std::ceil((t_hi - e.t0) / e.dt)));
      double f = 0.0;
      for (std::size_t i = i0; i <= i1; ++i) f = std::max(f, local_demand(e, ch, i, peak));
      for (std::size_t cand = k; cand > 1; --cand) {
        if (k % cand != 0) continue;
        if (h * static_cast<double>(cand) * f <= coarse_bound) {
          m = cand;
          break;
        }
      }
    }
    push(t, h * static_cast<double>(m), len / m);
    done += len;
  }
  const double rest = span - h * static_cast<double>(n_fine);
  if (rest > 1e-9 * h) push(e.t0 + h * static_cast<double>(n_fine), rest, 1);
  require(!plan.blocks.empty(), "solver: empty time span");
  return plan;
}

}  // namespace qdsps
