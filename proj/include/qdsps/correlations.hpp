#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/fom.hpp"
#include "qdsps/master_equation.hpp"
#include "qdsps/stepping.hpp"

namespace qdsps {

struct CorrelationOptions {
  StepOptions steps;
  /// Two-time sampling stride in fine steps (coarse steps always sample).
  std::size_t stride = 20;
  /// Keep every k-th sample of the two-time grid for export; 0 keeps none.
  std::size_t keep_every = 0;
};

/// Two-time correlations on the kept samples:
/// g1(a,b) = <sigma+(t_a) sigma-(t_b)>, g2(a,b) = <sigma+(t_a) sigma+(t_b) sigma-(t_b) sigma-(t_a)>.
struct CorrelationGrid {
  std::vector<double> t;
  std::vector<cplx> g1_values;
  std::vector<double> g2_values;

  std::size_t size() const { return t.size(); }
  cplx g1(std::size_t a, std::size_t b) const { return g1_values[a * t.size() + b]; }
  double g2(std::size_t a, std::size_t b) const { return g2_values[a * t.size() + b]; }
};

struct CorrelationResult {
  /// Sample times inside the envelope grid, and N there.
  std::vector<double> sample_t;
  std::vector<double> sample_n;
  /// Full-square integrals including the analytic free-decay tail.
  double int_n = 0.0;
  double int_g1_sq = 0.0;
  double int_g2 = 0.0;
  /// Fine-step population trace and its integral (with tail).
  PopulationTrace population;
  double int_n_fine = 0.0;
  double gamma = 0.0;
  CorrelationGrid grid;
};

namespace detail {

/// Superoperator of one sampling interval, stored as images of the basis.
struct Propagator {
  std::array<Mat2, 4> images;

  Mat2 apply(const Mat2& x) const {
    return x.gg * images[0] + x.ge * images[1] + x.eg * images[2] + x.ee * images[3];
  }
};

}  // namespace detail

inline detail::Propagator identity_propagator() {
  detail::Propagator p;
  p.images[0] = {1.0, 0.0, 0.0, 0.0};
  p.images[1] = {0.0, 1.0, 0.0, 0.0};
  p.images[2] = {0.0, 0.0, 1.0, 0.0};
  p.images[3] = {0.0, 0.0, 0.0, 1.0};
  return p;
}

/// Quantum-regression two-time correlations. The state is propagated once
/// with a chain of interval superoperators; each G(t, .) row then costs one
/// 4x4 application per later sample. Beyond the grid the emitter decays
/// freely, which is integrated in closed form.
inline CorrelationResult regression_correlations(const EnvelopeGrid& e, const ChannelSet& ch,
                                                 const DensityMatrix2& rho0, const CorrelationOptions& opt = {}) {
  using detail::Propagator;
  const auto free = ch.free_rates();
  require(free.radiative > 0.0, "correlations: radiative rate must be positive");
  require(opt.stride >= 1, "correlations: stride must be >= 1");
  const auto plan = plan_steps(e, ch, opt.steps);

  CorrelationResult res;
  res.gamma = free.radiative;
  std::vector<Propagator> chain;
  std::vector<Mat2> rho_s;
  res.sample_t.push_back(plan.t_start());
  rho_s.push_back(rho0);
  res.population.t.push_back(plan.t_start());
  res.population.n.push_back(rho0.excited());

  auto id = identity_propagator();
  std::array<Mat2, 5> xs{id.images[0], id.images[1], id.images[2], id.images[3], rho0};
  double units_since = 0.0;
  const std::size_t total_steps = plan.step_count();
  std::size_t step_index = 0;
  integrate_plan(e, ch, plan, xs, [&](double t, const std::array<Mat2, 5>& x) {
    ++step_index;
    res.population.t.push_back(t);
    res.population.n.push_back(x[4].excited());
    const double h = t - res.population.t[res.population.t.size() - 2];
    units_since += h / plan.h_fine;
    if (units_since + 1e-9 >= static_cast<double>(opt.stride) || step_index == total_steps) {
      chain.push_back({{x[0], x[1], x[2], x[3]}});
      rho_s.push_back(x[4]);
      res.sample_t.push_back(t);
      xs[0] = id.images[0], xs[1] = id.images[1], xs[2] = id.images[2], xs[3] = id.images[3];
      units_since = 0.0;
    }
  });

  const std::size_t m = res.sample_t.size();
  if (!(std::isfinite(rho_s.back().ee.real()) && std::abs(rho_s.back().trace() - 1.0) < 1e-6))
    throw NumericalFault("correlations: state lost normalization");

  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double d = res.sample_t[i + 1] - res.sample_t[i];
    w[i] += 0.5 * d;
    w[i + 1] += 0.5 * d;
  }
  res.sample_n.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.sample_n[i] = rho_s[i].excited();

  const double g = free.radiative;
  const double coh = 0.5 * (free.radiative + free.dephasing);
  const double n_end = rho_s.back().excited();

  double int_n = n_end / g;
  for (std::size_t i = 0; i < m; ++i) int_n += w[i] * res.sample_n[i];
  res.int_n = int_n;
  res.int_n_fine = integrate_population(res.population) + n_end / g;

  const std::size_t keep = opt.keep_every;
  std::vector<std::size_t> kept_index(m, static_cast<std::size_t>(-1));
  if (keep > 0) {
    for (std::size_t i = 0; i < m; i += keep) {
      kept_index[i] = res.grid.t.size();
      res.grid.t.push_back(res.sample_t[i]);
    }
    const std::size_t k = res.grid.t.size();
    res.grid.g1_values.assign(k * k, cplx{});
    res.grid.g2_values.assign(k * k, 0.0);
  }
  const std::size_t kn = res.grid.t.size();

  double aa_g1 = 0.0, aa_g2 = 0.0, ab_g1 = 0.0, ab_g2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Mat2& r = rho_s[i];
    // sigma- rho and sigma- rho sigma+
    Mat2 x1{r.eg, r.ee, 0.0, 0.0};
    Mat2 x2{r.ee, 0.0, 0.0, 0.0};
    aa_g1 += w[i] * w[i] * r.ee.real() * r.ee.real();
    double row_g1 = 0.0, row_g2 = 0.0;
    if (kept_index[i] != static_cast<std::size_t>(-1)) {
      const std::size_t a = kept_index[i];
      res.grid.g1_values[a * kn + a] = r.ee;
    }
    for (std::size_t j = i + 1; j < m; ++j) {
      x1 = chain[j - 1].apply(x1);
      x2 = chain[j - 1].apply(x2);
      // Tr[sigma+ X] = X_ge, Tr[sigma+sigma- X] = X_ee
      const double v1 = std::norm(x1.ge);
      const double v2 = x2.ee.real();
      row_g1 += w[j] * v1;
      row_g2 += w[j] * v2;
      if (keep > 0 && kept_index[i] != static_cast<std::size_t>(-1) && kept_index[j] != static_cast<std::size_t>(-1)) {
        const std::size_t a = kept_index[j], b = kept_index[i];
        res.grid.g1_values[a * kn + b] = x1.ge;
        res.grid.g1_values[b * kn + a] = std::conj(x1.ge);
        res.grid.g2_values[a * kn + b] = v2;
        res.grid.g2_values[b * kn + a] = v2;
      }
    }
    aa_g1 += 2.0 * w[i] * row_g1;
    aa_g2 += 2.0 * w[i] * row_g2;
    // Free decay after the grid: coherence |.|^2 decays at 2 coh, population at g.
    ab_g1 += w[i] * std::norm(x1.ge) / (2.0 * coh);
    ab_g2 += w[i] * x2.ee.real() / g;
  }
  // Both times after the grid end; G2 vanishes there (no re-excitation).
  const double bb_g1 = n_end * n_end / (2.0 * g * coh);
  res.int_g1_sq = aa_g1 + 2.0 * ab_g1 + bb_g1;
  res.int_g2 = aa_g2 + 2.0 * ab_g2;
  return res;
}

/// Oracle figures of merit from the regression integrals:
/// eta = gamma int N, g2 = int int G2 / (int N)^2, I = int int |G1|^2 / (int N)^2.
inline FiguresOfMerit fom_from_me(const CorrelationResult& c) {
  FiguresOfMerit f;
  f.source = "master-equation";
  f.indist_convention = "int|G1|^2 / int N int N";
  f.eta = {c.gamma * c.int_n_fine, 0.0};
  if (c.int_n > 0.0 && f.eta.value > 1e-14) {
    const double nn = c.int_n * c.int_n;
    f.g2 = Estimate{c.int_g2 / nn, 0.0};
    f.indist = Estimate{c.int_g1_sq / nn, 0.0};
  }
  return f;
}

}  // namespace qdsps
