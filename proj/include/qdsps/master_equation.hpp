#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qdsps/channels.hpp"
#include "qdsps/error.hpp"
#include "qdsps/grid.hpp"
#include "qdsps/stepping.hpp"

namespace qdsps {

/// 2x2 complex matrix in the {|g>, |e>} basis. Used for density matrices and
/// for the general (non-Hermitian) operators of the regression theorem.
struct Mat2 {
  cplx gg{}, ge{}, eg{}, ee{};

  Mat2& operator+=(const Mat2& o) {
    gg += o.gg, ge += o.ge, eg += o.eg, ee += o.ee;
    return *this;
  }
  friend Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
  friend Mat2 operator*(double s, const Mat2& a) { return {s * a.gg, s * a.ge, s * a.eg, s * a.ee}; }
  friend Mat2 operator*(cplx s, const Mat2& a) { return {s * a.gg, s * a.ge, s * a.eg, s * a.ee}; }

  cplx trace() const { return gg + ee; }
  double excited() const { return ee.real(); }

  static Mat2 ground() { return {1.0, 0.0, 0.0, 0.0}; }
  static Mat2 excited_state() { return {0.0, 0.0, 0.0, 1.0}; }
};

using DensityMatrix2 = Mat2;

inline double hermiticity_error(const Mat2& r) {
  return std::max({std::abs(r.gg.imag()), std::abs(r.ee.imag()), std::abs(r.ge - std::conj(r.eg))});
}

/// Smaller eigenvalue of the Hermitian part.
inline double min_eigenvalue(const Mat2& r) {
  const double a = r.gg.real(), d = r.ee.real();
  const cplx b = 0.5 * (r.ge + std::conj(r.eg));
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
}

/// H/hbar = Delta |e><e| + (env sigma+ + conj(env) sigma-)/2 in the grid's frame.
inline Mat2 hamiltonian_at(const EnvelopeGrid& e, double t) {
  require(e.contains(t), "hamiltonian_at: t outside the envelope grid");
  const cplx h = 0.5 * e.envelope_at(t);
  return {0.0, std::conj(h), h, e.hamiltonian_detuning(t)};
}

/// Right-hand side of the Lindblad equation applied to an arbitrary operator X.
inline Mat2 lindblad_rhs(const Mat2& x, const Coefficients& c) {
  static constexpr cplx i{0.0, 1.0};
  const cplx h = 0.5 * c.drive;
  const cplx hc = std::conj(h);
  const double d = c.detuning;
  // -i [H, X]
  Mat2 out{-i * (hc * x.eg - x.ge * h), -i * (hc * x.ee - x.gg * hc - d * x.ge), -i * (h * x.gg + d * x.eg - x.ee * h),
           -i * (h * x.ge - x.eg * hc)};
  const double g = c.rates.radiative, up = c.rates.excitation;
  const double coh = 0.5 * (g + up + c.rates.dephasing);
  out.gg += g * x.ee - up * x.gg;
  out.ee += up * x.gg - g * x.ee;
  out.ge -= coh * x.ge;
  out.eg -= coh * x.eg;
  return out;
}

/// One RK4 step for a batch of operators sharing the same coefficients.
template <std::size_t N>
void rk4_step(std::array<Mat2, N>& xs, const Coefficients& c0, const Coefficients& c1, const Coefficients& c2,
              double h) {
  for (auto& x : xs) {
    const Mat2 k1 = lindblad_rhs(x, c0);
    const Mat2 k2 = lindblad_rhs(x + (0.5 * h) * k1, c1);
    const Mat2 k3 = lindblad_rhs(x + (0.5 * h) * k2, c1);
    const Mat2 k4 = lindblad_rhs(x + h * k3, c2);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

/// Walks a step plan, calling visit(t, xs) after every step.
template <std::size_t N, class Visit>
void integrate_plan(const EnvelopeGrid& e, const ChannelSet& ch, const StepPlan& plan, std::array<Mat2, N>& xs,
                    Visit&& visit) {
  for (const auto& b : plan.blocks) {
    Coefficients c0 = coefficients_at(e, ch, b.t);
    for (std::size_t s = 0; s < b.count; ++s) {
      const double t = b.t + b.h * static_cast<double>(s);
      const Coefficients c1 = coefficients_at(e, ch, t + 0.5 * b.h);
      const Coefficients c2 = coefficients_at(e, ch, t + b.h);
      rk4_step(xs, c0, c1, c2, b.h);
      c0 = c2;
      visit(t + b.h, xs);
    }
  }
}

/// Exact evolution of X under constant rates, zero drive, detuning delta.
inline Mat2 free_evolution(const Mat2& x, const ChannelRates& r, double delta, double tau) {
  const double g = r.radiative;
  const double coh = 0.5 * (g + r.dephasing);
  const double decay = std::exp(-g * tau);
  Mat2 out;
  out.ee = x.ee * decay;
  out.gg = x.gg + x.ee * (1.0 - decay);
  out.ge = x.ge * std::exp(cplx{-coh, delta} * tau);
  out.eg = x.eg * std::exp(cplx{-coh, -delta} * tau);
  return out;
}

struct PopulationTrace {
  std::vector<double> t;
  std::vector<double> n;
};

struct MeResult {
  PopulationTrace population;
  DensityMatrix2 final_rho;
  double t_final = 0.0;
  /// Largest deviations seen along the run.
  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;
  double min_purity = 1.0;
  StepPlan plan;
};

struct MeOptions {
  StepOptions steps;
  /// Continue analytically past the grid for this long (ps), sampled every extend_dt.
  double extend = 0.0;
  double extend_dt = 1.0;
  double trace_tolerance = 1e-8;
};

namespace detail {

inline MeResult run_me(const EnvelopeGrid& e, const ChannelSet& ch, const DensityMatrix2& rho0, const StepPlan& plan) {
  MeResult res;
  res.plan = plan;
  std::array<Mat2, 1> xs{rho0};
  res.population.t.push_back(plan.t_start());
  res.population.n.push_back(rho0.excited());
  const double tr0 = rho0.trace().real();
  auto track = [&](const Mat2& r) {
    res.max_trace_drift = std::max(res.max_trace_drift, std::abs(r.trace().real() - tr0) + std::abs(r.trace().imag()));
    res.max_hermiticity_error = std::max(res.max_hermiticity_error, hermiticity_error(r));
    res.min_eigenvalue = std::min(res.min_eigenvalue, min_eigenvalue(r));
    const double purity = std::norm(r.gg) + std::norm(r.ee) + std::norm(r.ge) + std::norm(r.eg);
    res.min_purity = std::min(res.min_purity, purity);
  };
  track(rho0);
  integrate_plan(e, ch, plan, xs, [&](double t, const std::array<Mat2, 1>& x) {
    res.population.t.push_back(t);
    res.population.n.push_back(x[0].excited());
    track(x[0]);
  });
  res.final_rho = xs[0];
  res.t_final = plan.t_end();
  return res;
}

inline bool healthy(const MeResult& r, double tol) {
  const auto& f = r.final_rho;
  const bool finite = std::isfinite(f.gg.real()) && std::isfinite(f.ee.real()) && std::isfinite(std::abs(f.ge)) &&
                      std::isfinite(std::abs(f.eg));
  return finite && r.max_trace_drift <= tol;
}

}  // namespace detail

/// Fixed-step RK4 integration of the master equation over the envelope grid.
/// A failing trace check triggers one retry with halved steps.
inline MeResult evolve_me(const EnvelopeGrid& e, const ChannelSet& ch, const DensityMatrix2& rho0,
                          const MeOptions& opt = {}) {
  auto plan = plan_steps(e, ch, opt.steps);
  auto res = detail::run_me(e, ch, rho0, plan);
  if (!detail::healthy(res, opt.trace_tolerance)) {
    res = detail::run_me(e, ch, rho0, plan.halved());
    if (!detail::healthy(res, opt.trace_tolerance))
      throw NumericalFault("evolve_me: trace drift exceeded after halving dt");
  }
  if (opt.extend > 0.0) {
    require(opt.extend_dt > 0.0, "evolve_me: extend_dt must be positive");
    const auto rates = ch.free_rates();
    const double delta = e.hamiltonian_detuning(e.t_end() + 1.0);
    const Mat2 at_end = res.final_rho;
    const auto n = static_cast<std::size_t>(std::ceil(opt.extend / opt.extend_dt));
    for (std::size_t k = 1; k <= n; ++k) {
      const double tau = std::min(opt.extend, opt.extend_dt * static_cast<double>(k));
      const Mat2 r = free_evolution(at_end, rates, delta, tau);
      res.population.t.push_back(res.t_final + tau);
      res.population.n.push_back(r.excited());
    }
    res.final_rho = free_evolution(at_end, rates, delta, opt.extend);
    res.t_final += opt.extend;
  }
  return res;
}

/// Trapezoid integral of N over a (possibly non-uniform) trace.
inline double integrate_population(const PopulationTrace& p) {
  double s = 0.0;
  for (std::size_t i = 1; i < p.t.size(); ++i) s += 0.5 * (p.n[i] + p.n[i - 1]) * (p.t[i] - p.t[i - 1]);
  return s;
}

inline double max_population(const PopulationTrace& p) {
  double m = 0.0;
  for (double v : p.n) m = std::max(m, v);
  return m;
}

}  // namespace qdsps
