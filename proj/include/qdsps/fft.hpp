#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "qdsps/units.hpp"

// Thin RAII layer over FFTW. Conventions used throughout the library:
//
//   spectrum(nu) = sum_j f(t_j) exp(+i nu t_j) dt      ("to_spectrum")
//   f(t_j)       = (1/N dt) sum_k spectrum(nu_k) exp(-i nu_k t_j)
//
// so a field component exp(-i nu t) in the envelope shows up at +nu.
namespace qdsps::fft {

using cplx = std::complex<double>;

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW sign -1 is exp(-2 pi i jk/N), +1 is exp(+2 pi i jk/N). Unnormalized.
inline std::vector<cplx> transform(std::span<const cplx> in, int sign) {
  std::vector<cplx> out(in.begin(), in.end());
  if (out.empty()) return out;
  auto* data = reinterpret_cast<fftw_complex*>(out.data());
  Plan plan;
  {
    // The FFTW planner is not re-entrant; execution is.
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_1d(static_cast<int>(out.size()), data, data, sign, FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
  return out;
}

}  // namespace detail

/// Unnormalized sum_j x_j exp(+2 pi i jk/N).
inline std::vector<cplx> sum_plus(std::span<const cplx> x) { return detail::transform(x, FFTW_BACKWARD); }

/// Unnormalized sum_k X_k exp(-2 pi i jk/N).
inline std::vector<cplx> sum_minus(std::span<const cplx> x) { return detail::transform(x, FFTW_FORWARD); }

/// Angular frequency of FFT bin k for a record of n samples spaced dt apart
/// (standard wrap: k >= n/2 maps to negative frequencies).
inline double bin_frequency(std::size_t k, std::size_t n, double dt) {
  const double dnu = units::two_pi / (static_cast<double>(n) * dt);
  const auto kk = static_cast<long long>(k);
  const auto nn = static_cast<long long>(n);
  return static_cast<double>(kk < (nn + 1) / 2 ? kk : kk - nn) * dnu;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Multiply the spectrum of uniformly sampled x by mask(nu) and transform
/// back. The time origin drops out because the mask depends on nu only.
template <class Mask>
std::vector<cplx> apply_spectral_mask(std::span<const cplx> x, double dt, Mask&& mask) {
  auto spec = sum_plus(x);
  const std::size_t n = spec.size();
  for (std::size_t k = 0; k < n; ++k) spec[k] *= mask(bin_frequency(k, n, dt));
  auto back = sum_minus(spec);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : back) v *= inv;
  return back;
}

}  // namespace qdsps::fft
