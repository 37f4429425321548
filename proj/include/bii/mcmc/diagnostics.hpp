#ifndef BII_MCMC_DIAGNOSTICS_HPP
#define BII_MCMC_DIAGNOSTICS_HPP

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "bii/log.hpp"
#include "bii/mcmc/chain.hpp"

namespace bii {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace detail

/// Autocovariances gamma_0..gamma_{T-1} (1/T normalisation) by zero-padded FFT.
inline std::vector<double> autocovariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  require(n >= 2, "autocovariance: need at least two values");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;

  double* in = fftw_alloc_real(m);
  fftw_complex* spec = fftw_alloc_complex(m / 2 + 1);
  fftw_plan fwd;
  fftw_plan bwd;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec, in, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < m; ++i) in[i] = i < n ? x[i] - mean : 0.0;
  fftw_execute(fwd);
  for (std::size_t k = 0; k < m / 2 + 1; ++k) {
    spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    spec[k][1] = 0.0;
  }
  fftw_execute(bwd);
  std::vector<double> acov(n);
  for (std::size_t k = 0; k < n; ++k) acov[k] = in[k] / static_cast<double>(m) / static_cast<double>(n);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(in);
  fftw_free(spec);
  return acov;
}

/// T / tau with tau = -1 + 2 sum_m Gamma_m, Gamma_m = rho_{2m} + rho_{2m+1}
/// summed while positive and forced nonincreasing (Geyer's initial monotone
/// sequence). A constant trace has ESS 0.
inline double ess(const std::vector<double>& x) {
  require(x.size() >= 2, "ess: need at least two values");
  const auto acov = autocovariance(x);
  const double n = static_cast<double>(x.size());
  if (!(acov[0] > 0.0)) {
    log_event(LogLevel::warn, "ess_constant_trace", {{"length", x.size()}});
    return 0.0;
  }
  double tau = -1.0;
  double prev = kInf;
  for (std::size_t k = 0; k + 1 < acov.size(); k += 2) {
    double g = (acov[k] + acov[k + 1]) / acov[0];
    if (!(g > 0.0)) break;
    g = std::min(g, prev);
    prev = g;
    tau += 2.0 * g;
  }
  tau = std::max(tau, 1.0 / n);
  return n / tau;
}

inline double ess(const Chain& chain, std::size_t j) {
  require(chain.size() >= 100, "ess: chain shorter than 100 stored states");
  return ess(chain.theta_column(j));
}

}  // namespace bii

#endif  // BII_MCMC_DIAGNOSTICS_HPP
