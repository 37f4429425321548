#ifndef BII_POST_SUMMARY_HPP
#define BII_POST_SUMMARY_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "bii/core.hpp"
#include "bii/special.hpp"

namespace bii {

/// Type-7 sample quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "quantile: empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile: level must lie in [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, q);
}

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double bandwidth = 0.0;
  std::vector<double> grid;
  std::vector<double> density;  // empty when the sample is constant
};

/// Mean, SD (n-1), 2.5/50/97.5% quantiles and a Gaussian kernel density
/// with Silverman's bandwidth, linearly binned onto `grid_size` points.
inline PosteriorSummary posterior_summary(const std::vector<double>& x, std::size_t grid_size = 512) {
  require(x.size() >= 10, "posterior summary: need at least 10 samples");
  require(grid_size >= 2, "posterior summary: grid needs two points");
  PosteriorSummary out;
  const double n = static_cast<double>(x.size());
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  // Exact answer for a constant sample (summation rounding would leave a tiny SD).
  const bool constant = sorted.front() == sorted.back();
  out.mean = constant ? sorted.front() : m;
  out.sd = constant ? 0.0 : std::sqrt(ss / (n - 1.0));
  out.q025 = quantile_sorted(sorted, 0.025);
  out.q50 = quantile_sorted(sorted, 0.5);
  out.q975 = quantile_sorted(sorted, 0.975);

  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = out.sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  out.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  if (!(out.bandwidth > 0.0)) return out;

  const double h = out.bandwidth;
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  out.grid.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) out.grid[i] = lo + step * static_cast<double>(i);

  std::vector<double> counts(grid_size, 0.0);
  for (double v : x) {
    const double pos = (v - lo) / step;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), grid_size - 2);
    const double f = pos - static_cast<double>(i);
    counts[i] += 1.0 - f;
    counts[i + 1] += f;
  }
  const std::size_t reach = static_cast<std::size_t>(std::ceil(8.0 * h / step));
  out.density.assign(grid_size, 0.0);
  for (std::size_t i = 0; i < grid_size; ++i) {
    if (counts[i] == 0.0) continue;
    const std::size_t a = i > reach ? i - reach : 0;
    const std::size_t b = std::min(grid_size - 1, i + reach);
    for (std::size_t j = a; j <= b; ++j) {
      const double z = (out.grid[j] - out.grid[i]) / h;
      out.density[j] += counts[i] * std::exp(-0.5 * z * z - kLogSqrt2Pi);
    }
  }
  for (double& d : out.density) d /= n * h;
  return out;
}

}  // namespace bii

#endif  // BII_POST_SUMMARY_HPP
