#ifndef BII_BIL_NPDBIL_HPP
#define BII_BIL_NPDBIL_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "bii/abc/discrepancy.hpp"
#include "bii/models/generative.hpp"

namespace bii {

/// Kernel auxiliary likelihood p_A(y | x_{1:n}) = (1/n) sum_i K(rho(y, x_i)).
template <class Data>
double kernel_aux_likelihood(const KernelSpec& kernel, const std::function<double(const Data&, const Data&)>& distance,
                             const Data& y, const std::vector<Data>& replicates) {
  double s = 0.0;
  for (const auto& x : replicates) s += kernel_weight(kernel, distance(y, x));
  return s / static_cast<double>(replicates.size());
}

struct NpdBilCheck {
  std::size_t n = 1;
  double estimate = 0.0;        // mean over repetitions of the n-replicate estimate
  double standard_error = 0.0;
  double exact = std::numeric_limits<double>::quiet_NaN();  // enumerated ABC likelihood, when available
};

/// Monte Carlo estimate of p_{A,n}(y|theta) for each n in `ns`, next to the
/// exact ABC likelihood sum_x p(x|theta) K(rho(y, x)) when the model can
/// enumerate its support. The two agree for every n.
template <GenerativeModel G>
std::vector<NpdBilCheck> npdbil_identity_check(
    const G& gen, const KernelSpec& kernel,
    const std::function<double(const typename G::data_type&, const typename G::data_type&)>& distance,
    const Theta& theta, const typename G::data_type& y, const std::vector<std::size_t>& ns, std::size_t repetitions,
    Rng& rng) {
  require(repetitions >= 2, "npdbil check: need at least two repetitions");
  double exact = std::numeric_limits<double>::quiet_NaN();
  if constexpr (requires { gen.enumerate(theta); }) {
    exact = 0.0;
    for (const auto& [x, p] : gen.enumerate(theta)) exact += p * kernel_weight(kernel, distance(y, x));
  }
  std::vector<NpdBilCheck> out;
  for (std::size_t n : ns) {
    require(n >= 1, "npdbil check: n must be at least 1");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t r = 0; r < repetitions; ++r) {
      const auto reps = simulate_replicates(gen, theta, record_count(y), n, rng);
      const double v = kernel_aux_likelihood<typename G::data_type>(kernel, distance, y, reps);
      sum += v;
      sum_sq += v * v;
    }
    const double m = sum / static_cast<double>(repetitions);
    const double var = (sum_sq - static_cast<double>(repetitions) * m * m) / static_cast<double>(repetitions - 1);
    out.push_back({n, m, std::sqrt(std::max(var, 0.0) / static_cast<double>(repetitions)), exact});
  }
  return out;
}

}  // namespace bii

#endif  // BII_BIL_NPDBIL_HPP
