#ifndef BII_MODELS_POISSON_HPP
#define BII_MODELS_POISSON_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/prior.hpp"
#include "bii/rng.hpp"

namespace bii {

/// Poisson(lambda) i.i.d. counts; theta = (lambda).
class PoissonModel {
 public:
  using data_type = Sample;

  std::size_t dim() const { return 1; }
  std::vector<std::string> parameter_names() const { return {"lambda"}; }
  bool valid(const Theta& theta) const { return theta.size() == 1 && theta[0] > 0.0 && std::isfinite(theta[0]); }

  Sample simulate(const Theta& theta, std::size_t size, Rng& rng) const {
    if (!valid(theta)) throw ValidationError("poisson: lambda must be positive");
    if (size == 0) throw ValidationError("poisson: dataset size must be positive");
    std::poisson_distribution<long> dist(theta[0]);
    Sample out(size);
    for (auto& v : out) v = static_cast<double>(dist(rng));
    return out;
  }

  /// Exact log-likelihood sum_i log Po(y_i; lambda).
  static double loglik(const Sample& y, double lambda) {
    if (!(lambda > 0.0)) return kNegInf;
    double ll = 0.0;
    for (double v : y) ll += v * std::log(lambda) - lambda - std::lgamma(v + 1.0);
    return ll;
  }
};

/// Conjugate update Gamma(a, b) -> Gamma(a + sum y, b + N).
inline GammaPrior poisson_exact_posterior(const Marginal& prior, const Sample& y) {
  const auto* g = std::get_if<GammaPrior>(&prior);
  if (g == nullptr) throw ValidationError("poisson_exact_posterior: prior must be gamma");
  require(!y.empty(), "poisson_exact_posterior: empty dataset");
  double sum = 0.0;
  for (double v : y) sum += v;
  return GammaPrior{g->shape + sum, g->rate + static_cast<double>(y.size())};
}

inline GammaPrior poisson_exact_posterior(const Prior& prior, const Sample& y) {
  require(prior.dim() == 1, "poisson_exact_posterior: prior must be one-dimensional");
  return poisson_exact_posterior(prior[0], y);
}

/// Unnormalised log densities of the large-n pdBIL targets on the Poisson toy.
namespace poisson_limits {

/// Normal auxiliary N(lambda, lambda):
/// lambda^(alpha - N/2 - 1) exp(-(beta + N/2) lambda) exp(-sum y^2 / (2 lambda)).
inline double normal_aux_logdensity(double lambda, const GammaPrior& prior, const Sample& y) {
  if (!(lambda > 0.0)) return kNegInf;
  const double n = static_cast<double>(y.size());
  double sum_sq = 0.0;
  for (double v : y) sum_sq += v * v;
  return (prior.shape - n / 2.0 - 1.0) * std::log(lambda) - (prior.rate + n / 2.0) * lambda -
         sum_sq / (2.0 * lambda);
}

/// Fixed-variance auxiliary N(lambda, tau0):
/// lambda^(alpha-1) exp(-(beta - sum y / tau0) lambda) exp(-0.5 N lambda^2 / tau0).
inline double fixed_var_aux_logdensity(double lambda, double tau0, const GammaPrior& prior, const Sample& y) {
  if (!(lambda > 0.0)) return kNegInf;
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  for (double v : y) sum += v;
  return (prior.shape - 1.0) * std::log(lambda) - (prior.rate - sum / tau0) * lambda - 0.5 * n * lambda * lambda / tau0;
}

}  // namespace poisson_limits

}  // namespace bii

#endif  // BII_MODELS_POISSON_HPP
