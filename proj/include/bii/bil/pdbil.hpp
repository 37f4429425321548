#ifndef BII_BIL_PDBIL_HPP
#define BII_BIL_PDBIL_HPP

#include <cmath>

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/models/generative.hpp"

namespace bii {

/// One draw of the estimated auxiliary likelihood log p_A(y | phi(theta, x_{1:n})).
struct PdBilEstimate {
  double loglik = kNegInf;
  Phi phi_hat;
  std::size_t n = 1;
  bool failed = false;  // MLE failure; treated as zero likelihood
};

/// Simulate n replicates of size |y|, fit one MLE to the pooled x_{1:n}, and
/// evaluate the auxiliary likelihood of the observed data at that MLE.
template <GenerativeModel G, AuxiliaryModel A>
  requires std::same_as<typename G::data_type, typename A::data_type>
PdBilEstimate pdbil_loglik(const G& gen, const A& aux, const Theta& theta, const typename A::data_type& y,
                           std::size_t n, Rng& rng) {
  require(n >= 1, "pdbil: replicate count n must be at least 1");
  PdBilEstimate est;
  est.n = n;
  const auto x = gen.simulate(theta, n * record_count(y), rng);
  try {
    est.phi_hat = aux.fit_mle(x, rng);
  } catch (const FitError&) {
    est.failed = true;
    est.phi_hat = Vector::Constant(static_cast<Eigen::Index>(aux.dim()), std::numeric_limits<double>::quiet_NaN());
    return est;
  }
  est.loglik = aux.loglik(y, est.phi_hat);
  if (!std::isfinite(est.loglik)) {
    est.failed = true;
    est.loglik = kNegInf;
  }
  return est;
}

}  // namespace bii

#endif  // BII_BIL_PDBIL_HPP
