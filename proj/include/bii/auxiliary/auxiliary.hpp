#ifndef BII_AUXILIARY_AUXILIARY_HPP
#define BII_AUXILIARY_AUXILIARY_HPP

#include <concepts>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bii/core.hpp"
#include "bii/rng.hpp"

namespace bii {

/// Tractable auxiliary model p_A(x | phi).
///
/// loglik returns -inf when phi is outside the parameter space. fit_mle
/// throws FitError when no MLE is found. unique_estimator() reports whether
/// the fitted phi is identifiable, which parameter-matching discrepancies
/// rely on.
template <class A>
concept AuxiliaryModel = requires(const A& a, const typename A::data_type& d, const Phi& phi, Rng& rng) {
  typename A::data_type;
  { a.dim() } -> std::convertible_to<std::size_t>;
  { a.parameter_names() } -> std::convertible_to<std::vector<std::string>>;
  { a.in_domain(phi) } -> std::convertible_to<bool>;
  { a.loglik(d, phi) } -> std::convertible_to<double>;
  { a.fit_mle(d, rng) } -> std::same_as<Phi>;
  { a.score(d, phi) } -> std::same_as<Vector>;
  { a.obs_info(d, phi) } -> std::same_as<Matrix>;
  { a.unique_estimator() } -> std::convertible_to<bool>;
};

/// Largest absolute score component per observation.
inline double scaled_score_norm(const Vector& score, std::size_t n_obs) {
  return score.cwiseAbs().maxCoeff() / static_cast<double>(std::max<std::size_t>(n_obs, 1));
}

inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Observed information must be positive definite at an interior MLE.
inline void require_positive_definite(const Matrix& info, const std::string& context) {
  const Vector ev = symmetric_eigenvalues(info);
  if (!(ev.minCoeff() > 0.0) || !ev.allFinite()) {
    std::ostringstream msg;
    msg << context << ": observed information is not positive definite (eigenvalues:";
    for (double e : ev) msg << ' ' << e;
    msg << ')';
    throw AssumptionViolation(msg.str());
  }
}

/// Newton refinement of an approximate MLE using the analytic score and
/// observed information, with step halving to keep loglik non-decreasing.
template <class A>
Phi newton_polish(const A& aux, const typename A::data_type& data, Phi phi, int max_iter = 30,
                  double score_tol = 1e-11) {
  const double n = static_cast<double>(std::max<std::size_t>(record_count(data), 1));
  double ll = aux.loglik(data, phi);
  for (int it = 0; it < max_iter; ++it) {
    const Vector s = aux.score(data, phi);
    if (s.cwiseAbs().maxCoeff() / n < score_tol) break;
    const Matrix info = aux.obs_info(data, phi);
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() != Eigen::Success) break;
    const Vector step = llt.solve(s);
    double scale = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, scale *= 0.5) {
      const Phi cand = phi + scale * step;
      if (!aux.in_domain(cand)) continue;
      const double cand_ll = aux.loglik(data, cand);
      if (cand_ll >= ll - 1e-12 * std::abs(ll)) {
        phi = cand;
        ll = cand_ll;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return phi;
}

}  // namespace bii

#endif  // BII_AUXILIARY_AUXILIARY_HPP
