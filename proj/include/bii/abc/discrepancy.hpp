#ifndef BII_ABC_DISCREPANCY_HPP
#define BII_ABC_DISCREPANCY_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/core.hpp"

namespace bii {

enum class AbcMethod { ip, il, is };

inline std::string to_string(AbcMethod m) {
  switch (m) {
    case AbcMethod::ip: return "abc-ip";
    case AbcMethod::il: return "abc-il";
    case AbcMethod::is: return "abc-is";
  }
  return "?";
}

/// Uniform (indicator) kernel with inclusive boundary: K(rho) = 1{rho <= eps}.
struct KernelSpec {
  double epsilon = 1.0;

  explicit KernelSpec(double eps = 1.0) : epsilon(eps) {
    require(eps > 0.0, "kernel: epsilon must be positive");
  }
};

inline double kernel_weight(const KernelSpec& k, double rho) { return rho <= k.epsilon ? 1.0 : 0.0; }

/// Everything about the observed data the discrepancies reuse.
struct ObservedSummary {
  Phi phi_y;
  Matrix info;          // J(phi(y))
  Matrix info_inv;
  double loglik_y = kNegInf;
  double score_norm = 0.0;  // scaled |S_A(y, phi(y))|_inf
  std::size_t n_obs = 0;
  Eigen::LLT<Matrix> chol_info;      // J = L L^T
  Eigen::LLT<Matrix> chol_info_inv;  // J^-1 = M M^T
};

/// Fit the auxiliary model to y once and factor J(phi(y)).
/// Throws AssumptionViolation when J is not positive definite.
template <AuxiliaryModel A>
ObservedSummary precompute_observed(const A& aux, const typename A::data_type& y, Rng& rng) {
  ObservedSummary obs;
  obs.n_obs = record_count(y);
  obs.phi_y = aux.fit_mle(y, rng);
  obs.loglik_y = aux.loglik(y, obs.phi_y);
  if (!std::isfinite(obs.loglik_y)) throw FitError("observed-data auxiliary loglik is not finite");
  obs.score_norm = scaled_score_norm(aux.score(y, obs.phi_y), obs.n_obs);
  obs.info = aux.obs_info(y, obs.phi_y);
  obs.info = 0.5 * (obs.info + obs.info.transpose());
  require_positive_definite(obs.info, "observed summary");
  obs.chol_info.compute(obs.info);
  if (obs.chol_info.info() != Eigen::Success) throw AssumptionViolation("observed information: Cholesky failed");
  obs.info_inv = obs.chol_info.solve(Matrix::Identity(obs.info.rows(), obs.info.cols()));
  obs.info_inv = 0.5 * (obs.info_inv + obs.info_inv.transpose());
  obs.chol_info_inv.compute(obs.info_inv);
  return obs;
}

/// Assumption checks performed before any ABC II run.
template <AuxiliaryModel A>
void check_assumptions(const A& aux, AbcMethod method) {
  if (method == AbcMethod::ip && !aux.unique_estimator())
    throw AssumptionViolation(
        "abc-ip needs a unique auxiliary estimate for every theta (parameter-matching discrepancy); enable "
        "component canonicalisation for mixture auxiliaries");
}

/// Mahalanobis distance sqrt((phi_x - phi_y)^T J (phi_x - phi_y)).
inline double disc_ip(const ObservedSummary& obs, const Phi& phi_x) {
  if (phi_x.size() != obs.phi_y.size()) throw ValidationError("disc_ip: dimension mismatch");
  const Vector v = obs.chol_info.matrixU() * (phi_x - obs.phi_y);
  return v.norm();
}

/// Auxiliary log-likelihood drop log p_A(y|phi_y) - log p_A(y|phi_x).
template <AuxiliaryModel A>
double disc_il(const ObservedSummary& obs, const A& aux, const typename A::data_type& y, const Phi& phi_x) {
  const double ll = aux.loglik(y, phi_x);
  if (!std::isfinite(ll)) return kInf;
  return obs.loglik_y - ll;
}

/// Weighted score norm sqrt(S^T J^-1 S), S = S_A(x, phi_y), given the score.
inline double disc_is_from_score(const ObservedSummary& obs, const Vector& score) {
  if (score.size() != obs.phi_y.size()) throw ValidationError("disc_is: dimension mismatch");
  if (!score.allFinite()) return kInf;
  const Vector w = obs.chol_info.matrixL().solve(score);
  return w.norm();
}

template <AuxiliaryModel A>
double disc_is(const ObservedSummary& obs, const A& aux, const typename A::data_type& x) {
  return disc_is_from_score(obs, aux.score(x, obs.phi_y));
}

/// Summary and discrepancy of one simulated dataset under an ABC II method.
struct AbcEvaluation {
  double rho = kInf;
  Vector summary;  // canonical phi(x) for IP/IL, score for IS
  bool fit_failed = false;
};

template <AuxiliaryModel A>
AbcEvaluation abc_evaluate(AbcMethod method, const ObservedSummary& obs, const A& aux,
                           const typename A::data_type& y, const typename A::data_type& x, Rng& rng) {
  AbcEvaluation ev;
  if (method == AbcMethod::is) {
    ev.summary = aux.score(x, obs.phi_y);
    ev.rho = disc_is_from_score(obs, ev.summary);
    return ev;
  }
  try {
    ev.summary = aux.fit_mle(x, rng);
  } catch (const FitError&) {
    ev.fit_failed = true;
    ev.summary = Vector::Constant(obs.phi_y.size(), std::numeric_limits<double>::quiet_NaN());
    return ev;
  }
  ev.rho = method == AbcMethod::ip ? disc_ip(obs, ev.summary) : disc_il(obs, aux, y, ev.summary);
  return ev;
}

/// q-quantile (type 7) of pilot discrepancies: the tolerance that accepts a
/// fraction q of pilot draws. Non-finite discrepancies count as rejections.
inline double epsilon_from_quantile(std::vector<double> rho, double q) {
  require(q > 0.0 && q <= 1.0, "epsilon quantile must lie in (0,1]");
  require(!rho.empty(), "epsilon calibration needs pilot discrepancies");
  std::sort(rho.begin(), rho.end());
  const double h = (static_cast<double>(rho.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, rho.size() - 1);
  const double eps = rho[lo] + (h - static_cast<double>(lo)) * (rho[hi] - rho[lo]);
  if (!std::isfinite(eps)) throw NumericalError("epsilon calibration: quantile lands on a failed simulation");
  return eps;
}

}  // namespace bii

#endif  // BII_ABC_DISCREPANCY_HPP
