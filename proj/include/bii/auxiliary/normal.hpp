#ifndef BII_AUXILIARY_NORMAL_HPP
#define BII_AUXILIARY_NORMAL_HPP

#include <cmath>
#include <string>
#include <vector>

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/special.hpp"

namespace bii {

namespace detail {

struct Moments {
  double n = 0.0;
  double sum = 0.0;     // sum (x - mu)
  double sum_sq = 0.0;  // sum (x - mu)^2
};

inline Moments centred_moments(const Sample& x, double mu) {
  Moments m;
  m.n = static_cast<double>(x.size());
  for (double v : x) {
    const double d = v - mu;
    m.sum += d;
    m.sum_sq += d * d;
  }
  return m;
}

}  // namespace detail

/// N(mu, tau) with phi = (mu, tau), tau the variance.
class NormalAux {
 public:
  using data_type = Sample;

  std::size_t dim() const { return 2; }
  std::vector<std::string> parameter_names() const { return {"mu", "tau"}; }
  bool unique_estimator() const { return true; }
  bool in_domain(const Phi& phi) const { return phi.size() == 2 && phi.allFinite() && phi[1] > 0.0; }

  double loglik(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) return kNegInf;
    const auto m = detail::centred_moments(x, phi[0]);
    return -0.5 * m.n * std::log(phi[1]) - m.n * kLogSqrt2Pi - m.sum_sq / (2.0 * phi[1]);
  }

  Phi fit_mle(const Sample& x, Rng&) const { return fit_mle(x); }

  /// Sample mean and 1/N variance.
  Phi fit_mle(const Sample& x) const {
    if (x.empty()) throw FitError("normal aux: empty dataset");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    const auto m = detail::centred_moments(x, mean);
    const double var = m.sum_sq / m.n;
    if (!(var > 0.0)) throw FitError("normal aux: zero sample variance, MLE on the boundary");
    Phi phi(2);
    phi << mean, var;
    return phi;
  }

  Vector score(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("normal aux: score outside parameter space");
    const auto m = detail::centred_moments(x, phi[0]);
    const double tau = phi[1];
    Vector s(2);
    s << m.sum / tau, -m.n / (2.0 * tau) + m.sum_sq / (2.0 * tau * tau);
    return s;
  }

  Matrix obs_info(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("normal aux: information outside parameter space");
    const auto m = detail::centred_moments(x, phi[0]);
    const double tau = phi[1];
    Matrix j(2, 2);
    j(0, 0) = m.n / tau;
    j(0, 1) = j(1, 0) = m.sum / (tau * tau);
    j(1, 1) = -m.n / (2.0 * tau * tau) + m.sum_sq / (tau * tau * tau);
    return j;
  }
};

/// N(mu, tau0) with the variance held fixed; phi = (mu).
class FixedVarNormalAux {
 public:
  using data_type = Sample;

  explicit FixedVarNormalAux(double tau0) : tau0_(tau0) {
    require(tau0 > 0.0 && std::isfinite(tau0), "fixed-variance normal aux: tau0 must be positive");
  }

  double tau0() const { return tau0_; }
  std::size_t dim() const { return 1; }
  std::vector<std::string> parameter_names() const { return {"mu"}; }
  bool unique_estimator() const { return true; }
  bool in_domain(const Phi& phi) const { return phi.size() == 1 && std::isfinite(phi[0]); }

  double loglik(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) return kNegInf;
    const auto m = detail::centred_moments(x, phi[0]);
    return -0.5 * m.n * std::log(tau0_) - m.n * kLogSqrt2Pi - m.sum_sq / (2.0 * tau0_);
  }

  Phi fit_mle(const Sample& x, Rng&) const { return fit_mle(x); }

  Phi fit_mle(const Sample& x) const {
    if (x.empty()) throw FitError("fixed-variance normal aux: empty dataset");
    double mean = 0.0;
    for (double v : x) mean += v;
    Phi phi(1);
    phi << mean / static_cast<double>(x.size());
    return phi;
  }

  Vector score(const Sample& x, const Phi& phi) const {
    const auto m = detail::centred_moments(x, phi[0]);
    Vector s(1);
    s << m.sum / tau0_;
    return s;
  }

  Matrix obs_info(const Sample& x, const Phi&) const {
    Matrix j(1, 1);
    j(0, 0) = static_cast<double>(x.size()) / tau0_;
    return j;
  }

 private:
  double tau0_;
};

}  // namespace bii

#endif  // BII_AUXILIARY_NORMAL_HPP
