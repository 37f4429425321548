#ifndef BII_AUXILIARY_BETA_BINOMIAL_HPP
#define BII_AUXILIARY_BETA_BINOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/models/macroparasite.hpp"
#include "bii/optim.hpp"
#include "bii/special.hpp"

namespace bii {

/// Beta-binomial regression for matured counts.
///
/// phi = (b0, b1, b2, eta_low, eta_high). For host i with centred log time
/// c_i = log t_i - mean(log t):
///   logit p_i = b0 + b1 c_i + b2 c_i^2
///   log xi_i  = eta_low if l_i <= 100 else eta_high
/// and alpha_i = p_i / xi_i, beta_i = (1 - p_i) / xi_i.
class BetaBinomialRegressionAux {
 public:
  using data_type = HostData;

  static constexpr int kLarvaeThreshold = 100;

  explicit BetaBinomialRegressionAux(double mean_log_time = 0.0) : mean_log_time_(mean_log_time) {}

  static BetaBinomialRegressionAux for_design(const Design& design) {
    require(!design.empty(), "beta-binomial aux: empty design");
    double s = 0.0;
    for (const auto& row : design) s += std::log(row.time);
    return BetaBinomialRegressionAux(s / static_cast<double>(design.size()));
  }

  static BetaBinomialRegressionAux for_data(const HostData& data) {
    require(!data.empty(), "beta-binomial aux: empty dataset");
    double s = 0.0;
    for (const auto& r : data) s += std::log(r.time);
    return BetaBinomialRegressionAux(s / static_cast<double>(data.size()));
  }

  double mean_log_time() const { return mean_log_time_; }
  std::size_t dim() const { return 5; }
  std::vector<std::string> parameter_names() const { return {"beta0", "beta1", "beta2", "eta100", "eta200"}; }
  bool unique_estimator() const { return true; }
  bool in_domain(const Phi& phi) const { return phi.size() == 5 && phi.allFinite(); }

  /// Per-record link quantities.
  struct Links {
    double centred_log_time;
    double p;
    double xi;
    double alpha;
    double beta;
    bool high_dose;
  };

  Links links(const HostRecord& r, const Phi& phi) const {
    Links k{};
    k.centred_log_time = std::log(r.time) - mean_log_time_;
    const double c = k.centred_log_time;
    k.p = logistic(phi[0] + phi[1] * c + phi[2] * c * c);
    k.high_dose = r.larvae > kLarvaeThreshold;
    k.xi = std::exp(k.high_dose ? phi[4] : phi[3]);
    k.alpha = k.p / k.xi;
    k.beta = (1.0 - k.p) / k.xi;
    return k;
  }

  double loglik(const HostData& data, const Phi& phi) const {
    if (!in_domain(phi)) return kNegInf;
    double ll = 0.0;
    for (const auto& r : data) {
      const Links k = links(r, phi);
      if (!(k.alpha > 0.0 && k.beta > 0.0)) return kNegInf;
      ll += log_binomial_coefficient(r.larvae, r.matured) + log_beta(r.matured + k.alpha, r.larvae - r.matured + k.beta) -
            log_beta(k.alpha, k.beta);
    }
    return ll;
  }

  Vector score(const HostData& data, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("beta-binomial aux: score outside parameter space");
    Vector s = Vector::Zero(5);
    for (const auto& r : data) {
      const Record d = derivatives(r, phi, false);
      const double c = d.links.centred_log_time;
      s[0] += d.grad_f;
      s[1] += d.grad_f * c;
      s[2] += d.grad_f * c * c;
      s[d.links.high_dose ? 4 : 3] += d.grad_eta;
    }
    return s;
  }

  /// Negative Hessian, analytic via trigamma.
  Matrix obs_info(const HostData& data, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("beta-binomial aux: information outside parameter space");
    Matrix h = Matrix::Zero(5, 5);
    for (const auto& r : data) {
      const Record d = derivatives(r, phi, true);
      const double c = d.links.centred_log_time;
      const double x[3] = {1.0, c, c * c};
      const int e = d.links.high_dose ? 4 : 3;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) h(a, b) += d.hess_ff * x[a] * x[b];
        h(a, e) += d.hess_fe * x[a];
        h(e, a) += d.hess_fe * x[a];
      }
      h(e, e) += d.hess_ee;
    }
    return -h;
  }

  /// Quasi-Newton fit on the analytic score, then Newton refinement.
  Phi fit_mle(const HostData& data, Rng&) const { return fit_mle(data); }

  Phi fit_mle(const HostData& data) const {
    if (data.size() < dim()) throw FitError("beta-binomial aux: fewer hosts than parameters");
    double m = 0.0;
    double l = 0.0;
    for (const auto& r : data) {
      m += r.matured;
      l += r.larvae;
    }
    if (!(l > 0.0)) throw FitError("beta-binomial aux: no larvae in the data");
    const double frac = std::clamp((m + 0.5) / (l + 1.0), 1e-6, 1.0 - 1e-6);
    Phi start(5);
    start << logit(frac), 0.0, 0.0, -2.0, -2.0;
    const double scale = static_cast<double>(data.size());
    auto value = [&](const Vector& phi) {
      const double ll = loglik(data, phi);
      return std::isfinite(ll) ? -ll / scale : kInf;
    };
    auto gradient = [&](const Vector& phi) -> Vector { return -score(data, phi) / scale; };
    BfgsSettings settings;
    settings.grad_tol = 1e-9;
    settings.max_iter = 1000;
    const BfgsResult res = minimize_bfgs(value, gradient, start, settings);
    Phi phi = newton_polish(*this, data, res.x, 50);
    const double norm = scaled_score_norm(score(data, phi), data.size());
    if (!phi.allFinite() || norm > 1e-6)
      throw FitError("beta-binomial aux: optimiser did not converge (scaled score " + std::to_string(norm) + ")");
    return phi;
  }

 private:
  struct Record {
    Links links;
    double grad_f = 0.0;   // d loglik / d (logit p)
    double grad_eta = 0.0; // d loglik / d (log xi)
    double hess_ff = 0.0;
    double hess_fe = 0.0;
    double hess_ee = 0.0;
  };

  Record derivatives(const HostRecord& r, const Phi& phi, bool second) const {
    Record d;
    d.links = links(r, phi);
    const double al = d.links.alpha;
    const double be = d.links.beta;
    const double m = r.matured;
    const double n = r.larvae;
    const double psi_ab = digamma(al + be);
    const double psi_nab = digamma(n + al + be);
    const double la = digamma(m + al) - psi_nab - digamma(al) + psi_ab;
    const double lb = digamma(n - m + be) - psi_nab - digamma(be) + psi_ab;
    // alpha = p e^-eta, beta = (1-p) e^-eta with f = logit p.
    const double q = d.links.p * (1.0 - d.links.p) / d.links.xi;  // d alpha / d f = -d beta / d f
    d.grad_f = q * (la - lb);
    d.grad_eta = -al * la - be * lb;
    if (second) {
      const double t_ab = trigamma(al + be);
      const double t_nab = trigamma(n + al + be);
      const double laa = trigamma(m + al) - t_nab - trigamma(al) + t_ab;
      const double lbb = trigamma(n - m + be) - t_nab - trigamma(be) + t_ab;
      const double lab = -t_nab + t_ab;
      const double q_f = q * (1.0 - 2.0 * d.links.p);  // d^2 alpha / d f^2
      d.hess_ff = q * q * (laa - 2.0 * lab + lbb) + q_f * (la - lb);
      // d alpha/d eta = -alpha, d beta/d eta = -beta, d^2 alpha/(df deta) = -q.
      d.hess_fe = q * (-al * laa - be * lab + al * lab + be * lbb) - q * (la - lb);
      d.hess_ee = al * al * laa + 2.0 * al * be * lab + be * be * lbb + al * la + be * lb;
    }
    return d;
  }

  double mean_log_time_;
};

}  // namespace bii

#endif  // BII_AUXILIARY_BETA_BINOMIAL_HPP
