#ifndef BII_AUXILIARY_MIXTURE_HPP
#define BII_AUXILIARY_MIXTURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "bii/auxiliary/auxiliary.hpp"
#include "bii/special.hpp"

namespace bii {

struct EmSettings {
  int restarts = 10;
  int max_iter = 500;
  double tol = 1e-8;                    // stop when the loglik gain drops below this
  double variance_floor_ratio = 1e-8;   // relative to the data variance
  bool polish = true;                   // Newton refinement after EM
};

/// Unpacked mixture parameters.
struct MixtureComponents {
  std::vector<double> weight;
  std::vector<double> mean;
  std::vector<double> variance;
};

struct EmResult {
  Phi phi;
  double loglik = kNegInf;
  int iterations = 0;
  bool hit_floor = false;
};

/// K-component univariate normal mixture.
///
/// phi = (w_1..w_{K-1}, mu_1..mu_K, v_1..v_K) with w_K = 1 - sum w_j and v
/// the component variances, so dim(phi) = 3K - 1. With canonicalisation on,
/// fit_mle orders components by ascending mean, which fixes the labelling.
class GaussianMixtureAux {
 public:
  using data_type = Sample;

  explicit GaussianMixtureAux(int components = 3, bool canonicalize = true, EmSettings settings = {})
      : k_(components), canonicalize_(canonicalize), settings_(settings) {
    require(components >= 1, "mixture aux: need at least one component");
    require(settings.restarts >= 1 && settings.max_iter >= 1, "mixture aux: restarts and max_iter must be positive");
  }

  int components() const { return k_; }
  bool canonicalizes() const { return canonicalize_; }
  const EmSettings& settings() const { return settings_; }

  std::size_t dim() const { return static_cast<std::size_t>(3 * k_ - 1); }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    for (int j = 1; j < k_; ++j) names.push_back("w" + std::to_string(j));
    for (int j = 1; j <= k_; ++j) names.push_back("mu" + std::to_string(j));
    for (int j = 1; j <= k_; ++j) names.push_back("var" + std::to_string(j));
    return names;
  }

  bool unique_estimator() const { return canonicalize_ || k_ == 1; }

  MixtureComponents unpack(const Phi& phi) const {
    MixtureComponents c;
    double rest = 1.0;
    for (int j = 0; j < k_ - 1; ++j) {
      c.weight.push_back(phi[j]);
      rest -= phi[j];
    }
    c.weight.push_back(rest);
    for (int j = 0; j < k_; ++j) c.mean.push_back(phi[k_ - 1 + j]);
    for (int j = 0; j < k_; ++j) c.variance.push_back(phi[2 * k_ - 1 + j]);
    return c;
  }

  Phi pack(const MixtureComponents& c) const {
    Phi phi(static_cast<Eigen::Index>(dim()));
    for (int j = 0; j < k_ - 1; ++j) phi[j] = c.weight[static_cast<std::size_t>(j)];
    for (int j = 0; j < k_; ++j) phi[k_ - 1 + j] = c.mean[static_cast<std::size_t>(j)];
    for (int j = 0; j < k_; ++j) phi[2 * k_ - 1 + j] = c.variance[static_cast<std::size_t>(j)];
    return phi;
  }

  bool in_domain(const Phi& phi) const {
    if (phi.size() != static_cast<Eigen::Index>(dim()) || !phi.allFinite()) return false;
    const auto c = unpack(phi);
    for (int j = 0; j < k_; ++j) {
      if (!(c.weight[static_cast<std::size_t>(j)] > 0.0) || !(c.variance[static_cast<std::size_t>(j)] > 0.0))
        return false;
    }
    return true;
  }

  /// Components sorted by ascending mean.
  Phi canonical(const Phi& phi) const {
    const auto c = unpack(phi);
    std::vector<std::size_t> order(static_cast<std::size_t>(k_));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.mean[a] < c.mean[b]; });
    MixtureComponents s;
    for (std::size_t j : order) {
      s.weight.push_back(c.weight[j]);
      s.mean.push_back(c.mean[j]);
      s.variance.push_back(c.variance[j]);
    }
    return pack(s);
  }

  double loglik(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) return kNegInf;
    const Terms t(unpack(phi));
    double ll = 0.0;
    std::vector<double> lw(static_cast<std::size_t>(k_));
    for (double v : x) ll += t.log_density(v, lw);
    return ll;
  }

  Vector score(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("mixture aux: score outside parameter space");
    const auto c = unpack(phi);
    const Terms t(c);
    const std::size_t K = static_cast<std::size_t>(k_);
    Vector s = Vector::Zero(static_cast<Eigen::Index>(dim()));
    std::vector<double> r(K);
    for (double v : x) {
      t.responsibilities(v, r);
      for (std::size_t j = 0; j + 1 < K; ++j)
        s[static_cast<Eigen::Index>(j)] += r[j] / c.weight[j] - r[K - 1] / c.weight[K - 1];
      for (std::size_t j = 0; j < K; ++j) {
        const double d = (v - c.mean[j]) / c.variance[j];
        const double a = 0.5 * (d * d - 1.0 / c.variance[j]);
        s[mean_index(j)] += r[j] * d;
        s[var_index(j)] += r[j] * a;
      }
    }
    return s;
  }

  /// Negative Hessian of loglik, analytic.
  Matrix obs_info(const Sample& x, const Phi& phi) const {
    if (!in_domain(phi)) throw ValidationError("mixture aux: information outside parameter space");
    const auto c = unpack(phi);
    const Terms t(c);
    const std::size_t K = static_cast<std::size_t>(k_);
    const Eigen::Index D = static_cast<Eigen::Index>(dim());
    Matrix hess = Matrix::Zero(D, D);
    Vector grad(D);
    Matrix second(D, D);
    std::vector<double> r(K);
    for (double v : x) {
      t.responsibilities(v, r);
      grad.setZero();
      second.setZero();
      // Derivatives of f / f, where f is the mixture density at v.
      for (std::size_t j = 0; j + 1 < K; ++j)
        grad[static_cast<Eigen::Index>(j)] = r[j] / c.weight[j] - r[K - 1] / c.weight[K - 1];
      for (std::size_t j = 0; j < K; ++j) {
        const double var = c.variance[j];
        const double e = v - c.mean[j];
        const double d = e / var;
        const double a = 0.5 * (d * d - 1.0 / var);
        const Eigen::Index im = mean_index(j);
        const Eigen::Index iv = var_index(j);
        grad[im] = r[j] * d;
        grad[iv] = r[j] * a;
        second(im, im) = r[j] * (d * d - 1.0 / var);
        second(im, iv) = second(iv, im) = r[j] * (d * a - e / (var * var));
        second(iv, iv) = r[j] * (a * a - e * e / (var * var * var) + 0.5 / (var * var));
        // Weight/component cross terms: d f / d w_l picks +component l and -component K.
        for (std::size_t l = 0; l + 1 < K; ++l) {
          const double sign = (l == j ? 1.0 : 0.0) - (j == K - 1 ? 1.0 : 0.0);
          if (sign == 0.0) continue;
          const Eigen::Index iw = static_cast<Eigen::Index>(l);
          second(iw, im) = second(im, iw) = sign * r[j] / c.weight[j] * d;
          second(iw, iv) = second(iv, iw) = sign * r[j] / c.weight[j] * a;
        }
      }
      hess.noalias() += second - grad * grad.transpose();
    }
    Matrix info = -hess;
    return 0.5 * (info + info.transpose());
  }

  /// One EM run from `init`. The observer is called with the loglik of the
  /// current parameters at every iteration.
  EmResult em(const Sample& x, const Phi& init, const std::function<void(int, double)>& observer = {}) const {
    const std::size_t K = static_cast<std::size_t>(k_);
    const double n = static_cast<double>(x.size());
    const double floor = settings_.variance_floor_ratio * sample_variance(x);
    EmResult out;
    out.phi = init;
    auto c = unpack(init);
    std::vector<double> r(K);
    std::vector<double> nk(K), sx(K), sxx(K);
    double prev = kNegInf;
    for (int it = 0; it < settings_.max_iter; ++it) {
      const Terms t(c);
      std::fill(nk.begin(), nk.end(), 0.0);
      std::fill(sx.begin(), sx.end(), 0.0);
      double ll = 0.0;
      for (double v : x) {
        ll += t.responsibilities(v, r);
        for (std::size_t j = 0; j < K; ++j) {
          nk[j] += r[j];
          sx[j] += r[j] * v;
        }
      }
      if (observer) observer(it, ll);
      out.phi = pack(c);
      out.loglik = ll;
      out.iterations = it;
      if (it > 0 && ll - prev < settings_.tol) break;
      prev = ll;
      for (std::size_t j = 0; j < K; ++j) {
        if (!(nk[j] > 1e-12 * n)) {
          out.hit_floor = true;
          return out;
        }
        c.weight[j] = nk[j] / n;
        c.mean[j] = sx[j] / nk[j];
      }
      std::fill(sxx.begin(), sxx.end(), 0.0);
      for (double v : x) {
        t.responsibilities(v, r);
        for (std::size_t j = 0; j < K; ++j) sxx[j] += r[j] * (v - c.mean[j]) * (v - c.mean[j]);
      }
      for (std::size_t j = 0; j < K; ++j) {
        c.variance[j] = sxx[j] / nk[j];
        if (!(c.variance[j] > floor)) {
          out.hit_floor = true;
          return out;
        }
      }
    }
    return out;
  }

  /// k-means++ seeding followed by one hard assignment.
  Phi initial_guess(const Sample& x, Rng& rng) const {
    const std::size_t K = static_cast<std::size_t>(k_);
    const double var = sample_variance(x);
    std::vector<double> centre;
    centre.push_back(x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size())) % x.size()]);
    std::vector<double> d2(x.size());
    while (centre.size() < K) {
      double total = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double best = kInf;
        for (double m : centre) best = std::min(best, (x[i] - m) * (x[i] - m));
        d2[i] = best;
        total += best;
      }
      if (!(total > 0.0)) {
        centre.push_back(x[static_cast<std::size_t>(rng.uniform() * static_cast<double>(x.size())) % x.size()]);
        continue;
      }
      double pick = rng.uniform() * total;
      std::size_t i = 0;
      while (i + 1 < x.size() && pick >= d2[i]) pick -= d2[i++];
      centre.push_back(x[i]);
    }
    MixtureComponents c{std::vector<double>(K, 0.0), centre, std::vector<double>(K, 0.0)};
    std::vector<double> count(K, 0.0), sum_sq(K, 0.0);
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < K; ++j)
        if (std::abs(v - centre[j]) < std::abs(v - centre[best])) best = j;
      count[best] += 1.0;
      sum_sq[best] += (v - centre[best]) * (v - centre[best]);
    }
    for (std::size_t j = 0; j < K; ++j) {
      c.weight[j] = (count[j] + 1.0) / (static_cast<double>(x.size()) + static_cast<double>(K));
      c.variance[j] = count[j] >= 2.0 && sum_sq[j] > 0.0 ? sum_sq[j] / count[j] : var / static_cast<double>(K * K);
    }
    return pack(c);
  }

  /// Best of `restarts` EM runs, Newton-polished and (optionally) canonicalised.
  Phi fit_mle(const Sample& x, Rng& rng) const {
    if (x.size() < dim()) throw FitError("mixture aux: fewer observations than parameters");
    if (!(sample_variance(x) > 0.0)) throw FitError("mixture aux: data have zero variance");
    EmResult best;
    int degenerate = 0;
    for (int rs = 0; rs < settings_.restarts; ++rs) {
      EmResult run = em(x, initial_guess(x, rng));
      if (run.hit_floor) {
        ++degenerate;
        continue;
      }
      if (run.loglik > best.loglik) best = std::move(run);
    }
    if (best.loglik == kNegInf)
      throw FitError("mixture aux: every EM restart collapsed a component (" + std::to_string(degenerate) + " of " +
                     std::to_string(settings_.restarts) + ")");
    Phi phi = best.phi;
    if (settings_.polish) phi = newton_polish(*this, x, phi);
    return canonicalize_ ? canonical(phi) : phi;
  }

  static double sample_variance(const Sample& x) {
    if (x.empty()) return 0.0;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
  }

 private:
  /// Per-component constants for fast density evaluation.
  struct Terms {
    explicit Terms(const MixtureComponents& c) {
      for (std::size_t j = 0; j < c.weight.size(); ++j) {
        log_norm.push_back(std::log(c.weight[j]) - 0.5 * std::log(c.variance[j]) - kLogSqrt2Pi);
        mean.push_back(c.mean[j]);
        half_inv_var.push_back(0.5 / c.variance[j]);
      }
    }

    double log_density(double v, std::vector<double>& lw) const {
      double top = kNegInf;
      for (std::size_t j = 0; j < mean.size(); ++j) {
        const double e = v - mean[j];
        lw[j] = log_norm[j] - e * e * half_inv_var[j];
        top = std::max(top, lw[j]);
      }
      double s = 0.0;
      for (double l : lw) s += std::exp(l - top);
      return top + std::log(s);
    }

    /// Fills r with posterior component probabilities, returns log density.
    double responsibilities(double v, std::vector<double>& r) const {
      const double lf = log_density(v, r);
      for (double& l : r) l = std::exp(l - lf);
      return lf;
    }

    std::vector<double> log_norm;
    std::vector<double> mean;
    std::vector<double> half_inv_var;
  };

  Eigen::Index mean_index(std::size_t j) const { return static_cast<Eigen::Index>(k_ - 1) + static_cast<Eigen::Index>(j); }
  Eigen::Index var_index(std::size_t j) const {
    return static_cast<Eigen::Index>(2 * k_ - 1) + static_cast<Eigen::Index>(j);
  }

  int k_;
  bool canonicalize_;
  EmSettings settings_;
};

}  // namespace bii

#endif  // BII_AUXILIARY_MIXTURE_HPP
