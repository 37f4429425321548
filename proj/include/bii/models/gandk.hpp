#ifndef BII_MODELS_GANDK_HPP
#define BII_MODELS_GANDK_HPP

#include <cmath>
#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/rng.hpp"
#include "bii/special.hpp"

namespace bii {

struct GandKParams {
  double a = 0.0;
  double b = 1.0;
  double c = 0.8;
  double g = 0.0;
  double k = 0.0;
};

/// Q as a function of the standard normal quantile z.
inline double gk_transform(double z, const GandKParams& p) {
  return p.a + p.b * (1.0 + p.c * std::tanh(0.5 * p.g * z)) * std::pow(1.0 + z * z, p.k) * z;
}

/// dQ/dz.
inline double gk_transform_derivative(double z, const GandKParams& p) {
  const double th = std::tanh(0.5 * p.g * z);
  const double sech2 = 1.0 - th * th;
  const double w = std::pow(1.0 + z * z, p.k - 1.0);
  return p.b * (p.c * 0.5 * p.g * sech2 * (1.0 + z * z) * w * z + (1.0 + p.c * th) * w * (1.0 + z * z + 2.0 * p.k * z * z));
}

/// g-and-k quantile function at probability p.
inline double gk_quantile(double p, const GandKParams& params) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("gk_quantile: p must lie in (0,1)");
  if (!(params.b > 0.0)) throw ValidationError("gk_quantile: b must be positive");
  return gk_transform(normal_quantile(p), params);
}

/// Solve Q(z) = x for z by bisection on [-10, 10] followed by Newton polish.
inline double gk_invert(double x, const GandKParams& p) {
  double lo = -10.0;
  double hi = 10.0;
  const double qlo = gk_transform(lo, p);
  const double qhi = gk_transform(hi, p);
  if (!(x >= qlo && x <= qhi))
    throw NumericalError("gk_logpdf: x=" + std::to_string(x) + " outside numeric support [" + std::to_string(qlo) +
                         ", " + std::to_string(qhi) + "]");
  for (int it = 0; it < 60 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gk_transform(mid, p) < x ? lo : hi) = mid;
  }
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const double step = (gk_transform(z, p) - x) / gk_transform_derivative(z, p);
    const double next = z - step;
    if (!(next >= lo - 1e-9 && next <= hi + 1e-9)) break;
    z = next;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
  }
  return z;
}

/// Numerical g-and-k log density: log phi(z*) - log Q'(z*), Q(z*) = x.
inline double gk_logpdf(double x, const GandKParams& p) {
  if (!(p.b > 0.0)) throw ValidationError("gk_logpdf: b must be positive");
  const double z = gk_invert(x, p);
  return normal_logpdf(z) - std::log(gk_transform_derivative(z, p));
}

/// g-and-k distribution with c fixed; theta = (a, b, g, k).
class GandKModel {
 public:
  using data_type = Sample;

  explicit GandKModel(double c = 0.8) : c_(c) {}

  double c() const { return c_; }
  std::size_t dim() const { return 4; }
  std::vector<std::string> parameter_names() const { return {"a", "b", "g", "k"}; }

  bool valid(const Theta& theta) const {
    return theta.size() == 4 && theta.allFinite() && theta[1] > 0.0 && theta[3] > -0.5;
  }

  GandKParams params(const Theta& theta) const { return {theta[0], theta[1], c_, theta[2], theta[3]}; }

  /// Inversion sampling: x = Q(z(u)), u ~ U(0,1).
  Sample simulate(const Theta& theta, std::size_t size, Rng& rng) const {
    if (!valid(theta)) throw ValidationError("g-and-k: requires b > 0 and k > -0.5");
    if (size == 0) throw ValidationError("g-and-k: dataset size must be positive");
    const GandKParams p = params(theta);
    Sample out(size);
    for (auto& v : out) v = gk_transform(normal_quantile(rng.uniform()), p);
    return out;
  }

  double loglik(const Sample& y, const Theta& theta) const {
    const GandKParams p = params(theta);
    double ll = 0.0;
    for (double v : y) ll += gk_logpdf(v, p);
    return ll;
  }

 private:
  double c_;
};

}  // namespace bii

#endif  // BII_MODELS_GANDK_HPP
