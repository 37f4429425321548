#ifndef BII_PRIOR_HPP
#define BII_PRIOR_HPP

#include <cmath>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "bii/core.hpp"
#include "bii/rng.hpp"

namespace bii {

struct UniformPrior {
  double lo = 0.0;
  double hi = 1.0;
};

/// Gamma(shape, rate): density proportional to x^(shape-1) exp(-rate x).
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

using Marginal = std::variant<UniformPrior, GammaPrior>;

inline void validate(const Marginal& m) {
  std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformPrior>) {
          require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo < d.hi, "uniform prior requires lo < hi");
        } else {
          require(d.shape > 0.0 && d.rate > 0.0, "gamma prior requires shape > 0 and rate > 0");
        }
      },
      m);
}

inline double marginal_logpdf(const Marginal& m, double x) {
  return std::visit(
      [x](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformPrior>) {
          if (!(x >= d.lo && x <= d.hi)) return kNegInf;
          return -std::log(d.hi - d.lo);
        } else {
          if (!(x > 0.0)) return kNegInf;
          return d.shape * std::log(d.rate) - std::lgamma(d.shape) + (d.shape - 1.0) * std::log(x) - d.rate * x;
        }
      },
      m);
}

inline double marginal_sample(const Marginal& m, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformPrior>) {
          return rng.uniform(d.lo, d.hi);
        } else {
          return rng.gamma(d.shape, d.rate);
        }
      },
      m);
}

inline double marginal_mean(const Marginal& m) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformPrior>) return 0.5 * (d.lo + d.hi);
        else return d.shape / d.rate;
      },
      m);
}

inline double marginal_sd(const Marginal& m) {
  return std::visit(
      [](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, UniformPrior>) return (d.hi - d.lo) / std::sqrt(12.0);
        else return std::sqrt(d.shape) / d.rate;
      },
      m);
}

/// Product prior over the coordinates of theta.
class Prior {
 public:
  Prior() = default;
  explicit Prior(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
    require(!marginals_.empty(), "prior needs at least one coordinate");
    for (const auto& m : marginals_) validate(m);
  }

  std::size_t dim() const { return marginals_.size(); }
  const std::vector<Marginal>& marginals() const { return marginals_; }
  const Marginal& operator[](std::size_t i) const { return marginals_[i]; }

  /// Exact log density; -inf outside the support.
  double logpdf(const Theta& theta) const {
    if (static_cast<std::size_t>(theta.size()) != dim())
      throw ValidationError("prior_logpdf: dimension mismatch (prior " + std::to_string(dim()) + ", theta " +
                            std::to_string(theta.size()) + ")");
    double lp = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      lp += marginal_logpdf(marginals_[i], theta[static_cast<Eigen::Index>(i)]);
      if (lp == kNegInf) return kNegInf;
    }
    return lp;
  }

  bool in_support(const Theta& theta) const { return logpdf(theta) > kNegInf; }

  Theta sample(Rng& rng) const {
    Theta t(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i) t[static_cast<Eigen::Index>(i)] = marginal_sample(marginals_[i], rng);
    return t;
  }

 private:
  std::vector<Marginal> marginals_;
};

}  // namespace bii

#endif  // BII_PRIOR_HPP
