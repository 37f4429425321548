#ifndef BII_MCMC_PROPOSAL_HPP
#define BII_MCMC_PROPOSAL_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "bii/core.hpp"
#include "bii/rng.hpp"
#include "bii/special.hpp"

namespace bii {

enum class TransformKind { identity, log, logit };

/// Map from a constrained coordinate to the real line where the random walk
/// runs. logit uses the interval (lo, hi).
struct CoordinateTransform {
  TransformKind kind = TransformKind::identity;
  double lo = 0.0;
  double hi = 1.0;

  static CoordinateTransform identity() { return {}; }
  static CoordinateTransform log() { return {TransformKind::log, 0.0, 0.0}; }
  static CoordinateTransform logit(double lo, double hi) { return {TransformKind::logit, lo, hi}; }

  double forward(double x) const {
    switch (kind) {
      case TransformKind::identity: return x;
      case TransformKind::log: return std::log(x);
      case TransformKind::logit: return bii::logit((x - lo) / (hi - lo));
    }
    return x;
  }

  double inverse(double u) const {
    switch (kind) {
      case TransformKind::identity: return u;
      case TransformKind::log: return std::exp(u);
      case TransformKind::logit: return lo + (hi - lo) * logistic(u);
    }
    return u;
  }

  /// log |dx/du| at x.
  double log_jacobian(double x) const {
    switch (kind) {
      case TransformKind::identity: return 0.0;
      case TransformKind::log: return x > 0.0 ? std::log(x) : kNegInf;
      case TransformKind::logit:
        if (!(x > lo && x < hi)) return kNegInf;
        return std::log(x - lo) + std::log(hi - x) - std::log(hi - lo);
    }
    return 0.0;
  }
};

inline std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::identity: return "identity";
    case TransformKind::log: return "log";
    case TransformKind::logit: return "logit";
  }
  return "?";
}

/// Gaussian random walk on the transformed scale.
class ProposalSpec {
 public:
  ProposalSpec() = default;
  ProposalSpec(Matrix covariance, std::vector<CoordinateTransform> transforms)
      : covariance_(std::move(covariance)), transforms_(std::move(transforms)) {
    const Eigen::Index d = covariance_.rows();
    require(d >= 1 && covariance_.cols() == d, "proposal: covariance must be square");
    if (transforms_.empty()) transforms_.assign(static_cast<std::size_t>(d), CoordinateTransform::identity());
    require(transforms_.size() == static_cast<std::size_t>(d), "proposal: one transform per coordinate");
    require((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + covariance_.cwiseAbs().maxCoeff()),
            "proposal: covariance must be symmetric");
    chol_.compute(covariance_);
    require(chol_.info() == Eigen::Success, "proposal: covariance must be positive definite");
  }

  static ProposalSpec diagonal(const Vector& sd, std::vector<CoordinateTransform> transforms = {}) {
    return ProposalSpec(Matrix(sd.array().square().matrix().asDiagonal()), std::move(transforms));
  }

  std::size_t dim() const { return static_cast<std::size_t>(covariance_.rows()); }
  const Matrix& covariance() const { return covariance_; }
  const std::vector<CoordinateTransform>& transforms() const { return transforms_; }

  Vector to_unconstrained(const Theta& theta) const {
    Vector u(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) u[i] = transforms_[static_cast<std::size_t>(i)].forward(theta[i]);
    return u;
  }

  Theta from_unconstrained(const Vector& u) const {
    Theta t(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) t[i] = transforms_[static_cast<std::size_t>(i)].inverse(u[i]);
    return t;
  }

  double log_jacobian(const Theta& theta) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) s += transforms_[static_cast<std::size_t>(i)].log_jacobian(theta[i]);
    return s;
  }

  /// Symmetric step u + L z, z ~ N(0, I).
  Vector step(const Vector& u, Rng& rng) const {
    Vector z(u.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return u + chol_.matrixL() * z;
  }

 private:
  Matrix covariance_;
  std::vector<CoordinateTransform> transforms_;
  Eigen::LLT<Matrix> chol_;
};

}  // namespace bii

#endif  // BII_MCMC_PROPOSAL_HPP
