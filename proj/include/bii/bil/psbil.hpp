#ifndef BII_BIL_PSBIL_HPP
#define BII_BIL_PSBIL_HPP

#include <cmath>
#include <concepts>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bii/models/generative.hpp"
#include "bii/special.hpp"

namespace bii {

/// Gaussian synthetic likelihood fitted to n simulated summaries.
struct SynthLikEstimate {
  Vector mu;
  Matrix sigma;  // 1/n-denominator MLE
  double loglik = kNegInf;
};

/// log N(s_y; mu, Sigma) with (mu, Sigma) the Gaussian MLE of `summaries`.
/// Throws NumericalError naming the degenerate direction when Sigma is singular.
inline SynthLikEstimate synthetic_loglik(const std::vector<Vector>& summaries, const Vector& s_y) {
  const std::size_t n = summaries.size();
  const Eigen::Index d = s_y.size();
  require(d >= 1, "psbil: empty summary statistic");
  require(n > static_cast<std::size_t>(d) + 1, "psbil: need n > dim(s) + 1 simulated summaries");
  SynthLikEstimate est;
  est.mu = Vector::Zero(d);
  for (const auto& s : summaries) {
    require(s.size() == d, "psbil: summary dimension mismatch");
    est.mu += s;
  }
  est.mu /= static_cast<double>(n);
  est.sigma = Matrix::Zero(d, d);
  for (const auto& s : summaries) {
    const Vector c = s - est.mu;
    est.sigma.noalias() += c * c.transpose();
  }
  est.sigma /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(est.sigma);
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (!(ev.minCoeff() > 1e-12 * scale) || ev.maxCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "psbil: singular summary covariance (smallest eigenvalue " << ev.minCoeff()
        << ") along direction [";
    const Vector dir = es.eigenvectors().col(0);
    for (Eigen::Index i = 0; i < dir.size(); ++i) msg << (i ? ", " : "") << dir[i];
    msg << ']';
    throw NumericalError(msg.str());
  }
  const Vector diff = s_y - est.mu;
  const Vector proj = es.eigenvectors().transpose() * diff;
  double quad = 0.0;
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    quad += proj[i] * proj[i] / ev[i];
    logdet += std::log(ev[i]);
  }
  est.loglik = -0.5 * quad - 0.5 * logdet - static_cast<double>(d) * kLogSqrt2Pi;
  return est;
}

/// Simulate n datasets of size N at theta, summarise each with s(.), and
/// evaluate the synthetic likelihood of s_y. s may take the Rng as a second
/// argument (e.g. a randomised MLE fit).
template <GenerativeModel G, class Summary>
SynthLikEstimate psbil_loglik(const G& gen, const Summary& summary, const Theta& theta, const Vector& s_y,
                              std::size_t dataset_size, std::size_t n, Rng& rng) {
  std::vector<Vector> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = gen.simulate(theta, dataset_size, rng);
    if constexpr (std::invocable<const Summary&, const typename G::data_type&, Rng&>) s.push_back(summary(x, rng));
    else s.push_back(summary(x));
  }
  return synthetic_loglik(s, s_y);
}

}  // namespace bii

#endif  // BII_BIL_PSBIL_HPP
