#ifndef BII_POST_REGRESSION_HPP
#define BII_POST_REGRESSION_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "bii/core.hpp"
#include "bii/log.hpp"

namespace bii {

enum class ParamTransform { identity, log, sqrt, neglog };

inline std::string to_string(ParamTransform t) {
  switch (t) {
    case ParamTransform::identity: return "identity";
    case ParamTransform::log: return "log";
    case ParamTransform::sqrt: return "sqrt";
    case ParamTransform::neglog: return "neglog";
  }
  return "?";
}

inline ParamTransform param_transform_from_string(const std::string& s) {
  if (s == "identity") return ParamTransform::identity;
  if (s == "log") return ParamTransform::log;
  if (s == "sqrt") return ParamTransform::sqrt;
  if (s == "neglog") return ParamTransform::neglog;
  throw ValidationError("unknown parameter transform '" + s + "' (identity, log, sqrt, neglog)");
}

inline double forward(ParamTransform t, double x) {
  switch (t) {
    case ParamTransform::identity: return x;
    case ParamTransform::log: return std::log(x);
    case ParamTransform::sqrt: return std::sqrt(x);
    case ParamTransform::neglog: return -std::log(x);
  }
  return x;
}

inline double backward(ParamTransform t, double v) {
  switch (t) {
    case ParamTransform::identity: return v;
    case ParamTransform::log: return std::exp(v);
    case ParamTransform::sqrt: return v * v;
    case ParamTransform::neglog: return std::exp(-v);
  }
  return v;
}

struct AdjustmentSpec {
  std::vector<ParamTransform> transforms;  // empty: identity everywhere
  std::optional<double> bandwidth;         // default: just above the largest rho
  std::size_t thin = 1;
};

struct AdjustmentResult {
  Matrix adjusted;   // rows: retained samples, back on the parameter scale
  Matrix original;   // the same rows before adjustment
  Vector weights;    // Epanechnikov weights
  Matrix slopes;     // dim(s) x dim(theta) on the transformed scale; dropped rows are zero
  std::vector<std::size_t> dropped;  // summary columns removed as collinear
  double bandwidth = 0.0;
};

inline double epanechnikov(double r) { return r < 1.0 ? 1.0 - r * r : 0.0; }

/// Local-linear regression adjustment (Beaumont et al.). For each
/// transformed parameter fit theta = m + (s - s_obs)^T b by weighted least
/// squares and return theta - (s - s_obs)^T b_hat.
inline AdjustmentResult regression_adjust(const Matrix& theta, const Matrix& summaries, const Vector& rho,
                                          const Vector& s_obs, const AdjustmentSpec& spec = {}) {
  require(spec.thin >= 1, "adjust: thin must be at least 1");
  require(theta.rows() == summaries.rows() && theta.rows() == rho.size(), "adjust: row counts differ");
  require(summaries.cols() == s_obs.size(), "adjust: summary dimension mismatch");
  const Eigen::Index d = theta.cols();
  const Eigen::Index p = summaries.cols();
  std::vector<ParamTransform> tr = spec.transforms;
  if (tr.empty()) tr.assign(static_cast<std::size_t>(d), ParamTransform::identity);
  require(tr.size() == static_cast<std::size_t>(d), "adjust: one transform per parameter");

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < theta.rows(); i += static_cast<Eigen::Index>(spec.thin)) rows.push_back(i);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  require(n >= p + 1, "adjust: need at least dim(s)+1 samples");

  AdjustmentResult res;
  res.original.resize(n, d);
  Matrix t(n, d);
  Matrix s(n, p);
  Vector r(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    res.original.row(k) = theta.row(rows[static_cast<std::size_t>(k)]);
    s.row(k) = summaries.row(rows[static_cast<std::size_t>(k)]) - s_obs.transpose();
    r[k] = rho[rows[static_cast<std::size_t>(k)]];
    for (Eigen::Index j = 0; j < d; ++j) t(k, j) = forward(tr[static_cast<std::size_t>(j)], res.original(k, j));
  }
  require(s.allFinite() && r.allFinite(), "adjust: summaries and discrepancies must be finite");
  require(t.allFinite(), "adjust: a transform is undefined on some sample");

  const double max_rho = r.maxCoeff();
  res.bandwidth = spec.bandwidth.value_or(max_rho * (1.0 + 1e-6));
  res.weights.resize(n);
  if (res.bandwidth > 0.0) {
    for (Eigen::Index k = 0; k < n; ++k) res.weights[k] = epanechnikov(r[k] / res.bandwidth);
  } else {
    require(!spec.bandwidth.has_value(), "adjust: bandwidth must be positive");
    res.weights.setOnes();  // every rho is zero
  }
  const double wsum = res.weights.sum();
  require(wsum > 0.0, "adjust: every sample has zero kernel weight");

  // Weighted centring absorbs the intercept.
  const Vector sw = res.weights.array().sqrt();
  const Vector s_bar = (s.transpose() * res.weights) / wsum;
  const Vector t_bar = (t.transpose() * res.weights) / wsum;
  Matrix x = (s.rowwise() - s_bar.transpose()).array().colwise() * sw.array();
  Matrix yv = (t.rowwise() - t_bar.transpose()).array().colwise() * sw.array();

  res.slopes = Matrix::Zero(p, d);
  if (p > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < rank; ++i) keep.push_back(qr.colsPermutation().indices()[i]);
    std::sort(keep.begin(), keep.end());
    for (Eigen::Index c = 0; c < p; ++c)
      if (!std::binary_search(keep.begin(), keep.end(), c)) res.dropped.push_back(static_cast<std::size_t>(c));
    if (!res.dropped.empty()) {
      nlohmann::json cols = nlohmann::json::array();
      for (auto c : res.dropped) cols.push_back(c);
      log_event(LogLevel::warn, "adjust_collinear_summaries_dropped", {{"columns", cols}});
    }
    if (rank > 0) {
      Matrix xk(n, rank);
      for (Eigen::Index i = 0; i < rank; ++i) xk.col(i) = x.col(keep[static_cast<std::size_t>(i)]);
      const Matrix b = xk.colPivHouseholderQr().solve(yv);
      for (Eigen::Index i = 0; i < rank; ++i) res.slopes.row(keep[static_cast<std::size_t>(i)]) = b.row(i);
    }
  }

  const Matrix shift = s * res.slopes;
  res.adjusted.resize(n, d);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index j = 0; j < d; ++j)
      res.adjusted(k, j) = backward(tr[static_cast<std::size_t>(j)], t(k, j) - shift(k, j));
  return res;
}

}  // namespace bii

#endif  // BII_POST_REGRESSION_HPP
