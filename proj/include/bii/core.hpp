#ifndef BII_CORE_HPP
#define BII_CORE_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bii {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Generative-model parameter. Coordinate labels come from the model.
using Theta = Vector;
/// Auxiliary-model parameter.
using Phi = Vector;

/// Scalar i.i.d. observations (Poisson, g-and-k).
using Sample = std::vector<double>;

/// One host of the macroparasite experiment: matured count m out of l
/// injected larvae, observed at sacrifice time t (days).
struct HostRecord {
  int matured = 0;
  int larvae = 0;
  double time = 1.0;

  friend bool operator==(const HostRecord&, const HostRecord&) = default;
};

using HostData = std::vector<HostRecord>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bad input or configuration: caller error, detected before computing.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure during computation (non-convergence, singular matrix).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An auxiliary-model MLE could not be obtained.
class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// One of the ABC II working assumptions does not hold for this setup.
class AssumptionViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

template <class Range>
std::size_t record_count(const Range& data) {
  return static_cast<std::size_t>(std::size(data));
}

/// Concatenate replicate datasets into the pooled x_{1:n}.
template <class Data>
Data pool(const std::vector<Data>& replicates) {
  Data out;
  for (const auto& r : replicates) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace bii

#endif  // BII_CORE_HPP
