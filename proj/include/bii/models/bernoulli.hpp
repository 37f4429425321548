#ifndef BII_MODELS_BERNOULLI_HPP
#define BII_MODELS_BERNOULLI_HPP

#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/rng.hpp"

namespace bii {

/// Bernoulli(theta) draws; small discrete model with an enumerable
/// single-observation support, used to check kernel-likelihood algebra.
class BernoulliModel {
 public:
  using data_type = Sample;

  std::size_t dim() const { return 1; }
  std::vector<std::string> parameter_names() const { return {"p"}; }
  bool valid(const Theta& theta) const { return theta.size() == 1 && theta[0] >= 0.0 && theta[0] <= 1.0; }

  Sample simulate(const Theta& theta, std::size_t size, Rng& rng) const {
    if (!valid(theta)) throw ValidationError("bernoulli: p must lie in [0,1]");
    if (size == 0) throw ValidationError("bernoulli: dataset size must be positive");
    Sample out(size);
    for (auto& v : out) v = rng.bernoulli(theta[0]) ? 1.0 : 0.0;
    return out;
  }

  /// All single-record datasets with their probabilities.
  std::vector<std::pair<Sample, double>> enumerate(const Theta& theta) const {
    return {{Sample{0.0}, 1.0 - theta[0]}, {Sample{1.0}, theta[0]}};
  }
};

}  // namespace bii

#endif  // BII_MODELS_BERNOULLI_HPP
