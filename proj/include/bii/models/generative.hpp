#ifndef BII_MODELS_GENERATIVE_HPP
#define BII_MODELS_GENERATIVE_HPP

#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/rng.hpp"

namespace bii {

/// A simulator p(.|theta). simulate(theta, size, rng) draws `size` records;
/// pooled replicates x_{1:n} are obtained by asking for n*N records.
template <class M>
concept GenerativeModel = requires(const M& m, const Theta& theta, std::size_t size, Rng& rng) {
  typename M::data_type;
  { m.simulate(theta, size, rng) } -> std::same_as<typename M::data_type>;
  { m.valid(theta) } -> std::convertible_to<bool>;
  { m.dim() } -> std::convertible_to<std::size_t>;
  { m.parameter_names() } -> std::convertible_to<std::vector<std::string>>;
};

/// Draw n replicates of `size` records each.
template <GenerativeModel M>
std::vector<typename M::data_type> simulate_replicates(const M& model, const Theta& theta, std::size_t size,
                                                       std::size_t n, Rng& rng) {
  std::vector<typename M::data_type> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(model.simulate(theta, size, rng));
  return out;
}

}  // namespace bii

#endif  // BII_MODELS_GENERATIVE_HPP
