#ifndef BII_MCMC_CHAIN_HPP
#define BII_MCMC_CHAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bii/core.hpp"

namespace bii {

/// Stored MCMC trace. Row 0 is the starting state; every later row is the
/// state after one MH transition (or every `thin`-th one). On rejection the
/// row repeats the previous state bit-for-bit, cached value included.
class Chain {
 public:
  Chain() = default;
  Chain(std::size_t dim, std::size_t aux_dim) : dim_(dim), aux_dim_(aux_dim) {}

  std::vector<std::string> theta_names;
  std::vector<std::string> aux_names;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t failures = 0;  // simulations whose auxiliary fit failed

  /// Cached value of every proposal (rho or loglik; -inf/+inf when rejected
  /// by the prior), kept only when requested for tuning.
  std::vector<double> proposal_cached;

  void push(std::size_t iteration, const Theta& theta, bool accepted, const Vector& summary, double cached) {
    require(static_cast<std::size_t>(theta.size()) == dim_, "chain: theta dimension mismatch");
    require(static_cast<std::size_t>(summary.size()) == aux_dim_, "chain: summary dimension mismatch");
    iter_.push_back(iteration);
    thetas_.insert(thetas_.end(), theta.data(), theta.data() + theta.size());
    summaries_.insert(summaries_.end(), summary.data(), summary.data() + summary.size());
    accepted_.push_back(accepted ? 1 : 0);
    cached_.push_back(cached);
  }

  /// Counts transitions, stored or not.
  void count(bool accepted) {
    ++iterations_;
    if (accepted) ++accept_count_;
  }

  std::size_t dim() const { return dim_; }
  std::size_t aux_dim() const { return aux_dim_; }
  std::size_t size() const { return iter_.size(); }
  std::size_t iterations() const { return iterations_; }
  std::size_t accept_count() const { return accept_count_; }

  std::size_t iteration(std::size_t row) const { return iter_.at(row); }
  bool accepted(std::size_t row) const { return accepted_.at(row) != 0; }
  double cached(std::size_t row) const { return cached_.at(row); }
  double theta(std::size_t row, std::size_t j) const { return thetas_[row * dim_ + j]; }
  double summary(std::size_t row, std::size_t j) const { return summaries_[row * aux_dim_ + j]; }

  Theta theta_row(std::size_t row) const {
    require(row < size(), "chain: row out of range");
    return Eigen::Map<const Vector>(thetas_.data() + row * dim_, static_cast<Eigen::Index>(dim_));
  }
  Vector summary_row(std::size_t row) const {
    require(row < size(), "chain: row out of range");
    return Eigen::Map<const Vector>(summaries_.data() + row * aux_dim_, static_cast<Eigen::Index>(aux_dim_));
  }
  std::vector<double> theta_column(std::size_t j) const {
    require(j < dim_, "chain: parameter index out of range");
    std::vector<double> out(size());
    for (std::size_t r = 0; r < size(); ++r) out[r] = theta(r, j);
    return out;
  }
  const std::vector<double>& cached_values() const { return cached_; }

 private:
  std::size_t dim_ = 0;
  std::size_t aux_dim_ = 0;
  std::vector<std::size_t> iter_;
  std::vector<double> thetas_;
  std::vector<double> summaries_;
  std::vector<std::uint8_t> accepted_;
  std::vector<double> cached_;
  std::size_t iterations_ = 0;
  std::size_t accept_count_ = 0;
};

/// Accepted transitions over transitions. A chain holding only its
/// starting state has rate 0.
inline double acceptance_rate(const Chain& chain) {
  if (chain.iterations() == 0) return 0.0;
  return static_cast<double>(chain.accept_count()) / static_cast<double>(chain.iterations());
}

inline double acceptance_rate(const std::vector<bool>& flags) {
  require(!flags.empty(), "acceptance_rate: empty trace");
  std::size_t a = 0;
  for (bool f : flags) a += f ? 1 : 0;
  return static_cast<double>(a) / static_cast<double>(flags.size());
}

}  // namespace bii

#endif  // BII_MCMC_CHAIN_HPP
