#ifndef BII_MODELS_MJP_ORACLE_HPP
#define BII_MODELS_MJP_ORACLE_HPP

#include <cmath>
#include <sstream>
#include <vector>

#include "bii/core.hpp"
#include "bii/models/macroparasite.hpp"

namespace bii {

/// Law of M(t) for one host, from the truncated transition generator.
struct MatureDistribution {
  std::vector<double> probability;  // P(M(t) = m), m = 0..max
  double leaked = 0.0;              // mass that crossed the immunity cap
};

/// State space {(M, L, I) : M + L <= total, 0 <= I <= cap} plus one absorbing
/// sink collecting every jump to I = cap + 1.
class TruncatedHostChain {
 public:
  struct Transition {
    std::size_t from;
    std::size_t to;
    double rate;
  };

  TruncatedHostChain(const MacroparasiteRates& rates, int total, int cap) : total_(total), cap_(cap) {
    require(total >= 0 && cap >= 0, "mjp oracle: total and cap must be non-negative");
    const std::size_t n = state_count();
    exit_rate_.assign(n, 0.0);
    for (int m = 0; m <= total_; ++m) {
      for (int l = 0; m + l <= total_; ++l) {
        for (int i = 0; i <= cap_; ++i) {
          const HostState s{m, l, i};
          const auto a = rates.propensities(s);
          for (std::size_t e = 0; e < a.size(); ++e) {
            if (a[e] <= 0.0) continue;
            const HostState next = apply(s, static_cast<HostEvent>(e));
            const std::size_t to = next.immunity > cap_ ? sink() : index(next);
            transitions_.push_back({index(s), to, a[e]});
            exit_rate_[index(s)] += a[e];
          }
        }
      }
    }
  }

  std::size_t sink() const { return live_states(); }
  std::size_t state_count() const { return live_states() + 1; }

  std::size_t index(const HostState& s) const {
    // Triangular (M, L) block times the immunity axis.
    const int m = s.mature;
    const std::size_t before_m =
        static_cast<std::size_t>(m) * (total_ + 1) - static_cast<std::size_t>(m) * (m - 1) / 2;
    const std::size_t tri = before_m + static_cast<std::size_t>(s.larvae);
    return tri * static_cast<std::size_t>(cap_ + 1) + static_cast<std::size_t>(s.immunity);
  }

  double max_exit_rate() const {
    double r = 0.0;
    for (double e : exit_rate_) r = std::max(r, e);
    return r;
  }

  /// p(t) = p(0) exp(Q t) by uniformisation, stepping so that each step's
  /// Poisson(Lambda dt) weights stay well inside double range.
  std::vector<double> propagate(std::vector<double> p, double t) const {
    const double lambda = max_exit_rate();
    if (lambda <= 0.0 || t <= 0.0) return p;
    const double max_step_mass = 20.0;
    const int steps = std::max(1, static_cast<int>(std::ceil(lambda * t / max_step_mass)));
    const double lt = lambda * t / steps;
    std::vector<double> term(p.size());
    std::vector<double> next(p.size());
    std::vector<double> acc(p.size());
    for (int s = 0; s < steps; ++s) {
      term = p;
      double weight = std::exp(-lt);
      for (std::size_t k = 0; k < p.size(); ++k) acc[k] = weight * term[k];
      for (int n = 1; n < 10000 && !(n > lt && weight < 1e-18); ++n) {
        // term <- term * P with P = I + Q / lambda.
        for (std::size_t k = 0; k < term.size(); ++k) next[k] = term[k] * (1.0 - exit_rate_[k] / lambda);
        for (const auto& tr : transitions_) next[tr.to] += term[tr.from] * tr.rate / lambda;
        term.swap(next);
        weight *= lt / n;
        for (std::size_t k = 0; k < p.size(); ++k) acc[k] += weight * term[k];
      }
      p = acc;
    }
    return p;
  }

  const std::vector<Transition>& transitions() const { return transitions_; }
  const std::vector<double>& exit_rates() const { return exit_rate_; }

 private:
  std::size_t live_states() const {
    const std::size_t tri = static_cast<std::size_t>(total_ + 1) * static_cast<std::size_t>(total_ + 2) / 2;
    return tri * static_cast<std::size_t>(cap_ + 1);
  }

  int total_;
  int cap_;
  std::vector<Transition> transitions_;
  std::vector<double> exit_rate_;
};

/// Marginal law of M(t) from `start` via the matrix exponential of the
/// immunity-truncated generator. Throws if more than `max_leak` probability
/// crosses the cap.
inline MatureDistribution mjp_oracle_dist(const MacroparasiteRates& rates, HostState start, double t, int cap,
                                          double max_leak = 1e-8) {
  require(start.mature >= 0 && start.larvae >= 0 && start.immunity >= 0, "mjp oracle: negative start state");
  require(start.immunity <= cap, "mjp oracle: start immunity exceeds cap");
  require(t >= 0.0, "mjp oracle: negative time");
  const int total = start.mature + start.larvae;
  const TruncatedHostChain chain(rates, total, cap);
  std::vector<double> p(chain.state_count(), 0.0);
  p[chain.index(start)] = 1.0;
  p = chain.propagate(std::move(p), t);

  MatureDistribution out;
  out.probability.assign(static_cast<std::size_t>(total + 1), 0.0);
  for (int m = 0; m <= total; ++m)
    for (int l = 0; m + l <= total; ++l)
      for (int i = 0; i <= cap; ++i) out.probability[static_cast<std::size_t>(m)] += p[chain.index({m, l, i})];
  out.leaked = p[chain.sink()];
  if (out.leaked > max_leak) {
    std::ostringstream msg;
    msg << "mjp oracle: immunity cap " << cap << " too small, " << out.leaked << " probability lost to truncation";
    throw NumericalError(msg.str());
  }
  return out;
}

/// Convenience overload: host injected with l larvae at time 0.
inline MatureDistribution mjp_oracle_dist(const MacroparasiteModel& model, const Theta& theta, int larvae, double t,
                                          int cap, double max_leak = 1e-8) {
  if (!model.valid(theta)) throw ValidationError("mjp oracle: invalid theta");
  return mjp_oracle_dist(model.rates(theta), HostState{0, larvae, 0}, t, cap, max_leak);
}

}  // namespace bii

#endif  // BII_MODELS_MJP_ORACLE_HPP
