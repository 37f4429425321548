#ifndef BII_MCMC_TUNING_HPP
#define BII_MCMC_TUNING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bii/abc/discrepancy.hpp"
#include "bii/log.hpp"
#include "bii/mcmc/chain.hpp"
#include "bii/mcmc/proposal.hpp"
#include "bii/models/generative.hpp"
#include "bii/prior.hpp"

namespace bii {

struct PilotDraw {
  Theta theta;
  double rho = kInf;
};

/// Prior-predictive pilot: P draws theta ~ prior, one simulated dataset each,
/// and its discrepancy (+inf when the auxiliary fit fails).
template <GenerativeModel G, AuxiliaryModel A>
  requires std::same_as<typename G::data_type, typename A::data_type>
std::vector<PilotDraw> abc_prior_pilot(const G& gen, const A& aux, AbcMethod method, const Prior& prior,
                                       const typename A::data_type& y, const ObservedSummary& obs, std::size_t draws,
                                       Rng& rng) {
  require(draws >= 1, "pilot: need at least one draw");
  std::vector<PilotDraw> out;
  out.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    Theta theta = prior.sample(rng);
    double rho = kInf;
    if (gen.valid(theta)) {
      const auto x = gen.simulate(theta, record_count(y), rng);
      const AbcEvaluation ev = abc_evaluate(method, obs, aux, y, x, rng);
      if (!ev.fit_failed) rho = ev.rho;
    }
    out.push_back({std::move(theta), rho});
  }
  return out;
}

inline std::vector<double> pilot_discrepancies(const std::vector<PilotDraw>& pilot) {
  std::vector<double> rho;
  rho.reserve(pilot.size());
  for (const auto& p : pilot) rho.push_back(std::isnan(p.rho) ? kInf : p.rho);
  return rho;
}

/// Pilot draw with the smallest discrepancy.
inline Theta best_pilot_theta(const std::vector<PilotDraw>& pilot) {
  require(!pilot.empty(), "pilot: empty");
  const auto it = std::min_element(pilot.begin(), pilot.end(),
                                   [](const PilotDraw& a, const PilotDraw& b) { return a.rho < b.rho; });
  if (!std::isfinite(it->rho)) throw NumericalError("pilot: every simulation failed");
  return it->theta;
}

/// 2.38^2/d times the sample covariance of the chain on the proposal's
/// unconstrained scale, with a small ridge. Returns the input proposal when
/// the chain has too few distinct states to estimate a covariance.
inline ProposalSpec proposal_from_chain(const Chain& chain, const ProposalSpec& current, std::size_t min_accepted = 20) {
  const std::size_t d = chain.dim();
  if (chain.accept_count() < std::max<std::size_t>(min_accepted, d + 1)) return current;
  Matrix u(static_cast<Eigen::Index>(chain.size()), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < chain.size(); ++r) u.row(static_cast<Eigen::Index>(r)) = current.to_unconstrained(chain.theta_row(r)).transpose();
  const Vector mean = u.colwise().mean();
  const Matrix c = u.rowwise() - mean.transpose();
  Matrix cov = (c.transpose() * c) / static_cast<double>(chain.size() - 1);
  cov *= 2.38 * 2.38 / static_cast<double>(d);
  const double ridge = 1e-10 * std::max(cov.diagonal().maxCoeff(), 1e-300);
  cov.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || !cov.allFinite()) return current;
  return ProposalSpec(cov, current.transforms());
}

/// Rounds of short frozen chains, each refitting the proposal covariance from
/// the previous one and restarting at its final state.
inline ProposalSpec tune_proposal(const std::function<Chain(const ProposalSpec&, const Theta&, std::size_t)>& run,
                                  ProposalSpec proposal, Theta& theta0, std::size_t rounds, std::size_t length) {
  for (std::size_t r = 0; r < rounds; ++r) {
    const Chain chain = run(proposal, theta0, length);
    proposal = proposal_from_chain(chain, proposal);
    theta0 = chain.theta_row(chain.size() - 1);
    log_event(LogLevel::info, "tune_round", {{"round", r}, {"acceptance", acceptance_rate(chain)}});
  }
  return proposal;
}

struct AbcTuning {
  double epsilon = kInf;
  ProposalSpec proposal;
  Theta theta0;
  std::vector<double> epsilon_history;
  std::vector<double> acceptance_history;
};

/// Like tune_proposal, and when a target acceptance rate is given also moves
/// epsilon to the matching quantile of the recorded proposal discrepancies.
/// `run(epsilon, proposal, theta0, T)` must record proposal discrepancies.
/// epsilon never increases; each round restarts at the stored state with the
/// smallest rho, and epsilon never drops below that rho.
inline AbcTuning tune_abc(const std::function<Chain(double, const ProposalSpec&, const Theta&, std::size_t)>& run,
                          double epsilon, ProposalSpec proposal, Theta theta0, std::optional<double> target_acceptance,
                          std::size_t rounds, std::size_t length) {
  if (target_acceptance)
    require(*target_acceptance > 0.0 && *target_acceptance < 1.0, "tuning: target acceptance must lie in (0,1)");
  AbcTuning t{epsilon, std::move(proposal), std::move(theta0), {epsilon}, {}};
  for (std::size_t r = 0; r < rounds; ++r) {
    const Chain chain = run(t.epsilon, t.proposal, t.theta0, length);
    t.acceptance_history.push_back(acceptance_rate(chain));
    t.proposal = proposal_from_chain(chain, t.proposal);
    std::size_t closest = chain.size() - 1;
    for (std::size_t i = 0; i < chain.size(); ++i)
      if (chain.cached(i) < chain.cached(closest)) closest = i;
    t.theta0 = chain.theta_row(closest);
    if (target_acceptance && !chain.proposal_cached.empty()) {
      std::vector<double> rho = chain.proposal_cached;
      for (double& v : rho)
        if (std::isnan(v)) v = kInf;
      std::sort(rho.begin(), rho.end());
      const double h = (static_cast<double>(rho.size()) - 1.0) * *target_acceptance;
      const std::size_t lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, rho.size() - 1);
      const double q = rho[lo] + (h - static_cast<double>(lo)) * (rho[hi] - rho[lo]);
      const double floor = chain.cached(closest);
      if (std::isfinite(q)) t.epsilon = std::min(t.epsilon, std::max(q, floor));
    }
    t.epsilon_history.push_back(t.epsilon);
    log_event(LogLevel::info, "tune_round", {{"round", r},
                                              {"acceptance", t.acceptance_history.back()},
                                              {"epsilon", t.epsilon}});
  }
  return t;
}

}  // namespace bii

#endif  // BII_MCMC_TUNING_HPP
