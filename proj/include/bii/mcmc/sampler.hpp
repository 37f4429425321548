#ifndef BII_MCMC_SAMPLER_HPP
#define BII_MCMC_SAMPLER_HPP

#include <cmath>
#include <functional>
#include <string>

#include "bii/abc/discrepancy.hpp"
#include "bii/bil/pdbil.hpp"
#include "bii/bil/psbil.hpp"
#include "bii/log.hpp"
#include "bii/mcmc/chain.hpp"
#include "bii/mcmc/proposal.hpp"
#include "bii/models/generative.hpp"
#include "bii/prior.hpp"

namespace bii {

struct MhSettings {
  std::size_t iterations = 10000;  // stored length T including the start
  std::size_t thin = 1;
  std::size_t calibration_window = 0;  // abort if nothing accepted in this many transitions; 0 disables
  bool record_proposals = false;
};

/// What a target contributes at one theta: the log-likelihood term
/// (log K for ABC, estimated loglik for BIL), the auxiliary summary stored in
/// the trace, and the cached value (rho or loglik).
struct StateEvaluation {
  double log_term = kNegInf;
  Vector summary;
  double cached = kNegInf;
  bool failed = false;
};

using Evaluator = std::function<StateEvaluation(const Theta&, Rng&)>;

/// Random-walk Metropolis-Hastings. The current state's evaluation is carried
/// over on rejection and never refreshed.
inline Chain run_mh(const Prior& prior, const ProposalSpec& proposal, const Theta& theta0, std::size_t aux_dim,
                    const Evaluator& evaluate, const MhSettings& settings, Rng& rng,
                    const StateEvaluation* initial = nullptr) {
  require(settings.iterations >= 1, "mcmc: T must be at least 1");
  require(settings.thin >= 1, "mcmc: thin must be at least 1");
  require(prior.dim() == static_cast<std::size_t>(theta0.size()), "mcmc: theta0 dimension mismatch");
  require(proposal.dim() == prior.dim(), "mcmc: proposal dimension mismatch");
  require(theta0.allFinite(), "mcmc: theta0 must be finite");

  Theta theta = theta0;
  double log_prior = prior.logpdf(theta) + proposal.log_jacobian(theta);
  require(std::isfinite(log_prior), "mcmc: theta0 lies outside the prior support");
  StateEvaluation cur = initial ? *initial : evaluate(theta, rng);
  require(std::isfinite(cur.log_term), "mcmc: theta0 has zero target density; choose it from a pilot run");
  require(static_cast<std::size_t>(cur.summary.size()) == aux_dim, "mcmc: summary dimension mismatch");

  Chain chain(prior.dim(), aux_dim);
  chain.push(0, theta, false, cur.summary, cur.cached);
  Vector u = proposal.to_unconstrained(theta);

  const std::size_t transitions = (settings.iterations - 1) * settings.thin;
  if (settings.record_proposals) chain.proposal_cached.reserve(transitions);
  for (std::size_t it = 1; it <= transitions; ++it) {
    const Vector u_star = proposal.step(u, rng);
    const Theta theta_star = proposal.from_unconstrained(u_star);
    const double lp_star = prior.logpdf(theta_star) + proposal.log_jacobian(theta_star);
    bool accept = false;
    if (std::isfinite(lp_star)) {
      StateEvaluation cand = evaluate(theta_star, rng);
      if (cand.failed) ++chain.failures;
      if (settings.record_proposals) chain.proposal_cached.push_back(cand.cached);
      const double log_r = lp_star + cand.log_term - log_prior - cur.log_term;
      if (log_r >= 0.0 || std::log(rng.uniform()) < log_r) {
        accept = true;
        theta = theta_star;
        u = u_star;
        log_prior = lp_star;
        cur = std::move(cand);
      }
    } else if (settings.record_proposals) {
      chain.proposal_cached.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    chain.count(accept);
    if (settings.calibration_window > 0 && it == settings.calibration_window && chain.accept_count() == 0) {
      throw NumericalError("mcmc: no proposal accepted in the first " + std::to_string(it) +
                           " iterations; shrink the proposal covariance or enlarge epsilon");
    }
    if (it % settings.thin == 0) chain.push(it, theta, accept, cur.summary, cur.cached);
  }
  return chain;
}

/// MCMC ABC with one of the indirect discrepancies and an indicator kernel.
/// `n` > 1 pools n simulated datasets per iteration; ABC proper uses n = 1,
/// larger values exist to exhibit the over-precision that pooling causes.
template <GenerativeModel G, AuxiliaryModel A>
  requires std::same_as<typename G::data_type, typename A::data_type>
Chain run_mcmc_abc(const G& gen, const A& aux, AbcMethod method, const KernelSpec& kernel, const Prior& prior,
                   const ProposalSpec& proposal, const Theta& theta0, const typename A::data_type& y,
                   const ObservedSummary& obs, const MhSettings& settings, Rng& rng, std::size_t n = 1,
                   std::size_t initial_attempts = 1000) {
  check_assumptions(aux, method);
  require(n >= 1, "mcmc abc: n must be at least 1");
  const std::size_t size = n * record_count(y);
  Evaluator evaluate = [&](const Theta& theta, Rng& r) {
    const auto x = gen.simulate(theta, size, r);
    const AbcEvaluation ev = abc_evaluate(method, obs, aux, y, x, r);
    StateEvaluation s;
    s.summary = ev.summary;
    s.cached = ev.fit_failed ? kInf : ev.rho;
    s.failed = ev.fit_failed;
    s.log_term = (!ev.fit_failed && kernel_weight(kernel, ev.rho) > 0.0) ? 0.0 : kNegInf;
    return s;
  };
  // Algorithm start: theta0 together with a simulated dataset it accepts.
  require(std::isfinite(prior.logpdf(theta0)), "mcmc abc: theta0 lies outside the prior support");
  StateEvaluation start;
  std::size_t attempt = 0;
  for (; attempt < initial_attempts; ++attempt) {
    start = evaluate(theta0, rng);
    if (std::isfinite(start.log_term)) break;
  }
  if (attempt == initial_attempts) {
    throw ValidationError("mcmc abc: no simulation at theta0 came within epsilon in " +
                          std::to_string(initial_attempts) + " attempts; pick theta0 from a pilot run");
  }
  Chain chain = run_mh(prior, proposal, theta0, aux.dim(), evaluate, settings, rng, &start);
  chain.method = to_string(method);
  chain.aux_names = aux.parameter_names();
  chain.theta_names = gen.parameter_names();
  return chain;
}

/// MCMC pdBIL: the auxiliary likelihood at the pooled-replicate MLE replaces
/// the intractable likelihood.
template <GenerativeModel G, AuxiliaryModel A>
  requires std::same_as<typename G::data_type, typename A::data_type>
Chain run_mcmc_pdbil(const G& gen, const A& aux, const Prior& prior, const ProposalSpec& proposal, const Theta& theta0,
                     std::size_t n, const typename A::data_type& y, const MhSettings& settings, Rng& rng) {
  require(n >= 1, "mcmc pdbil: n must be at least 1");
  Evaluator evaluate = [&](const Theta& theta, Rng& r) {
    const PdBilEstimate est = pdbil_loglik(gen, aux, theta, y, n, r);
    return StateEvaluation{est.loglik, est.phi_hat, est.loglik, est.failed};
  };
  Chain chain = run_mh(prior, proposal, theta0, aux.dim(), evaluate, settings, rng);
  chain.method = "pdbil";
  chain.aux_names = aux.parameter_names();
  chain.theta_names = gen.parameter_names();
  return chain;
}

/// MCMC with the Gaussian synthetic likelihood of summary statistics.
/// A singular simulated covariance rejects the proposal.
template <GenerativeModel G, class Summary>
Chain run_mcmc_psbil(const G& gen, const Summary& summary, const Vector& s_y, std::size_t dataset_size,
                     const Prior& prior, const ProposalSpec& proposal, const Theta& theta0, std::size_t n,
                     const MhSettings& settings, Rng& rng) {
  Evaluator evaluate = [&](const Theta& theta, Rng& r) {
    StateEvaluation s;
    try {
      const SynthLikEstimate est = psbil_loglik(gen, summary, theta, s_y, dataset_size, n, r);
      s.log_term = est.loglik;
      s.summary = est.mu;
      s.cached = est.loglik;
    } catch (const NumericalError&) {
      s.failed = true;
      s.summary = Vector::Constant(s_y.size(), std::numeric_limits<double>::quiet_NaN());
    }
    return s;
  };
  Chain chain = run_mh(prior, proposal, theta0, static_cast<std::size_t>(s_y.size()), evaluate, settings, rng);
  chain.method = "psbil";
  chain.theta_names = gen.parameter_names();
  for (Eigen::Index i = 0; i < s_y.size(); ++i) chain.aux_names.push_back("s" + std::to_string(i + 1));
  return chain;
}

/// MH on an exactly computable log-likelihood; isolates the engine from any
/// likelihood estimator.
inline Chain run_mcmc_exact(const std::function<double(const Theta&)>& loglik, const Prior& prior,
                            const ProposalSpec& proposal, const Theta& theta0, const MhSettings& settings, Rng& rng) {
  Evaluator evaluate = [&](const Theta& theta, Rng&) {
    const double ll = loglik(theta);
    return StateEvaluation{ll, Vector(0), ll, false};
  };
  Chain chain = run_mh(prior, proposal, theta0, 0, evaluate, settings, rng);
  chain.method = "exact";
  return chain;
}

}  // namespace bii

#endif  // BII_MCMC_SAMPLER_HPP
