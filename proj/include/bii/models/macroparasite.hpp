#ifndef BII_MODELS_MACROPARASITE_HPP
#define BII_MODELS_MACROPARASITE_HPP

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "bii/core.hpp"
#include "bii/rng.hpp"

namespace bii {

/// Experimental design row: larvae injected and sacrifice time.
struct DesignRow {
  int larvae = 0;
  double time = 1.0;
};

using Design = std::vector<DesignRow>;

/// Host state: mature parasites, larvae, immunity.
struct HostState {
  int mature = 0;
  int larvae = 0;
  int immunity = 0;

  friend bool operator==(const HostState&, const HostState&) = default;
};

/// theta = (nu, mu_I, mu_L, beta).
struct MacroparasiteRates {
  double gamma = 0.04;     // larval maturation, per larva per day
  double mu_M = 0.0015;    // adult death, per adult per day
  double nu = 0.0;         // immunity acquisition, per larva
  double mu_I = 0.0;       // immunity loss, per unit
  double mu_L = 0.0;       // natural larval death
  double beta = 0.0;       // immune-driven larval death, per unit immunity

  /// Propensities of the five transitions at state s, in the order
  /// mature, larva death, adult death, immunity gain, immunity loss.
  std::array<double, 5> propensities(const HostState& s) const {
    const double j = s.larvae;
    return {gamma * j, (mu_L + beta * s.immunity) * j, mu_M * s.mature, nu * j, mu_I * s.immunity};
  }
};

enum class HostEvent { mature, larva_death, adult_death, immunity_gain, immunity_loss };

inline HostState apply(HostState s, HostEvent e) {
  switch (e) {
    case HostEvent::mature: ++s.mature; --s.larvae; break;
    case HostEvent::larva_death: --s.larvae; break;
    case HostEvent::adult_death: --s.mature; break;
    case HostEvent::immunity_gain: ++s.immunity; break;
    case HostEvent::immunity_loss: --s.immunity; break;
  }
  return s;
}

struct NoObserver {
  void operator()(double, const HostState&) const {}
};

/// Exact Gillespie simulation of one host from `start` until `horizon`.
///
/// With `binomial_tail`, the run stops stepping once no larvae remain: from
/// then on only adult deaths change M, so M(horizon) is drawn as
/// Binomial(M, exp(-mu_M * remaining)). The observer sees every simulated
/// event (time, state after the event).
template <class Observer = NoObserver>
HostState simulate_host(const MacroparasiteRates& r, HostState start, double horizon, Rng& rng,
                        bool binomial_tail = true, Observer&& observe = {}) {
  HostState s = start;
  double t = 0.0;
  while (true) {
    if (binomial_tail && s.larvae == 0) {
      s.mature = rng.binomial(s.mature, std::exp(-r.mu_M * (horizon - t)));
      return s;
    }
    const auto a = r.propensities(s);
    const double total = a[0] + a[1] + a[2] + a[3] + a[4];
    if (!(total > 0.0)) return s;
    t += rng.exponential(total);
    if (t > horizon) return s;
    double pick = rng.uniform() * total;
    int e = 0;
    while (e < 4 && pick >= a[static_cast<std::size_t>(e)]) {
      pick -= a[static_cast<std::size_t>(e)];
      ++e;
    }
    // Guard against round-off selecting a zero-propensity event.
    while (a[static_cast<std::size_t>(e)] <= 0.0) --e;
    s = apply(s, static_cast<HostEvent>(e));
    observe(t, s);
  }
}

/// Within-host macroparasite Markov jump process over a fixed design.
class MacroparasiteModel {
 public:
  using data_type = HostData;

  MacroparasiteModel() = default;
  explicit MacroparasiteModel(Design design, double gamma = 0.04, double mu_M = 0.0015)
      : design_(std::move(design)), gamma_(gamma), mu_M_(mu_M) {
    require(gamma_ >= 0.0 && mu_M_ >= 0.0, "macroparasite: fixed rates must be non-negative");
    for (const auto& row : design_)
      require(row.larvae >= 0 && row.time > 0.0, "macroparasite: design needs l >= 0 and t > 0");
  }

  const Design& design() const { return design_; }
  double gamma() const { return gamma_; }
  double mu_M() const { return mu_M_; }

  std::size_t dim() const { return 4; }
  std::vector<std::string> parameter_names() const { return {"nu", "mu_I", "mu_L", "beta"}; }

  bool valid(const Theta& theta) const { return theta.size() == 4 && theta.allFinite() && (theta.array() >= 0.0).all(); }

  MacroparasiteRates rates(const Theta& theta) const {
    return {gamma_, mu_M_, theta[0], theta[1], theta[2], theta[3]};
  }

  /// M(t_i) for each design row; `size` may be any positive multiple of the
  /// design length (pooled replicates cycle through the design).
  HostData simulate(const Theta& theta, std::size_t size, Rng& rng) const {
    if (!valid(theta)) throw ValidationError("macroparasite: rates must be finite and non-negative");
    if (size == 0 || design_.empty() || size % design_.size() != 0)
      throw ValidationError("macroparasite: dataset size must be a positive multiple of the design length");
    const MacroparasiteRates r = rates(theta);
    HostData out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      const DesignRow& row = design_[i % design_.size()];
      const HostState end = simulate_host(r, HostState{0, row.larvae, 0}, row.time, rng);
      out.push_back(HostRecord{end.mature, row.larvae, row.time});
    }
    return out;
  }

 private:
  Design design_;
  double gamma_ = 0.04;
  double mu_M_ = 0.0015;
};

}  // namespace bii

#endif  // BII_MODELS_MACROPARASITE_HPP
