#ifndef BII_IO_CONFIG_HPP
#define BII_IO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bii/core.hpp"
#include "bii/io/csv.hpp"
#include "bii/mcmc/proposal.hpp"
#include "bii/post/regression.hpp"
#include "bii/prior.hpp"

namespace bii::io {

using nlohmann::json;

/// Every validation problem found in a configuration, reported together.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : ValidationError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid configuration:";
    for (const auto& m : p) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

/// One experiment, read from a flat JSON object.
struct ExperimentConfig {
  // generative model
  std::string model;  // poisson | gandk | macroparasite
  double gandk_c = 0.8;
  double gamma = 0.04;
  double mu_M = 0.0015;
  std::vector<double> theta;  // simulate only
  std::size_t N = 0;          // simulate only; macroparasite defaults to the design length

  // auxiliary model
  std::string aux;  // normal | fixed-var-normal | mixture | beta-binomial
  double tau0 = 0.0;
  int components = 3;
  bool canonicalize = true;

  // inference
  std::string method;  // abc-ip | abc-il | abc-is | pdbil | psbil
  std::size_t n = 1;
  std::optional<double> epsilon;
  double epsilon_quantile = 0.01;
  std::size_t pilot_draws = 10000;
  std::optional<double> target_acceptance;
  std::size_t tune_rounds = 0;
  std::size_t tune_length = 5000;
  std::size_t T = 10000;
  std::size_t thin = 1;
  std::size_t calibration_window = 0;
  std::vector<Marginal> prior;
  std::vector<double> proposal_sd;
  std::vector<std::vector<double>> proposal_cov;
  std::vector<std::string> proposal_transforms;
  std::optional<std::vector<double>> theta0;
  std::string psbil_summary = "mean-var";  // mean | mean-var | aux-mle

  // post-processing
  bool adjust = true;
  std::vector<std::string> adjust_transforms;
  std::size_t adjust_thin = 1;

  // plumbing
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  std::string data;
  std::string design;
  std::string output;

  json source = json::object();  // the object this was parsed from

  bool is_abc() const { return method.rfind("abc-", 0) == 0; }
  std::size_t model_dim() const {
    if (model == "poisson") return 1;
    if (model == "gandk" || model == "macroparasite") return 4;
    return 0;
  }
  bool scalar_data() const { return model == "poisson" || model == "gandk"; }
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> k = {
      "model", "gandk_c", "gamma", "mu_M", "theta", "N", "aux", "tau0", "components", "canonicalize",
      "method", "n", "epsilon", "epsilon_quantile", "pilot_draws", "target_acceptance", "tune_rounds",
      "tune_length", "T", "thin", "calibration_window", "prior", "proposal_sd", "proposal_cov",
      "proposal_transforms", "theta0", "psbil_summary", "adjust", "adjust_transforms", "adjust_thin",
      "seed", "chains", "data", "design", "output"};
  return k;
}

namespace detail {

template <class T>
void read_key(const json& j, const char* key, T& dst, std::vector<std::string>& errors) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(std::string("'") + key + "' has the wrong type: " + j.at(key).dump());
  }
}

template <class T>
void read_key(const json& j, const char* key, std::optional<T>& dst, std::vector<std::string>& errors) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_key(j, key, v, errors);
  dst = v;
}

inline void read_prior(const json& j, std::vector<Marginal>& dst, std::vector<std::string>& errors) {
  if (!j.contains("prior")) return;
  const json& p = j.at("prior");
  if (!p.is_array()) {
    errors.push_back("'prior' must be an array of {\"uniform\": [lo, hi]} or {\"gamma\": [shape, rate]}");
    return;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const json& e = p[i];
    const std::string where = "prior[" + std::to_string(i) + "]";
    if (!e.is_object() || e.size() != 1) {
      errors.push_back(where + " must be an object with a single key 'uniform' or 'gamma'");
      continue;
    }
    const auto& [kind, v] = *e.items().begin();
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      errors.push_back(where + "." + kind + " must be a pair of numbers");
      continue;
    }
    Marginal m;
    if (kind == "uniform") m = UniformPrior{v[0].get<double>(), v[1].get<double>()};
    else if (kind == "gamma") m = GammaPrior{v[0].get<double>(), v[1].get<double>()};
    else {
      errors.push_back(where + ": unknown prior family '" + kind + "'");
      continue;
    }
    try {
      validate(m);
    } catch (const ValidationError& ex) {
      errors.push_back(where + ": " + ex.what());
      continue;
    }
    dst.push_back(m);
  }
}

}  // namespace detail

/// Parse without semantic checks; type errors and unknown keys are collected.
inline ExperimentConfig parse_config(const json& j, std::vector<std::string>& errors) {
  ExperimentConfig c;
  if (!j.is_object()) {
    errors.push_back("configuration must be a JSON object");
    return c;
  }
  c.source = j;
  for (const auto& [k, v] : j.items())
    if (!known_keys().count(k)) errors.push_back("unknown key '" + k + "'");
  using detail::read_key;
  read_key(j, "model", c.model, errors);
  read_key(j, "gandk_c", c.gandk_c, errors);
  read_key(j, "gamma", c.gamma, errors);
  read_key(j, "mu_M", c.mu_M, errors);
  read_key(j, "theta", c.theta, errors);
  read_key(j, "N", c.N, errors);
  read_key(j, "aux", c.aux, errors);
  read_key(j, "tau0", c.tau0, errors);
  read_key(j, "components", c.components, errors);
  read_key(j, "canonicalize", c.canonicalize, errors);
  read_key(j, "method", c.method, errors);
  read_key(j, "n", c.n, errors);
  read_key(j, "epsilon", c.epsilon, errors);
  read_key(j, "epsilon_quantile", c.epsilon_quantile, errors);
  read_key(j, "pilot_draws", c.pilot_draws, errors);
  read_key(j, "target_acceptance", c.target_acceptance, errors);
  read_key(j, "tune_rounds", c.tune_rounds, errors);
  read_key(j, "tune_length", c.tune_length, errors);
  read_key(j, "T", c.T, errors);
  read_key(j, "thin", c.thin, errors);
  read_key(j, "calibration_window", c.calibration_window, errors);
  detail::read_prior(j, c.prior, errors);
  read_key(j, "proposal_sd", c.proposal_sd, errors);
  read_key(j, "proposal_cov", c.proposal_cov, errors);
  read_key(j, "proposal_transforms", c.proposal_transforms, errors);
  read_key(j, "theta0", c.theta0, errors);
  read_key(j, "psbil_summary", c.psbil_summary, errors);
  read_key(j, "adjust", c.adjust, errors);
  read_key(j, "adjust_transforms", c.adjust_transforms, errors);
  read_key(j, "adjust_thin", c.adjust_thin, errors);
  read_key(j, "seed", c.seed, errors);
  read_key(j, "chains", c.chains, errors);
  read_key(j, "data", c.data, errors);
  read_key(j, "design", c.design, errors);
  read_key(j, "output", c.output, errors);
  return c;
}

inline std::vector<std::string> validate_model(const ExperimentConfig& c) {
  std::vector<std::string> e;
  if (c.model.empty()) e.push_back("'model' is required (poisson, gandk, macroparasite)");
  else if (c.model_dim() == 0) e.push_back("unknown model '" + c.model + "' (poisson, gandk, macroparasite)");
  if (c.model == "macroparasite" && !(c.gamma >= 0.0 && c.mu_M >= 0.0)) e.push_back("'gamma' and 'mu_M' must be >= 0");
  return e;
}

/// Checks for `simulate`.
inline std::vector<std::string> validate_simulate(const ExperimentConfig& c) {
  std::vector<std::string> e = validate_model(c);
  const std::size_t d = c.model_dim();
  if (d && c.theta.size() != d) e.push_back("'theta' must have " + std::to_string(d) + " entries");
  if (c.model == "macroparasite") {
    if (c.design.empty()) e.push_back("macroparasite simulation needs a 'design' CSV (columns l,t)");
    else if (!std::filesystem::exists(c.design)) e.push_back("design file not found: " + c.design);
  } else if (c.N == 0) {
    e.push_back("'N' must be a positive dataset size");
  }
  return e;
}

/// Checks for `run`: every problem, before any computation.
inline std::vector<std::string> validate_run(const ExperimentConfig& c) {
  std::vector<std::string> e = validate_model(c);
  const std::size_t d = c.model_dim();

  static const std::set<std::string> auxes = {"normal", "fixed-var-normal", "mixture", "beta-binomial"};
  static const std::set<std::string> methods = {"abc-ip", "abc-il", "abc-is", "pdbil", "psbil"};
  const bool needs_aux = c.method != "psbil" || c.psbil_summary == "aux-mle";
  if (c.method.empty()) e.push_back("'method' is required (abc-ip, abc-il, abc-is, pdbil, psbil)");
  else if (!methods.count(c.method)) e.push_back("unknown method '" + c.method + "'");

  std::size_t aux_dim = 0;
  if (needs_aux) {
    if (c.aux.empty()) e.push_back("'aux' is required for method '" + c.method + "'");
    else if (!auxes.count(c.aux)) e.push_back("unknown auxiliary model '" + c.aux + "'");
  }
  if (!c.aux.empty() && auxes.count(c.aux) && d) {
    const bool scalar_aux = c.aux != "beta-binomial";
    if (scalar_aux != c.scalar_data())
      e.push_back("auxiliary model '" + c.aux + "' does not accept " + c.model + " data");
    if (c.aux == "normal") aux_dim = 2;
    if (c.aux == "fixed-var-normal") {
      aux_dim = 1;
      if (!(c.tau0 > 0.0)) e.push_back("'tau0' must be positive for the fixed-variance normal auxiliary");
    }
    if (c.aux == "mixture") {
      if (c.components < 1) e.push_back("'components' must be at least 1");
      else aux_dim = static_cast<std::size_t>(3 * c.components - 1);
      if (c.method == "abc-ip" && !c.canonicalize && c.components > 1)
        e.push_back("abc-ip needs a unique auxiliary estimator for every theta; a mixture without label "
                    "canonicalisation is not identifiable (set 'canonicalize': true)");
    }
    if (c.aux == "beta-binomial") aux_dim = 5;
    if (needs_aux && aux_dim && aux_dim < d)
      e.push_back("auxiliary dimension " + std::to_string(aux_dim) + " is smaller than dim(theta) = " +
                  std::to_string(d));
  }

  if (c.is_abc() && c.n != 1) e.push_back("ABC methods simulate one dataset per iteration; 'n' must be 1");
  if (c.n < 1) e.push_back("'n' must be at least 1");
  if (c.method == "psbil") {
    static const std::set<std::string> summaries = {"mean", "mean-var", "aux-mle"};
    if (!summaries.count(c.psbil_summary)) e.push_back("unknown 'psbil_summary' '" + c.psbil_summary + "'");
    else {
      std::size_t sd = c.psbil_summary == "mean" ? 1 : c.psbil_summary == "mean-var" ? 2 : aux_dim;
      if (c.psbil_summary != "aux-mle" && !c.scalar_data())
        e.push_back("psbil_summary '" + c.psbil_summary + "' needs scalar data; use 'aux-mle'");
      if (sd && c.n <= sd + 1) e.push_back("psbil needs n > dim(s) + 1 = " + std::to_string(sd + 1));
    }
  }
  if (c.epsilon && !(*c.epsilon > 0.0)) e.push_back("'epsilon' must be positive");
  if (!(c.epsilon_quantile > 0.0 && c.epsilon_quantile <= 1.0)) e.push_back("'epsilon_quantile' must lie in (0,1]");
  if (c.is_abc() && !c.epsilon && c.pilot_draws < 1) e.push_back("'pilot_draws' must be positive");
  if (c.target_acceptance && !(*c.target_acceptance > 0.0 && *c.target_acceptance < 1.0))
    e.push_back("'target_acceptance' must lie in (0,1)");
  if (c.target_acceptance && !c.is_abc()) e.push_back("'target_acceptance' applies to ABC methods only");
  if (c.tune_rounds > 0 && c.tune_length < 2) e.push_back("'tune_length' must be at least 2");
  if (c.T < 1) e.push_back("'T' must be at least 1");
  if (c.thin < 1) e.push_back("'thin' must be at least 1");
  if (c.chains < 1) e.push_back("'chains' must be at least 1");
  if (c.adjust_thin < 1) e.push_back("'adjust_thin' must be at least 1");

  if (d) {
    if (c.prior.size() != d) e.push_back("'prior' must list " + std::to_string(d) + " marginals");
    const bool have_sd = !c.proposal_sd.empty();
    const bool have_cov = !c.proposal_cov.empty();
    if (have_sd == have_cov) e.push_back("give exactly one of 'proposal_sd' and 'proposal_cov'");
    if (have_sd) {
      if (c.proposal_sd.size() != d) e.push_back("'proposal_sd' must have " + std::to_string(d) + " entries");
      for (double s : c.proposal_sd)
        if (!(s > 0.0)) e.push_back("'proposal_sd' entries must be positive");
    }
    if (have_cov) {
      bool shape = c.proposal_cov.size() == d;
      for (const auto& r : c.proposal_cov) shape = shape && r.size() == d;
      if (!shape) e.push_back("'proposal_cov' must be a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    }
    if (!c.proposal_transforms.empty()) {
      if (c.proposal_transforms.size() != d)
        e.push_back("'proposal_transforms' must have " + std::to_string(d) + " entries");
      for (std::size_t i = 0; i < c.proposal_transforms.size(); ++i) {
        const std::string& t = c.proposal_transforms[i];
        if (t != "identity" && t != "log" && t != "logit")
          e.push_back("unknown proposal transform '" + t + "' (identity, log, logit)");
        if (t == "logit" && i < c.prior.size() && !std::holds_alternative<UniformPrior>(c.prior[i]))
          e.push_back("logit proposal transform on coordinate " + std::to_string(i + 1) + " needs a uniform prior");
      }
    }
    if (c.theta0) {
      if (c.theta0->size() != d) e.push_back("'theta0' must have " + std::to_string(d) + " entries");
      else if (c.prior.size() == d) {
        Prior p(c.prior);
        Theta t = Eigen::Map<const Vector>(c.theta0->data(), static_cast<Eigen::Index>(d));
        if (!p.in_support(t)) e.push_back("'theta0' lies outside the prior support");
      }
    }
    if (!c.adjust_transforms.empty()) {
      if (c.adjust_transforms.size() != d) e.push_back("'adjust_transforms' must have " + std::to_string(d) + " entries");
      for (const auto& t : c.adjust_transforms) {
        try {
          param_transform_from_string(t);
        } catch (const ValidationError& ex) {
          e.push_back(ex.what());
        }
      }
    }
  }

  if (c.data.empty()) e.push_back("'data' (observed CSV) is required");
  else if (!std::filesystem::exists(c.data)) e.push_back("data file not found: " + c.data);
  if (c.output.empty()) e.push_back("'output' directory is required");
  return e;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const json& overrides = json::object()) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& ex) {
    throw ConfigError({path.string() + ": " + ex.what()});
  }
  std::vector<std::string> errors;
  if (j.is_object()) {
    for (const auto& [k, v] : overrides.items()) {
      if (j.contains(k)) errors.push_back("'" + k + "' is set both in " + path.string() + " and on the command line");
      else j[k] = v;
    }
  }
  ExperimentConfig c = parse_config(j, errors);
  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

/// Proposal built from validated config fields.
inline ProposalSpec proposal_from_config(const ExperimentConfig& c) {
  const std::size_t d = c.model_dim();
  std::vector<CoordinateTransform> tr;
  for (std::size_t i = 0; i < c.proposal_transforms.size(); ++i) {
    const std::string& t = c.proposal_transforms[i];
    if (t == "log") tr.push_back(CoordinateTransform::log());
    else if (t == "logit") {
      const auto& u = std::get<UniformPrior>(c.prior[i]);
      tr.push_back(CoordinateTransform::logit(u.lo, u.hi));
    } else tr.push_back(CoordinateTransform::identity());
  }
  if (!c.proposal_sd.empty()) {
    Vector sd = Eigen::Map<const Vector>(c.proposal_sd.data(), static_cast<Eigen::Index>(d));
    return ProposalSpec::diagonal(sd, tr);
  }
  Matrix cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.proposal_cov[i][j];
  return ProposalSpec(cov, tr);
}

}  // namespace bii::io

#endif  // BII_IO_CONFIG_HPP
