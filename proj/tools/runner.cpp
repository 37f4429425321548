#include "runner.hpp"

#include <chrono>
#include <cstdio>
#include <future>
#include <sstream>

#include <openssl/evp.h>

#include "bii/bii.hpp"
#include "bii/io/csv.hpp"

namespace bii::runner {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json summary_json(const PosteriorSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q50", s.q50}, {"q975", s.q975},
          {"bandwidth", s.bandwidth}};
}

std::string density_csv(const PosteriorSummary& s) {
  std::string out = "x,density\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    out += io::format_double(s.grid[i]) + "," + io::format_double(s.density[i]) + "\n";
  return out;
}

/// Files are staged in memory, then written one by one with atomic renames;
/// the manifest goes last and records every file's hash.
struct Artifacts {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> files;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

std::vector<std::string> theta_names(const io::ExperimentConfig& c) {
  if (c.model == "poisson") return PoissonModel().parameter_names();
  if (c.model == "gandk") return GandKModel().parameter_names();
  return {"nu", "mu_I", "mu_L", "beta"};
}

template <class F>
auto with_model(const io::ExperimentConfig& c, const Design& design, F&& f) {
  if (c.model == "poisson") return f(PoissonModel());
  if (c.model == "gandk") return f(GandKModel(c.gandk_c));
  return f(MacroparasiteModel(design, c.gamma, c.mu_M));
}

template <class Data, class F>
void with_aux(const io::ExperimentConfig& c, const Design& design, F&& f) {
  if constexpr (std::same_as<Data, Sample>) {
    if (c.aux == "normal") return f(NormalAux());
    if (c.aux == "fixed-var-normal") return f(FixedVarNormalAux(c.tau0));
    if (c.aux == "mixture") return f(GaussianMixtureAux(c.components, c.canonicalize));
  } else {
    if (c.aux == "beta-binomial") return f(BetaBinomialRegressionAux::for_design(design));
  }
  throw ValidationError("auxiliary model '" + c.aux + "' does not accept this data");
}

AbcMethod abc_method(const std::string& m) {
  if (m == "abc-ip") return AbcMethod::ip;
  if (m == "abc-il") return AbcMethod::il;
  return AbcMethod::is;
}

std::vector<ParamTransform> adjust_transforms(const std::vector<std::string>& names) {
  std::vector<ParamTransform> out;
  for (const auto& n : names) out.push_back(param_transform_from_string(n));
  return out;
}

MhSettings settings_for(const io::ExperimentConfig& c) {
  MhSettings s;
  s.iterations = c.T;
  s.thin = c.thin;
  s.calibration_window = c.calibration_window;
  return s;
}

/// Run `chains` independent chains, on separate threads when more than one.
std::vector<Chain> run_chains(std::size_t chains, std::uint64_t seed, const std::function<Chain(Rng&)>& one) {
  std::vector<Chain> out(chains);
  if (chains == 1) {
    Rng rng = Rng(seed).split(100);
    out[0] = one(rng);
    out[0].seed = seed;
    return out;
  }
  std::vector<std::future<Chain>> jobs;
  for (std::size_t k = 0; k < chains; ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      Rng rng = Rng(seed).split(100 + k);
      return one(rng);
    }));
  }
  for (std::size_t k = 0; k < chains; ++k) {
    out[k] = jobs[k].get();
    out[k].seed = seed;
  }
  return out;
}

/// Chain-level outputs shared by every method.
void describe_chains(const std::vector<Chain>& chains, const std::vector<std::string>& names, json& summary,
                     Artifacts& art) {
  json per_chain = json::array();
  std::vector<std::vector<double>> pooled(names.size());
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const Chain& ch = chains[k];
    art.add(chains.size() == 1 ? "chain.csv" : "chain_" + std::to_string(k + 1) + ".csv", io::chain_csv(ch));
    json ess_j = json::object();
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto col = ch.theta_column(j);
      ess_j[names[j]] = ch.size() >= 100 ? ess(col) : 0.0;
      pooled[j].insert(pooled[j].end(), col.begin(), col.end());
    }
    per_chain.push_back({{"acceptance_rate", acceptance_rate(ch)},
                         {"ess", ess_j},
                         {"stored", ch.size()},
                         {"fit_failures", ch.failures}});
  }
  summary["chains"] = per_chain;
  json post = json::object();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (pooled[j].size() < 10) continue;
    const PosteriorSummary s = posterior_summary(pooled[j]);
    post[names[j]] = summary_json(s);
    if (!s.density.empty()) art.add("density_" + names[j] + ".csv", density_csv(s));
  }
  summary["posterior"] = post;
}

void adjust_chains(const std::vector<Chain>& chains, const Vector& s_obs, const io::ExperimentConfig& c,
                   const std::vector<std::string>& names, json& summary, Artifacts& art) {
  std::size_t rows = 0;
  for (const auto& ch : chains) rows += ch.size();
  const Eigen::Index d = static_cast<Eigen::Index>(names.size());
  Matrix theta(static_cast<Eigen::Index>(rows), d);
  Matrix s(static_cast<Eigen::Index>(rows), s_obs.size());
  Vector rho(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (const auto& ch : chains)
    for (std::size_t i = 0; i < ch.size(); ++i, ++r) {
      theta.row(r) = ch.theta_row(i).transpose();
      s.row(r) = ch.summary_row(i).transpose();
      rho[r] = ch.cached(i);
    }
  AdjustmentSpec spec;
  spec.transforms = adjust_transforms(c.adjust_transforms);
  spec.thin = c.adjust_thin;
  const AdjustmentResult res = regression_adjust(theta, s, rho, s_obs, spec);
  std::string csv;
  for (Eigen::Index j = 0; j < d; ++j) csv += (j ? "," : "") + names[static_cast<std::size_t>(j)];
  csv += "\n";
  for (Eigen::Index i = 0; i < res.adjusted.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) csv += (j ? "," : "") + io::format_double(res.adjusted(i, j));
    csv += "\n";
  }
  art.add("adjusted.csv", csv);
  json post = json::object();
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> col(res.adjusted.col(j).data(), res.adjusted.col(j).data() + res.adjusted.rows());
    if (col.size() < 10) continue;
    const PosteriorSummary ps = posterior_summary(col);
    post[names[static_cast<std::size_t>(j)]] = summary_json(ps);
    if (!ps.density.empty()) art.add("density_adjusted_" + names[static_cast<std::size_t>(j)] + ".csv", density_csv(ps));
  }
  json dropped = json::array();
  for (auto k : res.dropped) dropped.push_back(k);
  summary["adjusted"] = {{"posterior", post}, {"bandwidth", res.bandwidth}, {"dropped_summaries", dropped},
                         {"samples", res.adjusted.rows()}};
}

template <class G, class A>
void run_abc(const io::ExperimentConfig& c, const G& gen, const A& aux, const typename G::data_type& y,
             const Prior& prior, json& summary, Artifacts& art) {
  const AbcMethod method = abc_method(c.method);
  check_assumptions(aux, method);
  Rng pre = Rng(c.seed).split(0);
  const ObservedSummary obs = precompute_observed(aux, y, pre);
  summary["phi_y"] = to_json(obs.phi_y);
  summary["observed_score_norm"] = obs.score_norm;

  double epsilon = c.epsilon.value_or(kInf);
  Theta theta0;
  if (c.theta0) theta0 = Eigen::Map<const Vector>(c.theta0->data(), static_cast<Eigen::Index>(c.theta0->size()));
  if (!c.epsilon || !c.theta0) {
    Rng pilot_rng = Rng(c.seed).split(1);
    const auto pilot = abc_prior_pilot(gen, aux, method, prior, y, obs, c.pilot_draws, pilot_rng);
    if (!c.epsilon) epsilon = epsilon_from_quantile(pilot_discrepancies(pilot), c.epsilon_quantile);
    if (!c.theta0) theta0 = best_pilot_theta(pilot);
    log_event(LogLevel::info, "pilot", {{"draws", c.pilot_draws}, {"epsilon", epsilon}});
  }

  ProposalSpec proposal = io::proposal_from_config(c);
  if (c.tune_rounds > 0) {
    Rng tune_rng = Rng(c.seed).split(2);
    auto run = [&](double eps, const ProposalSpec& q, const Theta& t0, std::size_t len) {
      MhSettings s;
      s.iterations = len;
      s.record_proposals = true;
      return run_mcmc_abc(gen, aux, method, KernelSpec(eps), prior, q, t0, y, obs, s, tune_rng);
    };
    const AbcTuning tuned = tune_abc(run, epsilon, proposal, theta0, c.target_acceptance, c.tune_rounds, c.tune_length);
    epsilon = tuned.epsilon;
    proposal = tuned.proposal;
    theta0 = tuned.theta0;
    summary["tuning"] = {{"epsilon", tuned.epsilon_history}, {"acceptance", tuned.acceptance_history}};
  }
  summary["epsilon"] = epsilon;
  summary["theta0"] = to_json(theta0);
  summary["proposal_cov"] = json::array();
  for (Eigen::Index i = 0; i < proposal.covariance().rows(); ++i) summary["proposal_cov"].push_back(to_json(proposal.covariance().row(i).transpose()));

  const KernelSpec kernel(epsilon);
  const MhSettings settings = settings_for(c);
  const auto chains = run_chains(c.chains, c.seed, [&](Rng& rng) {
    return run_mcmc_abc(gen, aux, method, kernel, prior, proposal, theta0, y, obs, settings, rng);
  });
  const auto names = gen.parameter_names();
  describe_chains(chains, names, summary, art);

  // Regression targets: phi(y) for IP/IL; the observed score is zero at phi(y).
  const Vector s_obs = method == AbcMethod::is ? Vector::Zero(obs.phi_y.size()) : obs.phi_y;
  summary["s_obs"] = to_json(s_obs);
  if (c.adjust) adjust_chains(chains, s_obs, c, names, summary, art);
}

template <class G, class A>
void run_pdbil(const io::ExperimentConfig& c, const G& gen, const A& aux, const typename G::data_type& y,
               const Prior& prior, json& summary, Artifacts& art) {
  Theta theta0;
  if (c.theta0) {
    theta0 = Eigen::Map<const Vector>(c.theta0->data(), static_cast<Eigen::Index>(c.theta0->size()));
  } else {
    // First prior draw whose likelihood estimate is finite.
    Rng pilot_rng = Rng(c.seed).split(1);
    bool found = false;
    for (std::size_t i = 0; i < std::max<std::size_t>(c.pilot_draws, 1) && !found; ++i) {
      theta0 = prior.sample(pilot_rng);
      found = gen.valid(theta0) && std::isfinite(pdbil_loglik(gen, aux, theta0, y, c.n, pilot_rng).loglik);
    }
    if (!found) throw NumericalError("pdbil: no prior draw gave a finite likelihood estimate");
  }
  ProposalSpec proposal = io::proposal_from_config(c);
  if (c.tune_rounds > 0) {
    Rng tune_rng = Rng(c.seed).split(2);
    auto run = [&](const ProposalSpec& q, const Theta& t0, std::size_t len) {
      MhSettings s;
      s.iterations = len;
      return run_mcmc_pdbil(gen, aux, prior, q, t0, c.n, y, s, tune_rng);
    };
    proposal = tune_proposal(run, proposal, theta0, c.tune_rounds, c.tune_length);
  }
  summary["theta0"] = to_json(theta0);
  const MhSettings settings = settings_for(c);
  const auto chains = run_chains(c.chains, c.seed, [&](Rng& rng) {
    return run_mcmc_pdbil(gen, aux, prior, proposal, theta0, c.n, y, settings, rng);
  });
  describe_chains(chains, gen.parameter_names(), summary, art);
}

template <class G, class S>
void run_psbil(const io::ExperimentConfig& c, const G& gen, const S& stat, const typename G::data_type& y,
               const Prior& prior, json& summary, Artifacts& art) {
  Rng obs_rng = Rng(c.seed).split(0);
  Vector s_y;
  if constexpr (std::invocable<const S&, const typename G::data_type&, Rng&>) s_y = stat(y, obs_rng);
  else s_y = stat(y);
  const std::size_t size = record_count(y);
  auto finite_at = [&](const Theta& t, Rng& r) {
    try {
      return std::isfinite(psbil_loglik(gen, stat, t, s_y, size, c.n, r).loglik);
    } catch (const NumericalError&) {
      return false;
    }
  };
  Theta theta0;
  if (c.theta0) {
    theta0 = Eigen::Map<const Vector>(c.theta0->data(), static_cast<Eigen::Index>(c.theta0->size()));
  } else {
    Rng pilot_rng = Rng(c.seed).split(1);
    bool found = false;
    for (std::size_t i = 0; i < std::max<std::size_t>(c.pilot_draws, 1) && !found; ++i) {
      theta0 = prior.sample(pilot_rng);
      found = gen.valid(theta0) && finite_at(theta0, pilot_rng);
    }
    if (!found) throw NumericalError("psbil: no prior draw gave a finite synthetic likelihood");
  }
  ProposalSpec proposal = io::proposal_from_config(c);
  if (c.tune_rounds > 0) {
    Rng tune_rng = Rng(c.seed).split(2);
    auto run = [&](const ProposalSpec& q, const Theta& t0, std::size_t len) {
      MhSettings s;
      s.iterations = len;
      return run_mcmc_psbil(gen, stat, s_y, size, prior, q, t0, c.n, s, tune_rng);
    };
    proposal = tune_proposal(run, proposal, theta0, c.tune_rounds, c.tune_length);
  }
  summary["theta0"] = to_json(theta0);
  summary["s_obs"] = to_json(s_y);
  const MhSettings settings = settings_for(c);
  const auto chains = run_chains(c.chains, c.seed, [&](Rng& rng) {
    return run_mcmc_psbil(gen, stat, s_y, size, prior, proposal, theta0, c.n, settings, rng);
  });
  describe_chains(chains, gen.parameter_names(), summary, art);
}

Vector mean_var_summary(const Sample& x, bool with_var) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  if (!with_var) return Vector::Constant(1, m);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  Vector s(2);
  s << m, ss / static_cast<double>(x.size());
  return s;
}

template <class Data>
void dispatch_run(const io::ExperimentConfig& c, const Data& y, const Design& design, const Prior& prior,
                  json& summary, Artifacts& art) {
  with_model(c, design, [&](const auto& gen) {
    using G = std::decay_t<decltype(gen)>;
    if constexpr (std::same_as<typename G::data_type, Data>) {
      if (c.method == "psbil" && c.psbil_summary != "aux-mle") {
        if constexpr (std::same_as<Data, Sample>) {
          const bool with_var = c.psbil_summary == "mean-var";
          run_psbil(c, gen, [with_var](const Sample& x) { return mean_var_summary(x, with_var); }, y, prior, summary, art);
        }
        return;
      }
      with_aux<Data>(c, design, [&](const auto& aux) {
        if (c.is_abc()) run_abc(c, gen, aux, y, prior, summary, art);
        else if (c.method == "pdbil") run_pdbil(c, gen, aux, y, prior, summary, art);
        else {
          run_psbil(c, gen, [&aux](const Data& x, Rng& r) { return Vector(aux.fit_mle(x, r)); }, y, prior, summary,
                    art);
        }
      });
    } else {
      throw ValidationError("model '" + c.model + "' does not match the data");
    }
  });
}

void write_artifacts(const Artifacts& art, const io::ExperimentConfig& c, double wall, const std::string& data_hash,
                     std::vector<std::string>& names) {
  json files = json::object();
  for (const auto& [name, content] : art.files) {
    io::write_atomic(art.dir / name, content);
    files[name] = git_blob_sha1(content);
    names.push_back(name);
  }
  json manifest = {{"config", c.source},
                   {"config_sha1", git_blob_sha1(c.source.dump())},
                   {"seed", c.seed},
                   {"data", c.data},
                   {"data_sha1", data_hash},
                   {"files", files},
                   {"wall_seconds", wall}};
  io::write_atomic(art.dir / "manifest.json", manifest.dump(2) + "\n");
  names.push_back("manifest.json");
}

}  // namespace

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("sha1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

RunOutcome run(const io::ExperimentConfig& c) {
  const auto t0 = Clock::now();
  const auto problems = io::validate_run(c);
  if (!problems.empty()) throw io::ConfigError(problems);

  const std::string raw = io::read_file(c.data);
  const Prior prior(c.prior);
  Artifacts art;
  art.dir = c.output;
  json summary = {{"method", c.method}, {"model", c.model}, {"aux", c.aux}, {"n", c.n}, {"T", c.T},
                  {"seed", c.seed}, {"parameters", theta_names(c)}};
  log_event(LogLevel::info, "run_start", {{"method", c.method}, {"model", c.model}, {"T", c.T}});

  if (c.scalar_data()) {
    const Sample y = io::read_sample(c.data);
    summary["N"] = y.size();
    dispatch_run(c, y, Design{}, prior, summary, art);
  } else {
    const HostData y = io::read_hosts(c.data);
    Design design;
    for (const auto& h : y) design.push_back({h.larvae, h.time});
    summary["N"] = y.size();
    dispatch_run(c, y, design, prior, summary, art);
  }

  RunOutcome out;
  out.output = c.output;
  out.wall_seconds = seconds_since(t0);
  summary["wall_seconds"] = out.wall_seconds;
  art.add("summary.json", summary.dump(2) + "\n");
  write_artifacts(art, c, out.wall_seconds, git_blob_sha1(raw), out.files);
  out.summary = summary;
  log_event(LogLevel::info, "run_done", {{"output", c.output}, {"wall_seconds", out.wall_seconds}});
  return out;
}

void simulate(const io::ExperimentConfig& c, const std::filesystem::path& out) {
  const auto problems = io::validate_simulate(c);
  if (!problems.empty()) throw io::ConfigError(problems);
  Design design;
  if (c.model == "macroparasite") design = io::read_design(c.design);
  const Theta theta = Eigen::Map<const Vector>(c.theta.data(), static_cast<Eigen::Index>(c.theta.size()));
  Rng rng(c.seed);
  const std::string csv = with_model(c, design, [&](const auto& gen) -> std::string {
    if (!gen.valid(theta)) throw ValidationError("theta is outside the model's valid region");
    using G = std::decay_t<decltype(gen)>;
    if constexpr (std::same_as<typename G::data_type, Sample>) {
      return io::sample_csv(gen.simulate(theta, c.N, rng));
    } else {
      const std::size_t size = c.N == 0 ? design.size() : c.N;
      return io::hosts_csv(gen.simulate(theta, size, rng));
    }
  });
  io::write_atomic(out, csv);
}

json fit_aux(const AuxSpec& spec, const std::filesystem::path& data, std::uint64_t seed) {
  io::ExperimentConfig c;
  c.aux = spec.kind;
  c.tau0 = spec.tau0;
  c.components = spec.components;
  c.canonicalize = spec.canonicalize;
  Rng rng(seed);
  json out;
  auto fit = [&](const auto& aux, const auto& y) {
    const Phi phi = aux.fit_mle(y, rng);
    const Matrix info = aux.obs_info(y, phi);
    out = {{"aux", spec.kind},
           {"parameters", aux.parameter_names()},
           {"phi", to_json(phi)},
           {"loglik", aux.loglik(y, phi)},
           {"score_norm", scaled_score_norm(aux.score(y, phi), record_count(y))},
           {"info_eigenvalues", to_json(symmetric_eigenvalues(info))},
           {"N", record_count(y)}};
  };
  if (spec.kind == "beta-binomial") {
    const HostData y = io::read_hosts(data);
    Design design;
    for (const auto& h : y) design.push_back({h.larvae, h.time});
    with_aux<HostData>(c, design, [&](const auto& aux) { fit(aux, y); });
  } else if (spec.kind == "normal" || spec.kind == "fixed-var-normal" || spec.kind == "mixture") {
    if (spec.kind == "fixed-var-normal") require(spec.tau0 > 0.0, "fit-aux: --tau0 must be positive");
    if (spec.kind == "mixture") require(spec.components >= 1, "fit-aux: --components must be at least 1");
    const Sample y = io::read_sample(data);
    with_aux<Sample>(c, Design{}, [&](const auto& aux) { fit(aux, y); });
  } else {
    throw ValidationError("unknown auxiliary model '" + spec.kind + "'");
  }
  return out;
}

json adjust(const AdjustRequest& req) {
  const Chain chain = io::read_chain(req.chain);
  std::vector<double> s_obs = req.s_obs;
  json meta = json::object();
  const auto summary_path = req.chain.parent_path() / "summary.json";
  if (std::filesystem::exists(summary_path)) meta = json::parse(io::read_file(summary_path));
  if (s_obs.empty()) {
    require(meta.contains("s_obs"), "adjust: no --s-obs given and no s_obs in " + summary_path.string());
    s_obs = meta.at("s_obs").get<std::vector<double>>();
  }
  require(s_obs.size() == chain.aux_dim(), "adjust: s_obs has " + std::to_string(s_obs.size()) +
                                               " entries, chain summaries have " + std::to_string(chain.aux_dim()));
  std::vector<std::string> names;
  if (meta.contains("parameters")) names = meta.at("parameters").get<std::vector<std::string>>();
  if (names.size() != chain.dim()) {
    names.clear();
    for (std::size_t j = 0; j < chain.dim(); ++j) names.push_back("theta_" + std::to_string(j + 1));
  }
  io::ExperimentConfig c;
  c.adjust_transforms = req.transforms;
  c.adjust_thin = req.thin;
  if (!req.transforms.empty()) require(req.transforms.size() == chain.dim(), "adjust: one transform per parameter");
  std::vector<Chain> chains{chain};
  json summary = json::object();
  Artifacts art;
  art.dir = req.output;
  adjust_chains(chains, Eigen::Map<const Vector>(s_obs.data(), static_cast<Eigen::Index>(s_obs.size())), c, names,
                summary, art);
  art.add("adjust_summary.json", summary.dump(2) + "\n");
  for (const auto& [name, content] : art.files) io::write_atomic(art.dir / name, content);
  return summary;
}

json diagnose(const std::filesystem::path& path) {
  const Chain chain = io::read_chain(path);
  json out = {{"stored", chain.size()}, {"acceptance_rate", acceptance_rate(chain)}};
  json e = json::object();
  json post = json::object();
  for (std::size_t j = 0; j < chain.dim(); ++j) {
    const std::string name = "theta_" + std::to_string(j + 1);
    const auto col = chain.theta_column(j);
    e[name] = chain.size() >= 100 ? ess(col) : 0.0;
    if (col.size() >= 10) post[name] = summary_json(posterior_summary(col));
  }
  out["ess"] = e;
  out["posterior"] = post;
  return out;
}

std::string oracle(const OracleRequest& r) {
  std::ostringstream out;
  out.precision(17);
  auto grid = [&](auto&& logf, double lo, double hi) {
    require(r.points >= 2, "oracle: need at least two grid points");
    require(lo < hi, "oracle: need lo < hi");
    std::vector<double> x(r.points);
    std::vector<double> lf(r.points);
    double mx = kNegInf;
    for (std::size_t i = 0; i < r.points; ++i) {
      x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(r.points - 1);
      lf[i] = logf(x[i]);
      mx = std::max(mx, lf[i]);
    }
    // Trapezoid normalisation over the grid.
    std::vector<double> f(r.points);
    double z = 0.0;
    for (std::size_t i = 0; i < r.points; ++i) f[i] = std::exp(lf[i] - mx);
    for (std::size_t i = 1; i < r.points; ++i) z += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    out << "x,density\n";
    for (std::size_t i = 0; i < r.points; ++i) out << x[i] << ',' << f[i] / z << '\n';
  };

  if (r.kind == "poisson-posterior" || r.kind == "poisson-normal-limit" || r.kind == "poisson-fixed-limit") {
    const Sample y = io::read_sample(r.data);
    const GammaPrior prior{r.alpha, r.beta};
    validate(Marginal(prior));
    const GammaPrior post = poisson_exact_posterior(Marginal(prior), y);
    const double m = post.shape / post.rate;
    const double sd = std::sqrt(post.shape) / post.rate;
    const double lo = r.lo < r.hi ? r.lo : std::max(1e-9, m - 10.0 * sd);
    const double hi = r.lo < r.hi ? r.hi : m + 10.0 * sd;
    if (r.kind == "poisson-posterior") {
      grid([&](double l) { return marginal_logpdf(post, l); }, lo, hi);
    } else if (r.kind == "poisson-normal-limit") {
      grid([&](double l) { return poisson_limits::normal_aux_logdensity(l, prior, y); }, lo, hi);
    } else {
      require(r.tau0 > 0.0, "oracle: --tau0 must be positive");
      grid([&](double l) { return poisson_limits::fixed_var_aux_logdensity(l, r.tau0, prior, y); }, lo, hi);
    }
  } else if (r.kind == "gandk-density") {
    require(r.theta.size() == 4, "oracle: gandk-density needs --theta a,b,g,k");
    const GandKModel model;
    const Theta t = Eigen::Map<const Vector>(r.theta.data(), 4);
    require(model.valid(t), "oracle: theta outside the g-and-k valid region");
    const GandKParams p = model.params(t);
    const double lo = r.lo < r.hi ? r.lo : gk_quantile(1e-4, p);
    const double hi = r.lo < r.hi ? r.hi : gk_quantile(1.0 - 1e-4, p);
    out << "x,logpdf\n";
    for (std::size_t i = 0; i < r.points; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(r.points - 1, 1));
      out << x << ',' << gk_logpdf(x, p) << '\n';
    }
  } else if (r.kind == "mjp") {
    require(r.theta.size() == 4, "oracle: mjp needs --theta nu,mu_I,mu_L,beta");
    require(r.larvae >= 0 && r.time >= 0.0, "oracle: mjp needs --larvae >= 0 and --time >= 0");
    const MacroparasiteModel model(Design{}, r.gamma, r.mu_M);
    const Theta t = Eigen::Map<const Vector>(r.theta.data(), 4);
    const MatureDistribution d = mjp_oracle_dist(model, t, r.larvae, r.time, r.cap);
    out << "m,probability\n";
    for (std::size_t m = 0; m < d.probability.size(); ++m) out << m << ',' << d.probability[m] << '\n';
  } else {
    throw ValidationError("unknown oracle '" + r.kind +
                          "' (poisson-posterior, poisson-normal-limit, poisson-fixed-limit, gandk-density, mjp)");
  }
  return out.str();
}

}  // namespace bii::runner
