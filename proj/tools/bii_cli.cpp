// Command-line front end: simulate, fit-aux, run, adjust, diagnose, oracle.
// Exit status 0 on success, 1 on validation failures, 2 on runtime failures.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bii/io/config.hpp"
#include "bii/io/csv.hpp"
#include "bii/log.hpp"
#include "runner.hpp"

namespace {

using bii::runner::json;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

bii::LogLevel parse_level(const std::string& s) {
  if (s == "debug") return bii::LogLevel::debug;
  if (s == "info") return bii::LogLevel::info;
  if (s == "warn") return bii::LogLevel::warn;
  if (s == "error") return bii::LogLevel::error;
  if (s == "off") return bii::LogLevel::off;
  throw bii::ValidationError("unknown log level '" + s + "'");
}

/// `key=value`, value parsed as JSON when possible, else taken as a string.
void add_override(json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw bii::ValidationError("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  if (j.contains(key)) throw bii::ValidationError("'" + key + "' given twice on the command line");
  try {
    j[key] = json::parse(value);
  } catch (const json::parse_error&) {
    j[key] = value;
  }
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) std::cout << text;
  else bii::io::write_atomic(out, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian indirect inference: ABC II (IP/IL/IS), pdBIL and synthetic likelihood"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a dataset from a generative model");
  std::string sim_config, sim_out;
  std::vector<std::string> sim_set;
  std::optional<std::string> sim_model, sim_design;
  std::optional<std::vector<double>> sim_theta;
  std::optional<std::size_t> sim_n;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "JSON config (keys model, theta, N, seed, design, ...)");
  sim->add_option("--model", sim_model, "poisson, gandk or macroparasite");
  sim->add_option("--theta", sim_theta, "parameter vector")->delimiter(',');
  sim->add_option("--N", sim_n, "dataset size (macroparasite: defaults to the design length)");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--design", sim_design, "macroparasite design CSV (columns l,t)");
  sim->add_option("--set", sim_set, "extra config key=value");
  sim->add_option("--out", sim_out, "output CSV")->required();

  // fit-aux
  auto* fit = app.add_subcommand("fit-aux", "fit an auxiliary model to a CSV dataset");
  bii::runner::AuxSpec aux_spec;
  std::string fit_data, fit_out;
  std::uint64_t fit_seed = 1;
  bool no_canon = false;
  fit->add_option("--aux", aux_spec.kind, "normal, fixed-var-normal, mixture or beta-binomial")->required();
  fit->add_option("--data", fit_data, "dataset CSV (column y, or m,l,t)")->required()->check(CLI::ExistingFile);
  fit->add_option("--tau0", aux_spec.tau0, "variance of the fixed-variance normal");
  fit->add_option("--components", aux_spec.components, "mixture components")->capture_default_str();
  fit->add_flag("--no-canonicalize", no_canon, "keep EM component order");
  fit->add_option("--seed", fit_seed, "RNG seed for EM restarts")->capture_default_str();
  fit->add_option("--out", fit_out, "write JSON here instead of stdout");

  // run
  auto* run = app.add_subcommand("run", "run one configured experiment");
  std::string run_config;
  std::vector<std::string> run_set;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_output;
  std::optional<std::size_t> run_t;
  run->add_option("--config", run_config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--set", run_set, "config key=value not present in the file");
  run->add_option("--seed", run_seed, "same as --set seed=...");
  run->add_option("--output", run_output, "same as --set output=...");
  run->add_option("--T", run_t, "same as --set T=...");

  // adjust
  auto* adj = app.add_subcommand("adjust", "regression-adjust a chain CSV");
  bii::runner::AdjustRequest adj_req;
  std::string adj_chain, adj_out;
  adj->add_option("--chain", adj_chain, "chain CSV")->required()->check(CLI::ExistingFile);
  adj->add_option("--s-obs", adj_req.s_obs, "observed summary (default: s_obs from summary.json)")->delimiter(',');
  adj->add_option("--transforms", adj_req.transforms, "per-parameter identity, log, sqrt or neglog")->delimiter(',');
  adj->add_option("--thin", adj_req.thin, "keep every k-th row")->capture_default_str();
  adj->add_option("--out", adj_out, "output directory")->required();

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "acceptance rate, ESS and posterior summaries of a chain CSV");
  std::string diag_chain, diag_out;
  diag->add_option("--chain", diag_chain, "chain CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", diag_out, "write JSON here instead of stdout");

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact or numerical reference distributions as CSV");
  bii::runner::OracleRequest orc_req;
  std::string orc_data, orc_out;
  orc->add_option("--kind", orc_req.kind,
                  "poisson-posterior, poisson-normal-limit, poisson-fixed-limit, gandk-density or mjp")
      ->required();
  orc->add_option("--data", orc_data, "Poisson data CSV");
  orc->add_option("--alpha", orc_req.alpha, "gamma prior shape")->capture_default_str();
  orc->add_option("--beta", orc_req.beta, "gamma prior rate")->capture_default_str();
  orc->add_option("--tau0", orc_req.tau0, "fixed auxiliary variance");
  orc->add_option("--theta", orc_req.theta, "model parameters")->delimiter(',');
  orc->add_option("--lo", orc_req.lo, "grid start");
  orc->add_option("--hi", orc_req.hi, "grid end");
  orc->add_option("--points", orc_req.points, "grid size")->capture_default_str();
  orc->add_option("--larvae", orc_req.larvae, "initial larvae (mjp)");
  orc->add_option("--time", orc_req.time, "sacrifice time (mjp)");
  orc->add_option("--cap", orc_req.cap, "immunity truncation (mjp)")->capture_default_str();
  orc->add_option("--out", orc_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    bii::log_event(bii::LogLevel::error, "usage", {{"message", e.what()}});
    return kExitValidation;
  }

  try {
    bii::log_threshold() = parse_level(log_level);
    if (*sim) {
      json over = json::object();
      for (const auto& kv : sim_set) add_override(over, kv);
      auto put = [&](const char* key, const json& v) {
        if (over.contains(key)) throw bii::ValidationError(std::string("'") + key + "' given twice on the command line");
        over[key] = v;
      };
      if (sim_model) put("model", *sim_model);
      if (sim_theta) put("theta", *sim_theta);
      if (sim_n) put("N", *sim_n);
      if (sim_seed) put("seed", *sim_seed);
      if (sim_design) put("design", *sim_design);
      bii::io::ExperimentConfig c;
      if (!sim_config.empty()) {
        c = bii::io::load_config(sim_config, over);
      } else {
        std::vector<std::string> errors;
        c = bii::io::parse_config(over, errors);
        if (!errors.empty()) throw bii::io::ConfigError(errors);
      }
      bii::runner::simulate(c, sim_out);
      bii::log_event(bii::LogLevel::info, "simulate_done", {{"out", sim_out}});
    } else if (*fit) {
      aux_spec.canonicalize = !no_canon;
      emit(bii::runner::fit_aux(aux_spec, fit_data, fit_seed).dump(2) + "\n", fit_out);
    } else if (*run) {
      json over = json::object();
      for (const auto& kv : run_set) add_override(over, kv);
      auto put = [&](const char* key, const json& v) {
        if (over.contains(key)) throw bii::ValidationError(std::string("'") + key + "' given twice on the command line");
        over[key] = v;
      };
      if (run_seed) put("seed", *run_seed);
      if (run_output) put("output", *run_output);
      if (run_t) put("T", *run_t);
      const bii::io::ExperimentConfig c = bii::io::load_config(run_config, over);
      const auto outcome = bii::runner::run(c);
      std::cout << outcome.summary.dump(2) << "\n";
    } else if (*adj) {
      adj_req.chain = adj_chain;
      adj_req.output = adj_out;
      std::cout << bii::runner::adjust(adj_req).dump(2) << "\n";
    } else if (*diag) {
      emit(bii::runner::diagnose(diag_chain).dump(2) + "\n", diag_out);
    } else if (*orc) {
      orc_req.data = orc_data;
      emit(bii::runner::oracle(orc_req), orc_out);
    }
  } catch (const bii::io::ConfigError& e) {
    bii::log_event(bii::LogLevel::error, "invalid_config", {{"problems", e.problems()}});
    return kExitValidation;
  } catch (const bii::ValidationError& e) {
    bii::log_event(bii::LogLevel::error, "validation_failed", {{"message", e.what()}});
    return kExitValidation;
  } catch (const std::exception& e) {
    bii::log_event(bii::LogLevel::error, "runtime_failure", {{"message", e.what()}});
    return kExitRuntime;
  }
  return 0;
}
