#ifndef BII_TOOLS_RUNNER_HPP
#define BII_TOOLS_RUNNER_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bii/io/config.hpp"

namespace bii::runner {

using nlohmann::json;

/// git's object id for a blob with this content: sha1("blob <len>\0" + content).
std::string git_blob_sha1(const std::string& content);

struct RunOutcome {
  std::filesystem::path output;
  std::vector<std::string> files;  // relative to output
  json summary;
  double wall_seconds = 0.0;
};

/// Validate (all problems at once), then run the configured chains and write
/// chain CSVs, summary.json, density CSVs and manifest.json into `output`.
RunOutcome run(const io::ExperimentConfig& config);

/// Simulate one dataset at config.theta and write it as CSV.
void simulate(const io::ExperimentConfig& config, const std::filesystem::path& out);

struct AuxSpec {
  std::string kind;  // normal | fixed-var-normal | mixture | beta-binomial
  double tau0 = 0.0;
  int components = 3;
  bool canonicalize = true;
};

/// Fit an auxiliary model to a CSV dataset: phi, loglik, score norm and the
/// eigenvalues of J.
json fit_aux(const AuxSpec& aux, const std::filesystem::path& data, std::uint64_t seed);

struct AdjustRequest {
  std::filesystem::path chain;
  std::vector<double> s_obs;  // empty: read from summary.json next to the chain
  std::vector<std::string> transforms;
  std::size_t thin = 1;
  std::filesystem::path output;
};

json adjust(const AdjustRequest& request);

/// Acceptance rate, ESS and posterior summaries of a chain CSV.
json diagnose(const std::filesystem::path& chain);

struct OracleRequest {
  std::string kind;  // poisson-posterior | poisson-normal-limit | poisson-fixed-limit | gandk-density | mjp
  std::filesystem::path data;
  double alpha = 30.0;
  double beta = 1.0;
  double tau0 = 0.0;
  std::vector<double> theta;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 512;
  int larvae = 0;
  double time = 0.0;
  int cap = 40;
  double gamma = 0.04;
  double mu_M = 0.0015;
};

/// Oracle output as CSV text.
std::string oracle(const OracleRequest& request);

}  // namespace bii::runner

#endif  // BII_TOOLS_RUNNER_HPP
