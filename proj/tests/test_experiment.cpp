#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bii/io/config.hpp"
#include "bii/io/csv.hpp"
#include "runner.hpp"

using namespace bii;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = BII_SOURCE_DIR;
const std::string kPoissonData = (kSource / "configs/data/poisson_N100.csv").string();

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bii_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json poisson_config(const fs::path& out) {
  return {{"model", "poisson"}, {"aux", "normal"},          {"method", "pdbil"},    {"n", 5},
          {"T", 500},           {"prior", {{{"gamma", {30, 1}}}}}, {"proposal_sd", {1.0}}, {"theta0", {30}},
          {"seed", 11},         {"data", kPoissonData},      {"output", out.string()}};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

io::ExperimentConfig parse(const json& j) {
  std::vector<std::string> errors;
  io::ExperimentConfig c = io::parse_config(j, errors);
  if (!errors.empty()) throw io::ConfigError(errors);
  return c;
}

struct Cli {
  int status;
  std::string out;
  std::string err;
};

Cli cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(BII_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

}  // namespace

TEST(Manifest, GitBlobHash) {
  EXPECT_EQ(runner::git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(runner::git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST(Run, PoissonPdbilWritesArtifactsAndManifest) {
  const fs::path out = scratch("pdbil") / "out";
  const auto res = runner::run(parse(poisson_config(out)));
  for (const char* f : {"chain.csv", "summary.json", "manifest.json", "density_lambda.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const json manifest = json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 11u);
  EXPECT_EQ(manifest.at("data_sha1").get<std::string>(), runner::git_blob_sha1(slurp(kPoissonData)));
  ASSERT_TRUE(manifest.at("files").contains("chain.csv"));
  for (const auto& [name, hash] : manifest.at("files").items())
    EXPECT_EQ(hash.get<std::string>(), runner::git_blob_sha1(slurp(out / name))) << name;
  const json summary = json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary.at("method"), "pdbil");
  const double mean = summary.at("posterior").at("lambda").at("mean").get<double>();
  EXPECT_GT(mean, 25.0);
  EXPECT_LT(mean, 40.0);
  EXPECT_EQ(res.summary.at("chains").at(0).at("stored").get<std::size_t>(), 500u);
}

TEST(Run, SameSeedReproducesChainBitwise) {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  runner::run(parse(poisson_config(a)));
  runner::run(parse(poisson_config(b)));
  EXPECT_EQ(slurp(a / "chain.csv"), slurp(b / "chain.csv"));
  json other = poisson_config(scratch("repro_c"));
  other["seed"] = 12;
  runner::run(parse(other));
  EXPECT_NE(slurp(a / "chain.csv"), slurp(fs::path(other["output"].get<std::string>()) / "chain.csv"));
}

TEST(Run, AbcIsAndPsbilSmoke) {
  const fs::path dir = scratch("smoke");
  json abc = poisson_config(dir / "abc");
  abc["method"] = "abc-is";
  abc["n"] = 1;
  abc["pilot_draws"] = 500;
  abc["epsilon_quantile"] = 0.2;
  abc["T"] = 300;
  const auto r1 = runner::run(parse(abc));
  EXPECT_TRUE(fs::exists(dir / "abc" / "adjusted.csv"));
  EXPECT_GT(r1.summary.at("epsilon").get<double>(), 0.0);
  EXPECT_EQ(r1.summary.at("s_obs").size(), 2u);

  json ps = poisson_config(dir / "ps");
  ps["method"] = "psbil";
  ps.erase("aux");
  ps["n"] = 20;
  ps["psbil_summary"] = "mean";
  const auto r2 = runner::run(parse(ps));
  const double mean = r2.summary.at("posterior").at("lambda").at("mean").get<double>();
  EXPECT_GT(mean, 25.0);
  EXPECT_LT(mean, 40.0);
}

TEST(Config, AbcIpWithUncanonicalisedMixtureIsRejected) {
  json j = poisson_config(scratch("abcip"));
  j["model"] = "gandk";
  j["aux"] = "mixture";
  j["method"] = "abc-ip";
  j["n"] = 1;
  j["canonicalize"] = false;
  j["prior"] = json::array({{{"uniform", {0, 10}}}, {{"uniform", {0, 10}}}, {{"uniform", {0, 10}}},
                            {{"uniform", {0, 10}}}});
  j["proposal_sd"] = {0.1, 0.1, 0.1, 0.1};
  j["theta0"] = {3, 1, 2, 0.5};
  const auto problems = io::validate_run(parse(j));
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("canonicalisation"), std::string::npos);
  EXPECT_THROW(runner::run(parse(j)), io::ConfigError);
}

TEST(Config, AllProblemsAreReportedTogether) {
  json j = poisson_config(scratch("errors"));
  j["colour"] = "blue";
  j["T"] = "many";
  try {
    parse(j);
    FAIL() << "expected ConfigError";
  } catch (const io::ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
    EXPECT_NE(std::string(e.what()).find("unknown key 'colour'"), std::string::npos);
  }
  json k = poisson_config(scratch("errors2"));
  k["method"] = "abc-il";  // n = 5 is not allowed for ABC
  k["proposal_sd"] = {-1.0};
  k["data"] = "/nonexistent.csv";
  EXPECT_GE(io::validate_run(parse(k)).size(), 3u);
}

TEST(Config, FileAndOverrideConflictIsRejected) {
  const fs::path dir = scratch("conflict");
  const fs::path p = write_config(dir, poisson_config(dir / "out"));
  EXPECT_THROW(io::load_config(p, {{"seed", 3}}), io::ConfigError);
  json slim = poisson_config(dir / "out");
  slim.erase("seed");
  EXPECT_EQ(io::load_config(write_config(dir, slim), {{"seed", 3}}).seed, 3u);
}

TEST(Simulate, GandkDatasetIsReproducible) {
  const fs::path dir = scratch("simulate");
  json j = {{"model", "gandk"}, {"theta", {3, 1, 2, 0.5}}, {"N", 10000}, {"seed", 4}};
  runner::simulate(parse(j), dir / "a.csv");
  runner::simulate(parse(j), dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(io::read_sample(dir / "a.csv").size(), 10000u);
  j["N"] = 0;
  EXPECT_THROW(runner::simulate(parse(j), dir / "c.csv"), ValidationError);
}

TEST(Cli, ExitCodesAndJsonLogs) {
  const fs::path dir = scratch("cli");
  const Cli ok = cli("oracle --kind poisson-posterior --data " + kPoissonData + " --lo 20 --hi 40 --points 11", dir);
  EXPECT_EQ(ok.status, 0) << ok.err;
  EXPECT_NE(ok.out.find('\n'), std::string::npos);

  json bad = poisson_config(dir / "out");
  bad["colour"] = "blue";
  const Cli invalid = cli("run --config " + write_config(dir, bad).string(), dir);
  EXPECT_EQ(invalid.status, 1);
  EXPECT_NE(invalid.err.find("colour"), std::string::npos);

  const fs::path cfg = write_config(dir, poisson_config(dir / "out"));
  EXPECT_EQ(cli("run --config " + cfg.string() + " --seed 3", dir).status, 1);

  std::ofstream(dir / "flat.csv") << "y\n1\n1\n1\n1\n1\n1\n1\n1\n1\n1\n";
  const Cli runtime = cli("fit-aux --aux mixture --data " + (dir / "flat.csv").string(), dir);
  EXPECT_EQ(runtime.status, 2);

  std::istringstream lines(invalid.err + runtime.err);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    EXPECT_NO_THROW(json::parse(line)) << line;
    ++n;
  }
  EXPECT_GE(n, 2);
}

TEST(Cli, RunThenDiagnoseAndAdjust) {
  const fs::path dir = scratch("cli_chain");
  json abc = poisson_config(dir / "out");
  abc["method"] = "abc-ip";
  abc["n"] = 1;
  abc["pilot_draws"] = 500;
  abc["epsilon_quantile"] = 0.2;
  abc["T"] = 300;
  ASSERT_EQ(cli("run --config " + write_config(dir, abc).string(), dir).status, 0);
  const Cli d = cli("diagnose --chain " + (dir / "out" / "chain.csv").string(), dir);
  ASSERT_EQ(d.status, 0) << d.err;
  const json dj = json::parse(d.out);
  EXPECT_EQ(dj.at("stored").get<std::size_t>(), 300u);
  EXPECT_GT(dj.at("acceptance_rate").get<double>(), 0.0);
  const Cli a = cli("adjust --chain " + (dir / "out" / "chain.csv").string() + " --transforms log --out " +
                        (dir / "adj").string(),
                    dir);
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_TRUE(fs::exists(dir / "adj" / "adjusted.csv"));
}
