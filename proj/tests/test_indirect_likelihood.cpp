#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "bii/auxiliary/normal.hpp"
#include "bii/bil/npdbil.hpp"
#include "bii/bil/pdbil.hpp"
#include "bii/bil/psbil.hpp"
#include "bii/models/bernoulli.hpp"
#include "bii/models/poisson.hpp"
#include "bii/prior.hpp"

using namespace bii;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector t(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) t[i++] = x;
  return t;
}

/// N(mu, v) with theta = (mu, v): the auxiliary family is exact.
struct NormalModel {
  using data_type = Sample;
  std::size_t dim() const { return 2; }
  std::vector<std::string> parameter_names() const { return {"mu", "v"}; }
  bool valid(const Theta& t) const { return t.size() == 2 && t[1] > 0.0; }
  Sample simulate(const Theta& t, std::size_t size, Rng& rng) const {
    Sample x(size);
    for (auto& v : x) v = t[0] + std::sqrt(t[1]) * rng.normal();
    return x;
  }
};

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double poisson_loglik_as_normal(const Sample& y, double lambda) {
  double s = 0.0;
  for (double v : y) s += -0.5 * std::log(2.0 * M_PI * lambda) - (v - lambda) * (v - lambda) / (2.0 * lambda);
  return s;
}

/// Least-squares slope and correlation of b on a.
std::pair<double, double> slope_and_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return {sab / saa, sab / std::sqrt(saa * sbb)};
}

}  // namespace

TEST(PdBil, LargeNApproachesNormalApproximationOfPoisson) {
  Rng rng(1);
  const PoissonModel gen;
  const Sample y = gen.simulate(vec({30.0}), 100, rng);
  const PdBilEstimate est = pdbil_loglik(gen, NormalAux(), vec({30.0}), y, 20000, rng);
  EXPECT_NEAR(est.phi_hat[0], 30.0, 0.05);
  EXPECT_NEAR(est.phi_hat[1], 30.0, 0.3);
  const double limit = poisson_loglik_as_normal(y, 30.0);
  EXPECT_NEAR(est.loglik, limit, 0.02 * std::abs(limit));
}

TEST(PdBil, VarianceDecreasesWithN) {
  Rng rng(2);
  const PoissonModel gen;
  const Sample y = gen.simulate(vec({30.0}), 100, rng);
  double prev = kInf;
  for (std::size_t n : {1, 10, 100}) {
    std::vector<double> draws;
    for (int i = 0; i < 500; ++i) draws.push_back(pdbil_loglik(gen, NormalAux(), vec({30.0}), y, n, rng).loglik);
    const double v = variance(draws);
    EXPECT_LT(v, prev) << "n=" << n;
    prev = v;
  }
}

TEST(PdBil, GridMaximumNearTruthWithExactAuxiliary) {
  Rng rng(3);
  const NormalModel gen;
  const Sample y = gen.simulate(vec({1.0, 4.0}), 200, rng);
  double best = kNegInf;
  Vector arg;
  for (double mu = 0.0; mu <= 2.0001; mu += 0.1)
    for (double v = 2.5; v <= 6.0001; v += 0.25) {
      Rng point_rng(77);  // common random numbers across the grid
      const double ll = pdbil_loglik(gen, NormalAux(), vec({mu, v}), y, 200, point_rng).loglik;
      if (ll > best) {
        best = ll;
        arg = vec({mu, v});
      }
    }
  // Sampling error of the observed-data MLE is about 0.14 in mu and 0.4 in v.
  EXPECT_NEAR(arg[0], 1.0, 0.45);
  EXPECT_NEAR(arg[1], 4.0, 1.25);
}

TEST(PdBil, AuxiliaryLoglikTracksTrueLoglikAsNGrows) {
  Rng rng(4);
  const NormalModel gen;
  const Sample y = gen.simulate(vec({0.0, 1.0}), 100, rng);
  const NormalAux aux;
  std::vector<double> truth, small, large;
  for (int i = 0; i < 300; ++i) {
    const Theta theta = vec({rng.uniform(-0.4, 0.4), rng.uniform(0.6, 1.6)});
    truth.push_back(aux.loglik(y, theta));
    small.push_back(pdbil_loglik(gen, aux, theta, y, 1, rng).loglik);
    large.push_back(pdbil_loglik(gen, aux, theta, y, 1000, rng).loglik);
  }
  const double corr_small = slope_and_correlation(truth, small).second;
  const auto [slope_large, corr_large] = slope_and_correlation(truth, large);
  EXPECT_NEAR(slope_large, 1.0, 0.05);
  EXPECT_GT(corr_large, corr_small);
  EXPECT_GT(corr_large, 0.99);
}

TEST(PdBil, FailedFitIsFlagged) {
  Rng rng(5);
  // A negligible rate gives all-zero data: no interior normal MLE.
  const PdBilEstimate est = pdbil_loglik(PoissonModel(), NormalAux(), vec({1e-12}), Sample{1.0, 2.0}, 3, rng);
  EXPECT_TRUE(est.failed);
  EXPECT_EQ(est.loglik, kNegInf);
  EXPECT_THROW(pdbil_loglik(PoissonModel(), NormalAux(), vec({1.0}), Sample{1.0}, 0, rng), ValidationError);
}

TEST(PsBil, IdenticalSummariesAreSingular) {
  const std::vector<Vector> s(10, vec({1.0, 2.0}));
  try {
    synthetic_loglik(s, vec({1.0, 2.0}));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("direction"), std::string::npos);
  }
}

TEST(PsBil, CollinearSummariesNameTheDirection) {
  std::vector<Vector> s;
  for (int i = 0; i < 10; ++i) s.push_back(vec({double(i), 2.0 * i}));
  EXPECT_THROW(synthetic_loglik(s, vec({0.0, 0.0})), NumericalError);
}

TEST(PsBil, UnivariateFormula) {
  const std::vector<Vector> s{vec({1.0}), vec({2.0}), vec({4.0}), vec({7.0})};
  const double m = 3.5;
  const double v = ((1 - m) * (1 - m) + (2 - m) * (2 - m) + (4 - m) * (4 - m) + (7 - m) * (7 - m)) / 4.0;
  const SynthLikEstimate est = synthetic_loglik(s, vec({5.0}));
  EXPECT_NEAR(est.loglik, -0.5 * std::log(2.0 * M_PI * v) - (5.0 - m) * (5.0 - m) / (2.0 * v), 1e-13);
  EXPECT_DOUBLE_EQ(est.mu[0], m);
  EXPECT_DOUBLE_EQ(est.sigma(0, 0), v);
}

TEST(PsBil, NeedsMoreSimulationsThanDimensions) {
  EXPECT_THROW(synthetic_loglik({vec({1.0, 2.0}), vec({2.0, 1.0}), vec({0.0, 0.5})}, vec({0.0, 0.0})), ValidationError);
}

TEST(PsBil, OrderOfReplicatesDoesNotMatter) {
  Rng rng(6);
  std::vector<Vector> s;
  for (int i = 0; i < 50; ++i) s.push_back(vec({rng.normal(), rng.normal() + 0.3 * i, rng.uniform()}));
  const double a = synthetic_loglik(s, vec({0.1, 5.0, 0.4})).loglik;
  std::reverse(s.begin(), s.end());
  std::shuffle(s.begin(), s.end(), rng);
  EXPECT_NEAR(synthetic_loglik(s, vec({0.1, 5.0, 0.4})).loglik, a, 1e-12 * std::abs(a));
}

TEST(PsBil, PoissonMeanSummaryModeMatchesExactPosterior) {
  Rng rng(7);
  const PoissonModel gen;
  const Sample y = gen.simulate(vec({30.0}), 100, rng);
  const Vector s_y = vec({std::accumulate(y.begin(), y.end(), 0.0) / 100.0});
  const Prior prior({GammaPrior{30.0, 1.0}});
  const auto mean = [](const Sample& x) { return vec({std::accumulate(x.begin(), x.end(), 0.0) / double(x.size())}); };
  double best = kNegInf;
  double arg = 0.0;
  for (double lambda = 27.0; lambda <= 33.0001; lambda += 0.05) {
    Rng point_rng(11);
    const double lp = psbil_loglik(gen, mean, vec({lambda}), s_y, 100, 2000, point_rng).loglik +
                      prior.logpdf(vec({lambda}));
    if (lp > best) {
      best = lp;
      arg = lambda;
    }
  }
  const GammaPrior post = poisson_exact_posterior(prior.marginals()[0], y);
  const double mode = (post.shape - 1.0) / post.rate;
  EXPECT_NEAR(arg, mode, 0.15);
}

TEST(PsBil, DeterministicGivenSeed) {
  const PoissonModel gen;
  const auto mean = [](const Sample& x) { return vec({std::accumulate(x.begin(), x.end(), 0.0) / double(x.size())}); };
  Rng a(3), b(3);
  EXPECT_EQ(psbil_loglik(gen, mean, vec({30.0}), vec({30.5}), 100, 50, a).loglik,
            psbil_loglik(gen, mean, vec({30.0}), vec({30.5}), 100, 50, b).loglik);
}

TEST(NpdBil, BernoulliEstimateDoesNotDependOnN) {
  Rng rng(8);
  const BernoulliModel gen;
  const std::function<double(const Sample&, const Sample&)> dist = [](const Sample& a, const Sample& b) {
    return a[0] == b[0] ? 0.0 : 1.0;
  };
  const auto checks = npdbil_identity_check(gen, KernelSpec(0.5), dist, vec({0.3}), Sample{1.0}, {1, 5, 10}, 20000, rng);
  ASSERT_EQ(checks.size(), 3u);
  for (const auto& c : checks) {
    EXPECT_NEAR(c.exact, 0.3, 1e-15);
    EXPECT_NEAR(c.estimate, 0.3, 3.0 * c.standard_error) << "n=" << c.n;
  }
  EXPECT_GT(checks[0].standard_error, checks[2].standard_error);
}

TEST(NpdBil, HugeToleranceGivesOne) {
  Rng rng(9);
  const BernoulliModel gen;
  const std::function<double(const Sample&, const Sample&)> dist = [](const Sample& a, const Sample& b) {
    return std::abs(a[0] - b[0]);
  };
  for (double theta : {0.1, 0.5, 0.9}) {
    const auto checks = npdbil_identity_check(gen, KernelSpec(1e9), dist, vec({theta}), Sample{0.0}, {1, 10}, 10, rng);
    for (const auto& c : checks) {
      EXPECT_EQ(c.estimate, 1.0);
      EXPECT_EQ(c.exact, 1.0);
    }
  }
}

TEST(PoissonLimits, MatchAuxiliaryLikelihoodTimesPriorUpToAConstant) {
  Rng rng(10);
  const Sample y = PoissonModel().simulate(vec({30.0}), 100, rng);
  const GammaPrior g{30.0, 1.0};
  const Prior prior({g});
  const NormalAux normal;
  const FixedVarNormalAux fixed(16.0);
  const auto normal_target = [&](double l) { return normal.loglik(y, vec({l, l})) + prior.logpdf(vec({l})); };
  const auto fixed_target = [&](double l) { return fixed.loglik(y, vec({l})) + prior.logpdf(vec({l})); };
  const double c_normal = poisson_limits::normal_aux_logdensity(30.0, g, y) - normal_target(30.0);
  const double c_fixed = poisson_limits::fixed_var_aux_logdensity(30.0, 16.0, g, y) - fixed_target(30.0);
  for (double l : {25.0, 28.5, 31.0, 36.0}) {
    EXPECT_NEAR(poisson_limits::normal_aux_logdensity(l, g, y) - normal_target(l), c_normal, 1e-8);
    EXPECT_NEAR(poisson_limits::fixed_var_aux_logdensity(l, 16.0, g, y) - fixed_target(l), c_fixed, 1e-8);
  }
}
