#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cibench/dgp.hpp"
#include "cibench/estimators.hpp"
#include "temp_dir.hpp"

using namespace cibench;
using cibench::testing::TempDir;

namespace {

const CovariateTable& table() {
  static const CovariateTable t = [] {
    SyntheticCovariateOptions o;
    o.rows = 12000;
    o.columns = 12;
    o.seed = 5;
    return generate_synthetic_covariates(o);
  }();
  return t;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool within(const std::vector<std::size_t>& parents,
            const std::vector<PolynomialTerm>& terms) {
  for (const auto& t : terms) {
    for (std::size_t c : t.covariates) {
      if (!std::binary_search(parents.begin(), parents.end(), c)) return false;
    }
  }
  return true;
}

}  // namespace

// Config validation ----------------------------------------------------------------

TEST(DgpConfig, Validation) {
  DgpConfig c;
  EXPECT_NO_THROW(c.validate(12));
  EXPECT_THROW(c.validate(4), Error);  // 5 parents, 4 covariates
  c.n_confounders = 6;
  EXPECT_THROW(c.validate(12), Error);
  c = {};
  c.n_confounders = 0;
  EXPECT_THROW(c.validate(9), Error);  // 10 distinct parents needed
  c = {};
  for (double bad : {0.0, 1.0, -0.1, std::nan("")}) {
    c.treatment_prevalence = bad;
    EXPECT_THROW(c.validate(12), Error);
  }
  c = {};
  c.censoring_rate = 1.0;
  EXPECT_THROW(c.validate(12), Error);
  c = {};
  c.poly_degree = 0;
  EXPECT_THROW(c.validate(12), Error);
  c = {};
  c.noise_sd = -1;
  EXPECT_THROW(c.validate(12), Error);
}

// calibrate_intercept ------------------------------------------------------------

TEST(CalibrateIntercept, Symmetric) {
  const std::vector<double> zeros(100, 0.0);
  EXPECT_NEAR(calibrate_intercept(zeros, 0.5), 0.0, 1e-4);
}

TEST(CalibrateIntercept, ClosedFormLogit) {
  const std::vector<double> zeros(100, 0.0);
  EXPECT_NEAR(calibrate_intercept(zeros, 0.3), -0.84729786038720361, 1e-4);
}

TEST(CalibrateIntercept, GaussianScoresMonteCarlo) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> scores(10000);
  for (auto& s : scores) s = g(rng);
  const double c = calibrate_intercept(scores, 0.2);
  double mean = 0.0;
  for (double s : scores) mean += sigmoid(s + c);
  mean /= static_cast<double>(scores.size());
  EXPECT_NEAR(mean, 0.2, 1e-3);
}

TEST(CalibrateIntercept, WeightedMean) {
  const std::vector<double> scores = {-2.0, 2.0};
  const std::vector<double> weights = {3.0, 1.0};
  const double c = calibrate_intercept(scores, 0.4, weights);
  const double mean = (3.0 * sigmoid(-2.0 + c) + sigmoid(2.0 + c)) / 4.0;
  EXPECT_NEAR(mean, 0.4, 1e-9);
}

TEST(CalibrateIntercept, Errors) {
  const std::vector<double> zeros(10, 0.0);
  EXPECT_THROW(calibrate_intercept({}, 0.5), Error);
  EXPECT_THROW(calibrate_intercept(zeros, 0.0), Error);
  EXPECT_THROW(calibrate_intercept(zeros, 1.0), Error);
  const std::vector<double> huge = {-1e6, 1e6};
  EXPECT_THROW(calibrate_intercept(huge, 0.2), Error);  // unattainable
}

// build_model -------------------------------------------------------------------

TEST(BuildModel, NoConfoundersMeansDisjointParents) {
  DgpConfig c;
  c.n_confounders = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    c.seed = seed;
    const auto m = build_model(c, table());
    std::vector<std::size_t> shared;
    std::set_intersection(m.treatment_parents.begin(), m.treatment_parents.end(),
                          m.outcome_parents.begin(), m.outcome_parents.end(),
                          std::back_inserter(shared));
    EXPECT_TRUE(shared.empty());
  }
}

TEST(BuildModel, ConfounderCountIsTheOverlap) {
  DgpConfig c;
  c.n_confounders = 3;
  c.seed = 4;
  const auto m = build_model(c, table());
  std::vector<std::size_t> shared;
  std::set_intersection(m.treatment_parents.begin(), m.treatment_parents.end(),
                        m.outcome_parents.begin(), m.outcome_parents.end(),
                        std::back_inserter(shared));
  EXPECT_EQ(shared.size(), 3u);
  EXPECT_EQ(m.treatment_parents.size(), 5u);
  EXPECT_EQ(m.outcome_parents.size(), 5u);
}

TEST(BuildModel, Deterministic) {
  DgpConfig c;
  c.seed = 77;
  c.poly_degree = 3;
  c.censoring_rate = 0.2;
  c.censoring_depends_on_treatment = true;
  const auto a = build_model(c, table());
  const auto b = build_model(c, table());
  EXPECT_EQ(a.treatment_parents, b.treatment_parents);
  EXPECT_EQ(a.outcome_parents, b.outcome_parents);
  EXPECT_EQ(a.censoring_parents, b.censoring_parents);
  EXPECT_EQ(a.treatment_terms, b.treatment_terms);
  EXPECT_EQ(a.outcome_base_terms, b.outcome_base_terms);
  EXPECT_EQ(a.outcome_effect_terms, b.outcome_effect_terms);
  EXPECT_EQ(a.censoring_terms, b.censoring_terms);
  EXPECT_EQ(a.treatment_intercept, b.treatment_intercept);
  EXPECT_EQ(a.censoring_intercept, b.censoring_intercept);
  EXPECT_EQ(a.censoring_treatment_coefficient, b.censoring_treatment_coefficient);

  c.seed = 78;
  const auto other = build_model(c, table());
  EXPECT_NE(a.treatment_terms, other.treatment_terms);
}

TEST(BuildModel, LinearConfigHasSingleIndexTerms) {
  DgpConfig c;
  c.poly_degree = 1;
  c.use_exp_transform = false;
  const auto m = build_model(c, table());
  for (const auto* terms : {&m.treatment_terms, &m.outcome_base_terms,
                            &m.outcome_effect_terms}) {
    for (const auto& t : *terms) EXPECT_EQ(t.covariates.size(), 1u);
  }
}

TEST(BuildModel, TermsStayWithinParentSets) {
  DgpConfig c;
  c.poly_degree = 3;
  c.censoring_rate = 0.3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.seed = seed;
    const auto m = build_model(c, table());
    EXPECT_TRUE(within(m.treatment_parents, m.treatment_terms));
    EXPECT_TRUE(within(m.outcome_parents, m.outcome_base_terms));
    EXPECT_TRUE(within(m.outcome_parents, m.outcome_effect_terms));
    EXPECT_TRUE(within(m.censoring_parents, m.censoring_terms));
    std::size_t max_degree = 0;
    for (const auto& t : m.outcome_base_terms) {
      max_degree = std::max(max_degree, t.covariates.size());
    }
    EXPECT_LE(max_degree, 3u);
    EXPECT_GT(max_degree, 1u);
  }
}

TEST(BuildModel, TreatmentEntersCensoringOnlyWhenConfigured) {
  DgpConfig c;
  c.censoring_rate = 0.2;
  const auto independent = build_model(c, table());
  EXPECT_EQ(independent.censoring_treatment_coefficient, 0.0);
  EXPECT_FALSE(independent.censoring_uses_treatment());
  EXPECT_EQ(independent.censoring_parents.size(), 3u);

  c.censoring_depends_on_treatment = true;
  const auto dependent = build_model(c, table());
  EXPECT_NE(dependent.censoring_treatment_coefficient, 0.0);
  EXPECT_TRUE(dependent.censoring_uses_treatment());

  c.censoring_rate = 0.0;
  const auto none = build_model(c, table());
  EXPECT_TRUE(none.censoring_parents.empty());
  EXPECT_FALSE(none.censoring_uses_treatment());
}

TEST(BuildModel, ExpTransformStaysFinite) {
  DgpConfig c;
  c.use_exp_transform = true;
  c.poly_degree = 3;
  const auto m = build_model(c, table());
  const auto inst = simulate_instance(m, table(), 2000, 1);
  for (const auto& l : inst.pair.labels) {
    EXPECT_TRUE(std::isfinite(l.y0));
    EXPECT_TRUE(std::isfinite(l.y1));
  }
}

// simulate_instance ---------------------------------------------------------------

TEST(SimulateInstance, HomogeneousUnitEffect) {
  DgpConfig c;
  c.noise_sd = 0.0;
  c.effect_heterogeneity = 0.0;
  c.effect_constant = 1.0;
  const auto m = build_model(c, table());
  const auto inst = simulate_instance(m, table(), 1000, 3);
  for (const auto& l : inst.pair.labels) {
    EXPECT_NEAR(l.y1 - l.y0, 1.0, 1e-12);
  }
  EXPECT_EQ(true_population_effect(inst.pair.labels), 1.0);
}

TEST(SimulateInstance, NoCensoringMeansNoMissingOutcomes) {
  DgpConfig c;
  const auto m = build_model(c, table());
  const auto inst = simulate_instance(m, table(), 5000, 9);
  for (const auto& o : inst.pair.observations) EXPECT_FALSE(o.censored());
  EXPECT_EQ(inst.metadata.realized_censoring_rate, 0.0);
}

TEST(SimulateInstance, PrevalenceCalibrated) {
  SyntheticCovariateOptions o;
  o.rows = 20000;
  o.columns = 12;
  o.seed = 8;
  const auto big = generate_synthetic_covariates(o);
  DgpConfig c;
  c.treatment_prevalence = 0.3;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    const auto m = build_model(c, big);
    total += simulate_instance(m, big, 10000, seed).metadata.realized_prevalence;
  }
  EXPECT_NEAR(total / 20.0, 0.3, 0.02);
}

TEST(SimulateInstance, ObservedOutcomeIsConsistent) {
  DgpConfig c;
  c.censoring_rate = 0.25;
  c.censoring_depends_on_treatment = true;
  c.effect_heterogeneity = 0.5;
  c.poly_degree = 2;
  const auto m = build_model(c, table());
  const auto inst = simulate_instance(m, table(), 4000, 2);
  EXPECT_NO_THROW(inst.pair.validate());
  std::size_t censored = 0;
  for (std::size_t i = 0; i < inst.pair.n(); ++i) {
    const auto& o = inst.pair.observations[i];
    const auto& l = inst.pair.labels[i];
    ASSERT_EQ(o.sample_id, l.sample_id);
    if (o.censored()) {
      ++censored;
      continue;
    }
    EXPECT_EQ(*o.y, o.z == 1 ? l.y1 : l.y0);
  }
  EXPECT_GT(censored, 0u);
}

TEST(SimulateInstance, DeterministicAndSeedSensitive) {
  DgpConfig c;
  c.censoring_rate = 0.1;
  const auto m = build_model(c, table());
  const auto a = simulate_instance(m, table(), 1000, 42);
  const auto b = simulate_instance(m, table(), 1000, 42);
  EXPECT_EQ(a.pair, b.pair);
  const auto other = simulate_instance(m, table(), 1000, 43);
  EXPECT_NE(a.pair.ufid, other.pair.ufid);
  EXPECT_NE(a.pair.labels, other.pair.labels);
}

TEST(SimulateInstance, SamplesDistinctRowsOfTheTable) {
  const auto m = build_model(DgpConfig{}, table());
  const auto inst = simulate_instance(m, table(), 3000, 1);
  std::set<std::string> ids;
  for (const auto& o : inst.pair.observations) {
    EXPECT_TRUE(table().find(o.sample_id).has_value());
    ids.insert(o.sample_id);
  }
  EXPECT_EQ(ids.size(), 3000u);
  EXPECT_THROW(simulate_instance(m, table(), table().rows() + 1, 1), Error);
  EXPECT_THROW(simulate_instance(m, table(), 0, 1), Error);
}

TEST(SimulateInstance, UnconfoundedNaiveEstimateIsUnbiased) {
  // Correlated columns would link the two parent sets, so this needs
  // independent covariates. A single finite table still carries chance
  // correlations, so tables and models vary too.
  std::vector<double> errors;
  for (std::uint64_t t = 0; t < 40; ++t) {
    SyntheticCovariateOptions o;
    o.rows = 6000;
    o.columns = 12;
    o.factor_strength = 0.0;
    o.seed = 100 + t;
    const auto independent = generate_synthetic_covariates(o);
    DgpConfig c;
    c.n_confounders = 0;
    c.seed = t;
    const auto m = build_model(c, independent);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto inst = simulate_instance(m, independent, 2000, s);
      const double truth = true_population_effect(inst.pair.labels);
      errors.push_back(
          diff_means(inst.pair.ufid, inst.pair.observations).effect_size - truth);
    }
  }
  double mean = 0.0, sq = 0.0;
  for (double e : errors) mean += e;
  mean /= errors.size();
  for (double e : errors) sq += (e - mean) * (e - mean);
  const double se = std::sqrt(sq / (errors.size() - 1) / errors.size());
  EXPECT_LT(std::abs(mean), 3.0 * se) << "mean " << mean << " se " << se;
}

TEST(MakeUfid, SevenHexDigits) {
  const auto u = make_ufid(1, 2);
  EXPECT_TRUE(is_valid_ufid(u));
  EXPECT_EQ(u, make_ufid(1, 2));
  EXPECT_NE(u, make_ufid(2, 1));
}

// Synthetic covariates ----------------------------------------------------------

TEST(SyntheticCovariates, ShapeAndBinaryColumns) {
  SyntheticCovariateOptions o;
  o.rows = 500;
  o.columns = 8;
  o.binary_fraction = 0.25;
  const auto t = generate_synthetic_covariates(o);
  EXPECT_EQ(t.rows(), 500u);
  EXPECT_EQ(t.columns(), 8u);
  std::size_t binary = 0;
  for (std::size_t j = 0; j < t.columns(); ++j) {
    if (t.feature_names()[j][0] != 'b') continue;
    ++binary;
    for (Eigen::Index i = 0; i < t.values().rows(); ++i) {
      const double v = t.values()(i, static_cast<Eigen::Index>(j));
      EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
  }
  EXPECT_EQ(binary, 2u);
  EXPECT_EQ(generate_synthetic_covariates(o), t);
}

TEST(SyntheticCovariates, FactorInducesCorrelation) {
  auto max_abs_corr = [](const CovariateTable& t) {
    const Eigen::MatrixXd x = t.values();
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = c.transpose() * c / double(x.rows() - 1);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        worst = std::max(worst, std::abs(cov(i, j) / (sd(i) * sd(j))));
      }
    }
    return worst;
  };
  SyntheticCovariateOptions o;
  o.rows = 20000;
  o.columns = 6;
  o.binary_fraction = 0.0;
  o.factor_strength = 0.0;
  EXPECT_LT(max_abs_corr(generate_synthetic_covariates(o)), 0.05);
  o.factor_strength = 0.6;
  EXPECT_GT(max_abs_corr(generate_synthetic_covariates(o)), 0.1);
}

TEST(SyntheticCovariates, WriteReadIsLossless) {
  TempDir dir;
  SyntheticCovariateOptions o;
  o.rows = 300;
  o.columns = 5;
  const auto t = generate_synthetic_covariates(o);
  write_covariates(t, dir / "x.csv");
  EXPECT_EQ(read_covariates(dir / "x.csv"), t);
}

// Config files -----------------------------------------------------------------

TEST(DgpConfigFile, DefaultsAndSections) {
  const auto configs = parse_dgp_configs(
      "# shared\n"
      "noise_sd = 0.5\n"
      "seed = 3\n"
      "[dgp a]\n"
      "n_confounders = 4\n"
      "censoring_rate = 0.2   # trailing comment\n"
      "censoring_depends_on_treatment = yes\n"
      "\n"
      "[dgp]\n"
      "poly_degree = 3\n"
      "use_exp_transform = true\n");
  ASSERT_EQ(configs.size(), 2u);
  EXPECT_EQ(configs[0].noise_sd, 0.5);
  EXPECT_EQ(configs[0].n_confounders, 4u);
  EXPECT_EQ(configs[0].censoring_rate, 0.2);
  EXPECT_TRUE(configs[0].censoring_depends_on_treatment);
  EXPECT_EQ(configs[1].seed, 3u);
  EXPECT_EQ(configs[1].poly_degree, 3);
  EXPECT_TRUE(configs[1].use_exp_transform);
  EXPECT_EQ(configs[1].n_confounders, 2u);
}

TEST(DgpConfigFile, TopLevelOnly) {
  const auto configs = parse_dgp_configs("treatment_prevalence = 0.3\n");
  ASSERT_EQ(configs.size(), 1u);
  EXPECT_EQ(configs[0].treatment_prevalence, 0.3);
}

TEST(DgpConfigFile, ErrorsNameTheLine) {
  for (const char* bad : {"a = 1\n", "seed 3\n", "seed = -1\n", "[other]\n",
                          "[dgp\n", "use_exp_transform = maybe\n",
                          "noise_sd = fast\n"}) {
    try {
      parse_dgp_configs(std::string("\n") + bad, "cfg");
      FAIL() << bad;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("cfg:2"), std::string::npos) << e.what();
    }
  }
}

TEST(DgpConfigFile, FormatRoundTrips) {
  DgpConfig c;
  c.n_confounders = 3;
  c.treatment_prevalence = 0.35;
  c.censoring_rate = 0.15;
  c.censoring_depends_on_treatment = true;
  c.poly_degree = 2;
  c.use_exp_transform = true;
  c.effect_heterogeneity = 0.4;
  c.effect_constant = -0.5;
  c.instances_per_size = 3;
  c.seed = 123456789012345ULL;
  const auto back = parse_dgp_configs(format_dgp_config(c));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], c);
}

TEST(DgpConfigFile, MissingFileNamesThePath) {
  try {
    read_dgp_configs("/nonexistent/dir/cfg.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/cfg.ini"),
              std::string::npos);
  }
}

// Tracks ---------------------------------------------------------------------

class Tracks : public ::testing::Test {
 protected:
  static const CovariateTable& big() {
    static const CovariateTable t = [] {
      SyntheticCovariateOptions o;
      o.rows = 50000;
      o.columns = 10;
      o.seed = 1;
      return generate_synthetic_covariates(o);
    }();
    return t;
  }
  TempDir dir_;
};

TEST_F(Tracks, ScalingTrackHasSixSizes) {
  const std::vector<DgpConfig> configs(1);
  const auto manifest = generate_scaling_track(configs, big(), dir_.path());
  ASSERT_EQ(manifest.size(), 6u);
  const auto track_dir = dir_ / "scaling";
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(track_dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 12u + 2u);  // pairs, x.csv and manifest.csv
  EXPECT_EQ(read_manifest(track_dir / "manifest.csv"), manifest);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(manifest[i].size, kScalingSizes[i]);
    EXPECT_EQ(manifest[i].track, Track::scaling);
    const auto pair = read_instance_pair(track_dir, manifest[i].ufid);
    EXPECT_EQ(pair.n(), kScalingSizes[i]);
  }
}

TEST_F(Tracks, RerunIsByteIdentical) {
  std::vector<DgpConfig> configs(2);
  configs[1].seed = 9;
  configs[1].instances_per_size = 2;
  const auto first = generate_scaling_track(configs, big(), dir_.path());
  EXPECT_EQ(first.size(), 18u);
  std::map<std::string, std::string> bytes;
  for (const auto& e : fs::directory_iterator(dir_ / "scaling")) {
    bytes[e.path().filename().string()] = slurp(e.path());
  }
  const auto second = generate_scaling_track(configs, big(), dir_.path(), {2});
  EXPECT_EQ(first, second);
  for (const auto& [name, content] : bytes) {
    EXPECT_EQ(slurp(dir_ / "scaling" / name), content) << name;
  }
}

TEST_F(Tracks, DifferentContentUnderExistingNameIsACollision) {
  const std::vector<DgpConfig> configs(1);
  const auto manifest = generate_scaling_track(configs, big(), dir_.path());
  std::ofstream(label_path(dir_ / "scaling", manifest[0].ufid))
      << "sample_id,y0,y1\ns1,0,0\n";
  EXPECT_THROW(generate_scaling_track(configs, big(), dir_.path()), Error);
}

TEST_F(Tracks, CensoringTrack) {
  std::vector<DgpConfig> configs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    configs[i].seed = 100 + i;
    configs[i].censoring_rate = 0.2;
  }
  configs[2].censoring_depends_on_treatment = true;
  const auto manifest = generate_censoring_track(configs, big(), dir_.path());
  ASSERT_EQ(manifest.size(), 3u);
  for (const auto& row : manifest) {
    EXPECT_EQ(row.size, kCensoringSize);
    EXPECT_EQ(row.track, Track::censoring);
    const auto pair = read_instance_pair(dir_ / "censoring", row.ufid);
    EXPECT_EQ(pair.n(), 10000u);
    std::size_t na = 0;
    for (const auto& o : pair.observations) na += o.censored();
    EXPECT_NEAR(static_cast<double>(na) / 10000.0, 0.2, 0.02) << row.ufid;
    const std::string labels = slurp(label_path(dir_ / "censoring", row.ufid));
    EXPECT_EQ(labels.find("NA"), std::string::npos);
  }
}

TEST_F(Tracks, CensoringTrackRequiresCensoring) {
  const std::vector<DgpConfig> configs(1);
  EXPECT_THROW(generate_censoring_track(configs, big(), dir_.path()), Error);
}

TEST_F(Tracks, ScalingTrackForcesCensoringOff) {
  std::vector<DgpConfig> configs(1);
  configs[0].censoring_rate = 0.3;
  const auto manifest = generate_scaling_track(configs, big(), dir_.path());
  for (const auto& row : manifest) {
    EXPECT_EQ(row.censoring_rate, 0.0);
    for (const auto& o :
         read_observation_file(observation_path(dir_ / "scaling", row.ufid)).second) {
      ASSERT_FALSE(o.censored());
    }
  }
}

TEST_F(Tracks, TooFewCovariateRows) {
  SyntheticCovariateOptions o;
  o.rows = 20000;
  o.columns = 10;
  const auto small = generate_synthetic_covariates(o);
  const std::vector<DgpConfig> configs(1);
  EXPECT_THROW(generate_scaling_track(configs, small, dir_.path()), Error);
}
