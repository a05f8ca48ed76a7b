#pragma once

// Data-generating processes: a random causal graph over the covariate
// columns drives three simulated nodes (treatment assignment, outcome,
// censoring). Each seeded instantiation yields one InstancePair.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cibench/data_model.hpp"
#include "cibench/io.hpp"
#include "cibench/numeric.hpp"

namespace cibench {

struct DgpConfig {
  std::size_t n_outcome_parents = 5;
  std::size_t n_treatment_parents = 5;
  std::size_t n_censoring_parents = 3;
  /// Covariates shared by the treatment and outcome parent sets.
  std::size_t n_confounders = 2;
  double treatment_prevalence = 0.5;
  double censoring_rate = 0.0;
  bool censoring_depends_on_treatment = false;
  int poly_degree = 1;
  bool use_exp_transform = false;
  double noise_sd = 1.0;
  /// Scale of the covariate-dependent part of the treatment effect.
  double effect_heterogeneity = 0.0;
  /// Constant part of the treatment effect.
  double effect_constant = 1.0;
  /// Instances drawn per dataset size (or per config on the censoring track).
  std::size_t instances_per_size = 1;
  std::uint64_t seed = 0;

  /// Throws Error if the config is inconsistent or does not fit
  /// `n_covariates` columns.
  void validate(std::size_t n_covariates) const;

  friend bool operator==(const DgpConfig&, const DgpConfig&) = default;
};

/// One monomial: coefficient * prod(x[i] for i in covariates).
struct PolynomialTerm {
  std::vector<std::size_t> covariates;
  double coefficient = 0.0;

  friend bool operator==(const PolynomialTerm&, const PolynomialTerm&) = default;
};

/// Value of a sum of monomials on one covariate row.
double evaluate_terms(std::span<const PolynomialTerm> terms,
                      const RowMatrix& values, Eigen::Index row);

struct DgpModel {
  std::vector<std::size_t> treatment_parents;  // sorted column indices
  std::vector<std::size_t> outcome_parents;
  std::vector<std::size_t> censoring_parents;

  std::vector<PolynomialTerm> treatment_terms;
  std::vector<PolynomialTerm> outcome_base_terms;
  std::vector<PolynomialTerm> outcome_effect_terms;
  std::vector<PolynomialTerm> censoring_terms;

  double treatment_intercept = 0.0;
  double censoring_intercept = 0.0;
  /// Centering offsets of the standardized outcome predictors.
  double outcome_base_offset = 0.0;
  double outcome_effect_offset = 0.0;
  /// Weight of the treatment node as a censoring input; 0 unless
  /// config.censoring_depends_on_treatment.
  double censoring_treatment_coefficient = 0.0;

  DgpConfig config;

  bool censoring_enabled() const { return config.censoring_rate > 0.0; }
  bool censoring_uses_treatment() const {
    return censoring_enabled() && config.censoring_depends_on_treatment;
  }

  /// Sorted union of every node's covariate parents.
  std::vector<std::size_t> covariates_used() const;

  double treatment_probability(const RowMatrix& values, Eigen::Index row) const;
  double censoring_probability(const RowMatrix& values, Eigen::Index row,
                               int z) const;
  /// f_base(x): the untreated outcome before noise.
  double base_outcome(const RowMatrix& values, Eigen::Index row) const;
  /// τ(x): the treatment effect before effect noise.
  double treatment_effect(const RowMatrix& values, Eigen::Index row) const;
};

/// What generated an instance.
struct DgpMetadata {
  std::size_t size = 0;
  std::size_t n_covariates = 0;
  std::size_t n_treatment_parents = 0;
  std::size_t n_outcome_parents = 0;
  std::size_t n_censoring_parents = 0;
  std::size_t n_confounders = 0;
  int poly_degree = 1;
  bool use_exp = false;
  bool censoring_uses_treatment = false;
  double prevalence = 0.0;
  double censoring_rate = 0.0;
  double realized_prevalence = 0.0;
  double realized_censoring_rate = 0.0;
};

struct SimulatedInstance {
  InstancePair pair;
  DgpMetadata metadata;
};

/// First 7 hex characters of SHA-256 over the two seeds.
std::string make_ufid(std::uint64_t model_seed, std::uint64_t instance_seed);

/// Intercept c with mean(sigmoid(score_i + c)) = target_rate, by bisection
/// over [-40, 40]. Optional non-negative `weights` turn the mean into a
/// weighted mean. Throws Error when the target is unattainable.
double calibrate_intercept(std::span<const double> scores, double target_rate,
                           std::span<const double> weights = {});

DgpModel build_model(const DgpConfig& config, const CovariateTable& covariates);

SimulatedInstance simulate_instance(const DgpModel& model,
                                    const CovariateTable& covariates,
                                    std::size_t n, std::uint64_t instance_seed);

// Synthetic covariates ---------------------------------------------------------

struct SyntheticCovariateOptions {
  std::size_t rows = 100000;
  std::size_t columns = 20;
  /// Share of columns that are Bernoulli indicators.
  double binary_fraction = 0.25;
  /// Rank of the shared latent factor inducing correlation between columns.
  std::size_t factor_rank = 2;
  /// Fraction of each column's latent variance explained by the factor;
  /// 0 gives independent columns.
  double factor_strength = 0.5;
  std::uint64_t seed = 0;
};

/// Gaussian and Bernoulli columns correlated through a random low-rank
/// factor. Values are already rounded to the x.csv precision, so writing and
/// re-reading the table is lossless.
CovariateTable generate_synthetic_covariates(
    const SyntheticCovariateOptions& options);

// Config files -------------------------------------------------------------------

/// Parses `key = value` lines. Each `[dgp]` section starts a new config;
/// keys before the first section are defaults shared by all sections. With no
/// sections the top-level keys form a single config.
std::vector<DgpConfig> parse_dgp_configs(std::string_view text,
                                         std::string_view source = "<config>");
std::vector<DgpConfig> read_dgp_configs(const std::filesystem::path& path);
std::string format_dgp_config(const DgpConfig& config);

// Tracks -------------------------------------------------------------------------

inline constexpr std::size_t kScalingSizes[] = {1000,  2500,  5000,
                                                10000, 25000, 50000};
inline constexpr std::size_t kCensoringSize = 10000;

struct TrackOptions {
  unsigned jobs = 0;  // 0: all cores
};

/// Writes x.csv, one pair per config, size and replicate (censoring forced
/// off) and manifest.csv under `<out_dir>/scaling/`. Reruns with identical
/// inputs are accepted; any differing existing file is an error.
std::vector<ManifestRow> generate_scaling_track(
    std::span<const DgpConfig> configs, const CovariateTable& covariates,
    const std::filesystem::path& out_dir, const TrackOptions& options = {});

/// As above under `<out_dir>/censoring/` with n = 10000. Every config must
/// have censoring_rate > 0.
std::vector<ManifestRow> generate_censoring_track(
    std::span<const DgpConfig> configs, const CovariateTable& covariates,
    const std::filesystem::path& out_dir, const TrackOptions& options = {});

}  // namespace cibench
