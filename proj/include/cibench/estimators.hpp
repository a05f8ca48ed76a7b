#pragma once

// Baseline effect estimators. All of them drop censored rows
// (complete-case analysis).

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "cibench/data_model.hpp"

namespace cibench {

/// Unadjusted difference of arm means with a Welch normal-approximation 95%
/// interval. Throws Error("degenerate arm") when an arm has fewer than two
/// uncensored samples.
PopulationPrediction diff_means(std::string_view ufid,
                                std::span<const ObservationRecord> obs);

struct PropensityFit {
  /// Intercept first, then one coefficient per feature column.
  Eigen::VectorXd coefficients;
  /// Model-based standard errors from the inverse observed information.
  Eigen::VectorXd standard_errors;
  int iterations = 0;

  /// P(z = 1 | x) for each row of `features`.
  Eigen::VectorXd predict(const RowMatrix& features) const;
};

struct PropensityOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on max |Δβ|
  double ridge = 1e-6;      // on non-intercept coefficients
  /// Starting coefficients (intercept first); empty starts from zero.
  Eigen::VectorXd start;
};

/// Logistic regression of z on the features (plus an intercept) by
/// iteratively reweighted least squares. Throws
/// Error("non-overlapping treatment groups ...") on a single class or when
/// the likelihood diverges under separation.
PropensityFit fit_propensity(const RowMatrix& features,
                             std::span<const int> z,
                             const PropensityOptions& options = {});

/// Self-normalized (Hájek) IPW difference for given propensities.
double hajek_estimate(std::span<const int> z, std::span<const double> y,
                      std::span<const double> propensity);

inline constexpr double kPropensityClipLow = 0.01;
inline constexpr double kPropensityClipHigh = 0.99;

struct IpwOptions {
  int bootstrap_reps = 200;
  std::uint64_t seed = 0;
  unsigned jobs = 0;  // bootstrap workers, 0: all cores
  PropensityOptions propensity;
};

/// Hájek IPW estimate with clipped propensities and a percentile bootstrap
/// 95% interval (rows resampled, propensity refit in every replicate).
/// `covariates` must contain every observed sample_id.
PopulationPrediction ipw_ate(std::string_view ufid,
                             std::span<const ObservationRecord> obs,
                             const CovariateTable& covariates,
                             const IpwOptions& options = {});

/// Linear-interpolated (type 7) quantile of `values`, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Separate least-squares fits of y on the covariates per arm; predicts
/// both potential outcomes for every observed sample, censored or not.
IndividualPredictionSet regression_impute(
    std::string_view ufid, std::span<const ObservationRecord> obs,
    const CovariateTable& covariates, double ridge = 1e-6);

}  // namespace cibench
