#pragma once

// Effect-estimation metrics for one group of instances D_n and their
// aggregation across dataset sizes.
//
// Population metrics take one row per instance j with the true effect e_j,
// the estimate ê_j and the 95% interval [l_j, r_j]:
//
//   ENoRMSE  E_n   = sqrt(mean_j (1 - (ê_j + δ) / (e_j + δ))^2)
//   RMSE     RMSE_n = sqrt(mean_j (ê_j - e_j)^2)
//   Bias     B_n   = mean_j (ê_j - e_j)
//   Coverage C_n   = mean_j 1[l_j <= e_j <= r_j]
//   CIC      ξ_n   = mean_j |ê_j - e_j| / (r_j - l_j + δ)
//   ENCIS    ε_n   = mean_j (r_j - l_j + δ) / (|e_j| + δ)
//
// Individual ENoRMSE averages the squared normalized error over individuals
// first, so every instance carries equal weight regardless of its size.

#include <cstddef>
#include <span>
#include <vector>

#include "cibench/data_model.hpp"

namespace cibench {

/// Stabilization constant δ added to both sides of normalized ratios.
struct StabilizationConstant {
  static constexpr double delta = 1e-7;
  static_assert(delta > 0);
};

inline constexpr double kDelta = StabilizationConstant::delta;

/// Truth, estimate and confidence interval for one instance.
struct PopulationRow {
  double truth = 0.0;
  double estimate = 0.0;
  double li = 0.0;
  double ri = 0.0;
};

/// Aligned per-individual true and estimated effects of one instance.
struct IndividualEffects {
  std::span<const double> truth;
  std::span<const double> estimate;
};

/// Squared normalized error (1 - (ê + δ) / (e + δ))^2.
double normalized_squared_error(double truth, double estimate);

double enormse_population(std::span<const PopulationRow> rows);
double enormse_individual(std::span<const IndividualEffects> instances);
/// Mean over individuals of the squared normalized error; the per-instance
/// term of individual ENoRMSE.
double mean_normalized_squared_error(std::span<const double> truth,
                                     std::span<const double> estimate);
double rmse_population(std::span<const PopulationRow> rows);
double bias_population(std::span<const PopulationRow> rows);
double coverage(std::span<const PopulationRow> rows);
double cic(std::span<const PopulationRow> rows);
double encis(std::span<const PopulationRow> rows);

/// One per-size score with its aggregation weight inputs.
struct SizeScore {
  std::size_t n = 0;
  std::size_t count = 0;
  double value = 0.0;
};

/// sqrt(Σ n·|D_n|·v² / Σ n·|D_n|), used for ENoRMSE and RMSE.
double aggregate_quadratic(std::span<const SizeScore> per_size);
/// Σ n·|D_n|·v / Σ n·|D_n|, used for Bias, Coverage, CIC and ENCIS.
double aggregate_linear(std::span<const SizeScore> per_size);

/// All six metrics for one group of instances of nominal size n.
MetricsPerSize population_metrics(std::size_t n,
                                  std::span<const PopulationRow> rows);

/// Cross-size aggregation of whatever metrics are present in `per_size`.
AggregateMetrics aggregate_metrics(std::span<const MetricsPerSize> per_size);

}  // namespace cibench
