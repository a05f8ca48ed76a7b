#pragma once

// Domain types shared by every part of the benchmark: covariate tables,
// factual / counter-factual records, submissions and metric results.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace cibench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. The message carries the path and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// True for exactly seven lowercase hexadecimal characters.
bool is_valid_ufid(std::string_view ufid);

/// Throws Error unless `ufid` is a valid unique file identifier.
void require_valid_ufid(std::string_view ufid);

/// Covariates (the x.csv role): one row per sample, one column per feature.
class CovariateTable {
 public:
  CovariateTable() = default;
  CovariateTable(std::vector<std::string> sample_ids,
                 std::vector<std::string> feature_names, RowMatrix values);

  const std::vector<std::string>& sample_ids() const { return sample_ids_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const RowMatrix& values() const { return values_; }

  std::size_t rows() const { return sample_ids_.size(); }
  std::size_t columns() const { return feature_names_.size(); }

  /// Row index of `sample_id`, if present.
  std::optional<std::size_t> find(std::string_view sample_id) const;

  /// Gathers the rows for `sample_ids` in the given order.
  /// Throws Error when an id is not in the table.
  RowMatrix gather(std::span<const std::string> sample_ids) const;

  friend bool operator==(const CovariateTable& a, const CovariateTable& b) {
    return a.sample_ids_ == b.sample_ids_ &&
           a.feature_names_ == b.feature_names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> sample_ids_;
  std::vector<std::string> feature_names_;
  RowMatrix values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Observed outcome, or std::nullopt when the outcome is censored.
using ObservedOutcome = std::optional<double>;

struct ObservationRecord {
  std::string sample_id;
  int z = 0;
  ObservedOutcome y;

  bool censored() const { return !y.has_value(); }
  friend bool operator==(const ObservationRecord&,
                         const ObservationRecord&) = default;
};

struct CounterfactualRecord {
  std::string sample_id;
  double y0 = 0.0;
  double y1 = 0.0;

  friend bool operator==(const CounterfactualRecord&,
                         const CounterfactualRecord&) = default;
};

/// One observation file plus its label file.
struct InstancePair {
  std::string ufid;
  std::vector<ObservationRecord> observations;
  std::vector<CounterfactualRecord> labels;

  std::size_t n() const { return observations.size(); }

  /// Throws Error if the ufid is malformed or the two files do not cover
  /// the same set of sample ids.
  void validate() const;

  friend bool operator==(const InstancePair&, const InstancePair&) = default;
};

struct PopulationPrediction {
  std::string ufid;
  double effect_size = 0.0;
  double li = 0.0;
  double ri = 0.0;

  friend bool operator==(const PopulationPrediction&,
                         const PopulationPrediction&) = default;
};

struct IndividualPrediction {
  std::string sample_id;
  double y0_hat = 0.0;
  double y1_hat = 0.0;

  friend bool operator==(const IndividualPrediction&,
                         const IndividualPrediction&) = default;
};

struct IndividualPredictionSet {
  std::string ufid;
  std::vector<IndividualPrediction> rows;

  friend bool operator==(const IndividualPredictionSet&,
                         const IndividualPredictionSet&) = default;
};

/// Scores for one dataset size n. CI metrics are empty on the individual
/// track.
struct MetricsPerSize {
  std::size_t n = 0;
  std::size_t instance_count = 0;
  std::optional<double> enormse;
  std::optional<double> rmse;
  std::optional<double> bias;
  std::optional<double> coverage;
  std::optional<double> cic;
  std::optional<double> encis;
};

struct AggregateMetrics {
  std::optional<double> enormse;
  std::optional<double> rmse;
  std::optional<double> bias;
  std::optional<double> coverage;
  std::optional<double> cic;
  std::optional<double> encis;
};

struct AggregateReport {
  std::vector<MetricsPerSize> per_size;  // ascending n
  AggregateMetrics aggregate;
  std::vector<std::string> missing_ufids;  // labels with no prediction
  std::vector<std::string> warnings;
};

/// Mean over individuals of y1 - y0. Throws Error("empty instance").
double true_population_effect(std::span<const CounterfactualRecord> labels);

/// Element-wise y1 - y0, order preserved. Throws Error("empty instance").
std::vector<double> true_individual_effects(
    std::span<const CounterfactualRecord> labels);

}  // namespace cibench
