#pragma once

// Reading and writing of the benchmark's CSV interchange formats.
//
//   x.csv              sample_id,<feature>...
//   <ufid>.csv         sample_id,z,y        (y may be NA when censored)
//   <ufid>_cf.csv      sample_id,y0,y1
//   predictions        ufid,effect_size,li,ri
//   <dir>/<ufid>.csv   sample_id,y0,y1      (individual predictions)
//   manifest.csv       ufid,track,size,n_covariates,n_confounders,
//                      poly_degree,use_exp,prevalence,censoring_rate
//
// Numbers are written with at most 6 significant digits and LF line endings;
// CRLF is accepted on read.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cibench/data_model.hpp"

namespace cibench {

namespace fs = std::filesystem;

inline constexpr std::string_view kObservationHeader = "sample_id,z,y";
inline constexpr std::string_view kLabelHeader = "sample_id,y0,y1";
inline constexpr std::string_view kPopulationHeader = "ufid,effect_size,li,ri";
inline constexpr std::string_view kIndividualHeader = "sample_id,y0,y1";
inline constexpr std::string_view kManifestHeader =
    "ufid,track,size,n_covariates,n_confounders,poly_degree,use_exp,"
    "prevalence,censoring_rate";
inline constexpr std::string_view kReportHeader =
    "group,instances,enormse,rmse,bias,coverage,cic,encis";
inline constexpr std::string_view kCensoredCell = "NA";
inline constexpr std::string_view kCovariateFileName = "x.csv";
inline constexpr std::string_view kManifestFileName = "manifest.csv";
inline constexpr std::string_view kLabelSuffix = "_cf.csv";

enum class Track { scaling, censoring };

/// What a writer does when its target file already exists.
enum class ExistingFile {
  fail,              // error
  overwrite,         // replace
  accept_identical,  // keep if byte-identical, error otherwise
};

/// Writes `text` to `path` under the given policy.
void write_text(const fs::path& path, std::string_view text,
                ExistingFile policy = ExistingFile::overwrite);

std::string_view to_string(Track track);
Track parse_track(std::string_view name);

/// `<root>/scaling` or `<root>/censoring`.
fs::path track_directory(const fs::path& root, Track track);

fs::path observation_path(const fs::path& dir, std::string_view ufid);
fs::path label_path(const fs::path& dir, std::string_view ufid);

// Covariates ---------------------------------------------------------------

CovariateTable read_covariates(const fs::path& path);
std::string render_covariates(const CovariateTable& table);
void write_covariates(const CovariateTable& table, const fs::path& path);

// Observation and label files ------------------------------------------------

/// Returns the ufid taken from the file name together with the records.
std::pair<std::string, std::vector<ObservationRecord>> read_observation_file(
    const fs::path& path);
std::pair<std::string, std::vector<CounterfactualRecord>> read_label_file(
    const fs::path& path);

std::string render_observation_file(std::span<const ObservationRecord> records);
std::string render_label_file(std::span<const CounterfactualRecord> records);
void write_observation_file(std::span<const ObservationRecord> records,
                            const fs::path& path);
void write_label_file(std::span<const CounterfactualRecord> records,
                      const fs::path& path);

struct InstancePaths {
  fs::path observations;
  fs::path labels;
};

/// Writes `<ufid>.csv` and `<ufid>_cf.csv` into `dir`. By default an
/// existing file of either name is a ufid collision.
InstancePaths write_instance_pair(const InstancePair& pair, const fs::path& dir,
                                  ExistingFile policy = ExistingFile::fail);
InstancePair read_instance_pair(const fs::path& dir, std::string_view ufid);

/// Sorted ufids of every observation file (`<ufid>.csv`) in `dir`.
std::vector<std::string> list_observation_ufids(const fs::path& dir);

// Predictions ----------------------------------------------------------------

std::vector<PopulationPrediction> read_population_predictions(
    const fs::path& path);
std::string render_population_predictions(
    std::span<const PopulationPrediction> predictions);
void write_population_predictions(
    std::span<const PopulationPrediction> predictions, const fs::path& path);

/// One set per `<ufid>.csv` in `dir`, sorted by ufid.
std::vector<IndividualPredictionSet> read_individual_predictions(
    const fs::path& dir);
IndividualPredictionSet read_individual_prediction_file(const fs::path& path);
std::string render_individual_predictions(const IndividualPredictionSet& set);
fs::path write_individual_predictions(const IndividualPredictionSet& set,
                                      const fs::path& dir);

// Manifest -------------------------------------------------------------------

struct ManifestRow {
  std::string ufid;
  Track track = Track::scaling;
  std::size_t size = 0;
  std::size_t n_covariates = 0;
  std::size_t n_confounders = 0;
  int poly_degree = 1;
  bool use_exp = false;
  double prevalence = 0.0;
  double censoring_rate = 0.0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

std::vector<ManifestRow> read_manifest(const fs::path& path);
std::string render_manifest(std::span<const ManifestRow> rows);
void write_manifest(std::span<const ManifestRow> rows, const fs::path& path,
                    ExistingFile policy = ExistingFile::overwrite);

// Report ---------------------------------------------------------------------

/// Report CSV text: one row per size, then the `aggregate` row.
std::string format_report(const AggregateReport& report);
void write_report(const AggregateReport& report, const fs::path& path);
/// The `aggregate` line alone (no trailing newline).
std::string format_aggregate_row(const AggregateReport& report);

}  // namespace cibench
