#pragma once

// Scoring of whole submissions: predictions are joined with label files,
// grouped into D_n by the manifest's nominal size, scored per size and
// aggregated.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cibench/data_model.hpp"
#include "cibench/io.hpp"

namespace cibench {

/// Ground truth for one instance.
struct LabeledInstance {
  std::string ufid;
  std::size_t size = 0;  // nominal n from the manifest
  std::vector<CounterfactualRecord> labels;
};

struct ScoringOptions {
  /// Restrict the manifest to one track; nullopt keeps every row.
  std::optional<Track> track;
  /// Worker threads; 0 means all available cores.
  unsigned jobs = 0;
};

/// Scores population predictions against in-memory labels. Every prediction
/// must match a labeled instance; labeled instances without a prediction are
/// listed in `missing_ufids` and excluded.
AggregateReport score_population(std::span<const PopulationPrediction> predictions,
                                 std::span<const LabeledInstance> instances,
                                 unsigned jobs = 0);

/// Individual-effect ENoRMSE per size. Predictions are joined to labels by
/// sample_id; any missing or extra id is an error.
AggregateReport score_individual(
    std::span<const IndividualPredictionSet> predictions,
    std::span<const LabeledInstance> instances, unsigned jobs = 0);

/// File-backed population track scoring; labels are read from
/// `<label_dir>/<ufid>_cf.csv` for every predicted ufid.
AggregateReport score_population_track(
    std::span<const PopulationPrediction> predictions,
    const fs::path& label_dir, std::span<const ManifestRow> manifest,
    const ScoringOptions& options = {});

AggregateReport score_individual_track(const fs::path& prediction_dir,
                                       const fs::path& label_dir,
                                       std::span<const ManifestRow> manifest,
                                       const ScoringOptions& options = {});

}  // namespace cibench
