#include "cibench/track_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cibench/parallel.hpp"
#include "cibench/scoring.hpp"

namespace cibench {

namespace {

struct InstanceKey {
  std::string ufid;
  std::size_t size = 0;
};

std::string sample_list(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 10;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kShown) out += ", ...";
  return out;
}

std::unordered_map<std::string_view, std::size_t> index_instances(
    std::span<const LabeledInstance> instances) {
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!index.emplace(instances[i].ufid, i).second) {
      throw Error("duplicate labeled instance '" + instances[i].ufid + "'");
    }
  }
  return index;
}

// Lists labeled instances that received no prediction, and warns for every
// submitted size that is only partially covered.
void note_missing(AggregateReport& report, std::span<const InstanceKey> all,
                  const std::set<std::string>& predicted) {
  std::map<std::size_t, std::size_t> missing_by_size;
  std::map<std::size_t, std::size_t> total_by_size;
  for (const auto& key : all) {
    ++total_by_size[key.size];
    if (!predicted.contains(key.ufid)) {
      report.missing_ufids.push_back(key.ufid);
      ++missing_by_size[key.size];
    }
  }
  std::sort(report.missing_ufids.begin(), report.missing_ufids.end());
  for (const auto& m : report.per_size) {
    auto it = missing_by_size.find(m.n);
    if (it != missing_by_size.end()) {
      report.warnings.push_back(
          "size " + std::to_string(m.n) + ": " + std::to_string(it->second) +
          " of " + std::to_string(total_by_size[m.n]) +
          " instances have no prediction and were excluded");
    }
  }
  std::size_t unsubmitted = 0;
  for (const auto& [size, missing] : missing_by_size) {
    bool submitted = std::any_of(report.per_size.begin(), report.per_size.end(),
                                 [&](const auto& m) { return m.n == size; });
    if (!submitted) unsubmitted += missing;
  }
  if (unsubmitted > 0) {
    report.warnings.push_back(std::to_string(unsubmitted) +
                              " instances belong to sizes with no "
                              "predictions; those sizes are not scored");
  }
}

std::vector<InstanceKey> keys_of(std::span<const LabeledInstance> instances) {
  std::vector<InstanceKey> keys;
  keys.reserve(instances.size());
  for (const auto& inst : instances) keys.push_back({inst.ufid, inst.size});
  return keys;
}

// Predictions paired with their instance, sorted by ufid.
template <typename Prediction>
std::vector<std::pair<const Prediction*, const LabeledInstance*>> match(
    std::span<const Prediction> predictions,
    std::span<const LabeledInstance> instances) {
  if (predictions.empty()) throw Error("nothing to score");
  auto index = index_instances(instances);
  std::vector<std::pair<const Prediction*, const LabeledInstance*>> matched;
  matched.reserve(predictions.size());
  std::unordered_set<std::string_view> seen;
  for (const auto& p : predictions) {
    if (!seen.insert(p.ufid).second) {
      throw Error("duplicate prediction for ufid '" + p.ufid + "'");
    }
    auto it = index.find(p.ufid);
    if (it == index.end()) {
      throw Error("prediction for unknown ufid '" + p.ufid +
                  "': no matching label file");
    }
    matched.emplace_back(&p, &instances[it->second]);
  }
  std::sort(matched.begin(), matched.end(), [](const auto& a, const auto& b) {
    return a.first->ufid < b.first->ufid;
  });
  return matched;
}

AggregateReport population_report(
    std::span<const PopulationPrediction> predictions,
    std::span<const LabeledInstance> instances,
    std::span<const InstanceKey> all, unsigned jobs) {
  auto matched = match(predictions, instances);

  std::vector<PopulationRow> rows(matched.size());
  parallel_for(matched.size(), jobs, [&](std::size_t i) {
    const auto& [pred, inst] = matched[i];
    if (pred->li > pred->ri) {
      throw Error("li > ri for ufid '" + pred->ufid + "'");
    }
    rows[i] = {true_population_effect(inst->labels), pred->effect_size,
               pred->li, pred->ri};
  });

  AggregateReport report;
  std::map<std::size_t, std::vector<PopulationRow>> by_size;
  std::set<std::string> predicted;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    const auto& [pred, inst] = matched[i];
    by_size[inst->size].push_back(rows[i]);
    predicted.insert(pred->ufid);
    if (pred->effect_size < pred->li || pred->effect_size > pred->ri) {
      report.warnings.push_back("ufid " + pred->ufid +
                                ": effect_size lies outside [li, ri]");
    }
  }
  for (const auto& [size, group] : by_size) {
    report.per_size.push_back(population_metrics(size, group));
  }
  report.aggregate = aggregate_metrics(report.per_size);
  note_missing(report, all, predicted);
  return report;
}

// Aligns predicted individual effects with label order; throws on any
// missing or extra sample_id.
std::vector<double> aligned_estimates(const IndividualPredictionSet& set,
                                      const LabeledInstance& inst) {
  std::unordered_map<std::string_view, const IndividualPrediction*> by_id;
  by_id.reserve(set.rows.size());
  for (const auto& row : set.rows) {
    if (!by_id.emplace(row.sample_id, &row).second) {
      throw Error("ufid " + set.ufid + ": duplicate sample_id '" +
                  row.sample_id + "' in predictions");
    }
  }
  std::vector<double> estimates;
  estimates.reserve(inst.labels.size());
  std::vector<std::string> missing;
  for (const auto& label : inst.labels) {
    auto it = by_id.find(label.sample_id);
    if (it == by_id.end()) {
      missing.push_back(label.sample_id);
      continue;
    }
    estimates.push_back(it->second->y1_hat - it->second->y0_hat);
  }
  std::vector<std::string> extra;
  if (set.rows.size() + missing.size() != inst.labels.size()) {
    std::unordered_set<std::string_view> labeled;
    labeled.reserve(inst.labels.size());
    for (const auto& l : inst.labels) labeled.insert(l.sample_id);
    for (const auto& row : set.rows) {
      if (!labeled.contains(row.sample_id)) extra.push_back(row.sample_id);
    }
  }
  if (!missing.empty() || !extra.empty()) {
    std::string message = "ufid " + set.ufid + ": sample_id mismatch with label file";
    if (!missing.empty()) {
      message += "; " + std::to_string(missing.size()) +
                 " missing from predictions (" + sample_list(missing) + ")";
    }
    if (!extra.empty()) {
      message += "; " + std::to_string(extra.size()) +
                 " not in label file (" + sample_list(extra) + ")";
    }
    throw Error(message);
  }
  return estimates;
}

AggregateReport individual_report(
    std::span<const IndividualPredictionSet> predictions,
    std::span<const LabeledInstance> instances,
    std::span<const InstanceKey> all, unsigned jobs) {
  auto matched = match(predictions, instances);

  std::vector<double> per_instance(matched.size());
  parallel_for(matched.size(), jobs, [&](std::size_t i) {
    const auto& [set, inst] = matched[i];
    auto estimates = aligned_estimates(*set, *inst);
    auto truth = true_individual_effects(inst->labels);
    per_instance[i] = mean_normalized_squared_error(truth, estimates);
  });

  // E_n = sqrt(mean over instances of the per-instance mean).
  std::map<std::size_t, std::pair<double, std::size_t>> by_size;
  std::set<std::string> predicted;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    auto& [sum, count] = by_size[matched[i].second->size];
    sum += per_instance[i];
    ++count;
    predicted.insert(matched[i].first->ufid);
  }

  AggregateReport report;
  for (const auto& [size, acc] : by_size) {
    MetricsPerSize m;
    m.n = size;
    m.instance_count = acc.second;
    m.enormse = std::sqrt(acc.first / static_cast<double>(acc.second));
    report.per_size.push_back(m);
  }
  report.aggregate = aggregate_metrics(report.per_size);
  note_missing(report, all, predicted);
  return report;
}

std::vector<ManifestRow> filter_manifest(std::span<const ManifestRow> manifest,
                                         const std::optional<Track>& track) {
  std::vector<ManifestRow> rows;
  for (const auto& row : manifest) {
    if (!track || row.track == *track) rows.push_back(row);
  }
  return rows;
}

// Loads labels for the predicted ufids only.
template <typename Prediction>
std::vector<LabeledInstance> load_predicted(
    std::span<const Prediction> predictions, const fs::path& label_dir,
    std::span<const ManifestRow> manifest, unsigned jobs,
    std::vector<std::string>& warnings) {
  std::unordered_map<std::string_view, std::size_t> size_of;
  for (const auto& row : manifest) size_of.emplace(row.ufid, row.size);

  std::vector<LabeledInstance> instances(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto it = size_of.find(predictions[i].ufid);
    if (it == size_of.end()) {
      throw Error("prediction for unknown ufid '" + predictions[i].ufid +
                  "': not listed in the manifest");
    }
    instances[i].ufid = predictions[i].ufid;
    instances[i].size = it->second;
  }
  parallel_for(instances.size(), jobs, [&](std::size_t i) {
    const fs::path path = label_path(label_dir, instances[i].ufid);
    if (!fs::exists(path)) {
      throw Error("prediction for unknown ufid '" + instances[i].ufid +
                  "': no label file '" + path.string() + "'");
    }
    instances[i].labels = read_label_file(path).second;
  });
  for (const auto& inst : instances) {
    if (inst.labels.size() != inst.size) {
      warnings.push_back("ufid " + inst.ufid + ": label file has " +
                         std::to_string(inst.labels.size()) +
                         " rows but the manifest lists size " +
                         std::to_string(inst.size));
    }
  }
  return instances;
}

std::vector<InstanceKey> keys_of(std::span<const ManifestRow> manifest) {
  std::vector<InstanceKey> keys;
  keys.reserve(manifest.size());
  for (const auto& row : manifest) keys.push_back({row.ufid, row.size});
  return keys;
}

void prepend(std::vector<std::string>& into, std::vector<std::string> first) {
  first.insert(first.end(), into.begin(), into.end());
  into = std::move(first);
}

}  // namespace

AggregateReport score_population(
    std::span<const PopulationPrediction> predictions,
    std::span<const LabeledInstance> instances, unsigned jobs) {
  auto keys = keys_of(instances);
  return population_report(predictions, instances, keys, jobs);
}

AggregateReport score_individual(
    std::span<const IndividualPredictionSet> predictions,
    std::span<const LabeledInstance> instances, unsigned jobs) {
  auto keys = keys_of(instances);
  return individual_report(predictions, instances, keys, jobs);
}

AggregateReport score_population_track(
    std::span<const PopulationPrediction> predictions,
    const fs::path& label_dir, std::span<const ManifestRow> manifest,
    const ScoringOptions& options) {
  if (predictions.empty()) throw Error("nothing to score");
  auto rows = filter_manifest(manifest, options.track);
  std::vector<std::string> warnings;
  auto instances = load_predicted(predictions, label_dir,
                                  std::span<const ManifestRow>(rows),
                                  options.jobs, warnings);
  auto keys = keys_of(std::span<const ManifestRow>(rows));
  auto report = population_report(predictions, instances, keys, options.jobs);
  prepend(report.warnings, std::move(warnings));
  return report;
}

AggregateReport score_individual_track(const fs::path& prediction_dir,
                                       const fs::path& label_dir,
                                       std::span<const ManifestRow> manifest,
                                       const ScoringOptions& options) {
  auto predictions = read_individual_predictions(prediction_dir);
  if (predictions.empty()) throw Error("nothing to score");
  auto rows = filter_manifest(manifest, options.track);
  std::vector<std::string> warnings;
  auto instances = load_predicted(
      std::span<const IndividualPredictionSet>(predictions), label_dir,
      std::span<const ManifestRow>(rows), options.jobs, warnings);
  auto keys = keys_of(std::span<const ManifestRow>(rows));
  auto report = individual_report(predictions, instances, keys, options.jobs);
  prepend(report.warnings, std::move(warnings));
  return report;
}

}  // namespace cibench
