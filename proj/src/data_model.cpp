#include "cibench/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace cibench {

bool is_valid_ufid(std::string_view ufid) {
  return ufid.size() == 7 &&
         std::all_of(ufid.begin(), ufid.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

void require_valid_ufid(std::string_view ufid) {
  if (!is_valid_ufid(ufid)) {
    throw Error("invalid ufid '" + std::string(ufid) +
                "': expected 7 lowercase hexadecimal characters");
  }
}

CovariateTable::CovariateTable(std::vector<std::string> sample_ids,
                               std::vector<std::string> feature_names,
                               RowMatrix values)
    : sample_ids_(std::move(sample_ids)),
      feature_names_(std::move(feature_names)),
      values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.rows()) != sample_ids_.size() ||
      static_cast<std::size_t>(values_.cols()) != feature_names_.size()) {
    throw Error("covariate table shape does not match its ids and names");
  }
  if (!values_.allFinite()) {
    throw Error("covariate table contains non-finite values");
  }
  index_.reserve(sample_ids_.size());
  for (std::size_t i = 0; i < sample_ids_.size(); ++i) {
    if (!index_.emplace(sample_ids_[i], i).second) {
      throw Error("duplicate sample_id '" + sample_ids_[i] + "'");
    }
  }
}

std::optional<std::size_t> CovariateTable::find(
    std::string_view sample_id) const {
  auto it = index_.find(std::string(sample_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

RowMatrix CovariateTable::gather(
    std::span<const std::string> sample_ids) const {
  RowMatrix out(static_cast<Eigen::Index>(sample_ids.size()), values_.cols());
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    auto row = find(sample_ids[i]);
    if (!row) {
      throw Error("sample_id '" + sample_ids[i] +
                  "' not found in covariate table");
    }
    out.row(static_cast<Eigen::Index>(i)) =
        values_.row(static_cast<Eigen::Index>(*row));
  }
  return out;
}

void InstancePair::validate() const {
  require_valid_ufid(ufid);
  if (observations.size() != labels.size()) {
    throw Error("instance " + ufid + ": observation and label files differ "
                "in sample count");
  }
  std::unordered_set<std::string_view> ids;
  ids.reserve(observations.size());
  for (const auto& o : observations) {
    if (o.z != 0 && o.z != 1) {
      throw Error("instance " + ufid + ": treatment must be 0 or 1");
    }
    if (!ids.insert(o.sample_id).second) {
      throw Error("instance " + ufid + ": duplicate sample_id '" +
                  o.sample_id + "'");
    }
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(labels.size());
  for (const auto& l : labels) {
    if (!ids.contains(l.sample_id)) {
      throw Error("instance " + ufid + ": label sample_id '" + l.sample_id +
                  "' has no observation");
    }
    if (!seen.insert(l.sample_id).second) {
      throw Error("instance " + ufid + ": duplicate label sample_id '" +
                  l.sample_id + "'");
    }
  }
}

double true_population_effect(std::span<const CounterfactualRecord> labels) {
  if (labels.empty()) throw Error("empty instance");
  double sum = 0.0;
  for (const auto& l : labels) sum += l.y1 - l.y0;
  return sum / static_cast<double>(labels.size());
}

std::vector<double> true_individual_effects(
    std::span<const CounterfactualRecord> labels) {
  if (labels.empty()) throw Error("empty instance");
  std::vector<double> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.y1 - l.y0);
  return out;
}

}  // namespace cibench
