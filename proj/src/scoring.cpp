#include "cibench/scoring.hpp"

#include <cmath>
#include <functional>
#include <optional>

namespace cibench {

namespace {

void require_rows(std::size_t count, const char* metric) {
  if (count == 0) throw Error(std::string(metric) + ": no instances to score");
}

template <typename Fn>
double mean_of(std::span<const PopulationRow> rows, const char* metric,
               Fn&& term) {
  require_rows(rows.size(), metric);
  double sum = 0.0;
  for (const auto& row : rows) sum += term(row);
  return sum / static_cast<double>(rows.size());
}

double interval_width(const PopulationRow& row) { return row.ri - row.li; }

// Every per-size value equal: aggregation must reproduce it bit for bit.
bool all_equal(std::span<const SizeScore> per_size) {
  for (const auto& s : per_size) {
    if (!(s.value == per_size.front().value)) return false;
  }
  return true;
}

void require_weights(std::span<const SizeScore> per_size, const char* what) {
  if (per_size.empty()) throw Error(std::string(what) + ": no sizes given");
  for (const auto& s : per_size) {
    if (s.n == 0 || s.count == 0) {
      throw Error(std::string(what) + ": sizes and counts must be positive");
    }
  }
}

}  // namespace

double normalized_squared_error(double truth, double estimate) {
  const double r = 1.0 - (estimate + kDelta) / (truth + kDelta);
  return r * r;
}

double enormse_population(std::span<const PopulationRow> rows) {
  return std::sqrt(mean_of(rows, "enormse", [](const PopulationRow& r) {
    return normalized_squared_error(r.truth, r.estimate);
  }));
}

double mean_normalized_squared_error(std::span<const double> truth,
                                     std::span<const double> estimate) {
  if (truth.size() != estimate.size()) {
    throw Error("enormse: truth and estimate lengths differ");
  }
  require_rows(truth.size(), "enormse");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sum += normalized_squared_error(truth[i], estimate[i]);
  }
  return sum / static_cast<double>(truth.size());
}

double enormse_individual(std::span<const IndividualEffects> instances) {
  require_rows(instances.size(), "enormse");
  double sum = 0.0;
  for (const auto& inst : instances) {
    sum += mean_normalized_squared_error(inst.truth, inst.estimate);
  }
  return std::sqrt(sum / static_cast<double>(instances.size()));
}

double rmse_population(std::span<const PopulationRow> rows) {
  return std::sqrt(mean_of(rows, "rmse", [](const PopulationRow& r) {
    const double d = r.estimate - r.truth;
    return d * d;
  }));
}

double bias_population(std::span<const PopulationRow> rows) {
  return mean_of(rows, "bias", [](const PopulationRow& r) {
    return r.estimate - r.truth;
  });
}

double coverage(std::span<const PopulationRow> rows) {
  return mean_of(rows, "coverage", [](const PopulationRow& r) {
    return (r.li <= r.truth && r.truth <= r.ri) ? 1.0 : 0.0;
  });
}

double cic(std::span<const PopulationRow> rows) {
  // δ guards zero-width intervals; infinite intervals contribute 0.
  return mean_of(rows, "cic", [](const PopulationRow& r) {
    return std::abs(r.estimate - r.truth) / (interval_width(r) + kDelta);
  });
}

double encis(std::span<const PopulationRow> rows) {
  return mean_of(rows, "encis", [](const PopulationRow& r) {
    return (interval_width(r) + kDelta) / (std::abs(r.truth) + kDelta);
  });
}

double aggregate_quadratic(std::span<const SizeScore> per_size) {
  require_weights(per_size, "aggregate_quadratic");
  if (all_equal(per_size)) return std::abs(per_size.front().value);
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& s : per_size) {
    const double w = static_cast<double>(s.n) * static_cast<double>(s.count);
    weighted += w * s.value * s.value;
    total += w;
  }
  return std::sqrt(weighted / total);
}

double aggregate_linear(std::span<const SizeScore> per_size) {
  require_weights(per_size, "aggregate_linear");
  if (all_equal(per_size)) return per_size.front().value;
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& s : per_size) {
    const double w = static_cast<double>(s.n) * static_cast<double>(s.count);
    weighted += w * s.value;
    total += w;
  }
  return weighted / total;
}

MetricsPerSize population_metrics(std::size_t n,
                                  std::span<const PopulationRow> rows) {
  MetricsPerSize m;
  m.n = n;
  m.instance_count = rows.size();
  m.enormse = enormse_population(rows);
  m.rmse = rmse_population(rows);
  m.bias = bias_population(rows);
  m.coverage = coverage(rows);
  m.cic = cic(rows);
  m.encis = encis(rows);
  return m;
}

AggregateMetrics aggregate_metrics(std::span<const MetricsPerSize> per_size) {
  using Field = std::optional<double> MetricsPerSize::*;
  auto collect = [&](Field field) -> std::optional<std::vector<SizeScore>> {
    std::vector<SizeScore> scores;
    for (const auto& m : per_size) {
      if (!(m.*field)) return std::nullopt;
      scores.push_back({m.n, m.instance_count, *(m.*field)});
    }
    if (scores.empty()) return std::nullopt;
    return scores;
  };
  auto quadratic = [&](Field f) -> std::optional<double> {
    auto s = collect(f);
    if (!s) return std::nullopt;
    return aggregate_quadratic(*s);
  };
  auto linear = [&](Field f) -> std::optional<double> {
    auto s = collect(f);
    if (!s) return std::nullopt;
    return aggregate_linear(*s);
  };

  AggregateMetrics a;
  a.enormse = quadratic(&MetricsPerSize::enormse);
  a.rmse = quadratic(&MetricsPerSize::rmse);
  a.bias = linear(&MetricsPerSize::bias);
  a.coverage = linear(&MetricsPerSize::coverage);
  a.cic = linear(&MetricsPerSize::cic);
  a.encis = linear(&MetricsPerSize::encis);
  return a;
}

}  // namespace cibench
