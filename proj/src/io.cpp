#include "cibench/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "cibench/text_format.hpp"

namespace cibench {

namespace {

// Lines of a CSV file with the header checked and line numbers tracked.
class CsvFile {
 public:
  explicit CsvFile(const fs::path& path) : path_(path), lines_(read_lines(path)) {
    if (lines_.empty()) throw ParseError(located(path_, 1, "missing header"));
  }

  const std::string& header() const { return lines_.front(); }

  void expect_header(std::string_view expected) const {
    if (header() != expected) {
      throw ParseError(located(path_, 1, "expected header '" +
                                             std::string(expected) +
                                             "', found '" + header() + "'"));
    }
  }

  // Calls fn(cells, line_number) for every body line.
  template <typename Fn>
  void for_each_row(std::size_t columns, Fn&& fn) const {
    for (std::size_t i = 1; i < lines_.size(); ++i) {
      const std::size_t line_no = i + 1;
      auto cells = split_csv_line(lines_[i]);
      if (cells.size() != columns) {
        fail(line_no, "expected " + std::to_string(columns) +
                          " fields, found " + std::to_string(cells.size()));
      }
      fn(cells, line_no);
    }
  }

  std::size_t body_rows() const { return lines_.size() - 1; }

  [[noreturn]] void fail(std::size_t line, const std::string& message) const {
    throw ParseError(located(path_, line, message));
  }

  double number(std::string_view cell, std::size_t line,
                std::string_view column) const {
    auto v = parse_number(cell);
    if (!v) {
      fail(line, "non-numeric " + std::string(column) + " value '" +
                     std::string(cell) + "'");
    }
    return *v;
  }

  double finite(std::string_view cell, std::size_t line,
                std::string_view column) const {
    double v = number(cell, line, column);
    if (!std::isfinite(v)) {
      fail(line, "non-finite " + std::string(column) + " value '" +
                     std::string(cell) + "'");
    }
    return v;
  }

  std::string id(std::string_view cell, std::size_t line) const {
    if (cell.empty()) fail(line, "empty identifier");
    return std::string(cell);
  }

 private:
  fs::path path_;
  std::vector<std::string> lines_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ufid from "<ufid><suffix>", or a parse error.
std::string ufid_from_name(const fs::path& path, std::string_view suffix) {
  const std::string name = path.filename().string();
  if (name.size() <= suffix.size() ||
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw ParseError(path.string() + ": file name must end with '" +
                     std::string(suffix) + "'");
  }
  std::string ufid = name.substr(0, name.size() - suffix.size());
  if (!is_valid_ufid(ufid)) {
    throw ParseError(path.string() + ": '" + ufid +
                     "' is not a valid ufid (7 lowercase hex characters)");
  }
  return ufid;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_number(*v, 10) : std::string();
}

std::string report_row(std::string_view group, std::size_t instances,
                       const std::optional<double>& enormse,
                       const std::optional<double>& rmse,
                       const std::optional<double>& bias,
                       const std::optional<double>& coverage,
                       const std::optional<double>& cic,
                       const std::optional<double>& encis) {
  std::string row(group);
  row += ',' + std::to_string(instances);
  for (const auto* v : {&enormse, &rmse, &bias, &coverage, &cic, &encis}) {
    row += ',' + optional_cell(*v);
  }
  return row;
}

}  // namespace

std::string_view to_string(Track track) {
  return track == Track::scaling ? "scaling" : "censoring";
}

Track parse_track(std::string_view name) {
  if (name == "scaling") return Track::scaling;
  if (name == "censoring") return Track::censoring;
  throw Error("unknown track '" + std::string(name) +
              "' (expected scaling or censoring)");
}

void write_text(const fs::path& path, std::string_view text,
                ExistingFile policy) {
  if (policy != ExistingFile::overwrite && fs::exists(path)) {
    if (policy == ExistingFile::accept_identical && read_file(path) == text) {
      return;
    }
    throw Error("'" + path.string() + "' already exists" +
                (policy == ExistingFile::accept_identical
                     ? " with different content"
                     : ""));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

fs::path track_directory(const fs::path& root, Track track) {
  return root / std::string(to_string(track));
}

fs::path observation_path(const fs::path& dir, std::string_view ufid) {
  return dir / (std::string(ufid) + ".csv");
}

fs::path label_path(const fs::path& dir, std::string_view ufid) {
  return dir / (std::string(ufid) + std::string(kLabelSuffix));
}

// Covariates ---------------------------------------------------------------

CovariateTable read_covariates(const fs::path& path) {
  CsvFile file(path);
  auto header = split_csv_line(file.header());
  if (header.front() != "sample_id") {
    file.fail(1, "first column must be 'sample_id'");
  }
  std::vector<std::string> names;
  std::set<std::string_view> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) file.fail(1, "empty feature name");
    if (!seen.insert(header[c]).second) {
      file.fail(1, "duplicate feature name '" + std::string(header[c]) + "'");
    }
    names.emplace_back(header[c]);
  }

  const std::size_t columns = header.size();
  std::vector<std::string> ids;
  ids.reserve(file.body_rows());
  RowMatrix values(static_cast<Eigen::Index>(file.body_rows()),
                   static_cast<Eigen::Index>(names.size()));
  std::unordered_set<std::string> unique;
  unique.reserve(file.body_rows());
  Eigen::Index r = 0;
  file.for_each_row(columns, [&](const auto& cells, std::size_t line) {
    std::string id = file.id(cells[0], line);
    if (!unique.insert(id).second) {
      file.fail(line, "duplicate sample_id '" + id + "'");
    }
    for (std::size_t c = 1; c < columns; ++c) {
      values(r, static_cast<Eigen::Index>(c - 1)) =
          file.finite(cells[c], line, names[c - 1]);
    }
    ids.push_back(std::move(id));
    ++r;
  });
  return CovariateTable(std::move(ids), std::move(names), std::move(values));
}

std::string render_covariates(const CovariateTable& table) {
  std::string out = "sample_id";
  for (const auto& name : table.feature_names()) out += ',' + name;
  out += '\n';
  const auto& values = table.values();
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out += table.sample_ids()[i];
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out += ',';
      out += format_number(values(static_cast<Eigen::Index>(i), c));
    }
    out += '\n';
  }
  return out;
}

void write_covariates(const CovariateTable& table, const fs::path& path) {
  write_text(path, render_covariates(table));
}

// Observation and label files ------------------------------------------------

std::pair<std::string, std::vector<ObservationRecord>> read_observation_file(
    const fs::path& path) {
  std::string ufid = ufid_from_name(path, ".csv");
  CsvFile file(path);
  file.expect_header(kObservationHeader);
  if (file.body_rows() == 0) file.fail(2, "empty instance");

  std::vector<ObservationRecord> records;
  records.reserve(file.body_rows());
  std::unordered_set<std::string> unique;
  unique.reserve(file.body_rows());
  file.for_each_row(3, [&](const auto& cells, std::size_t line) {
    ObservationRecord rec;
    rec.sample_id = file.id(cells[0], line);
    if (!unique.insert(rec.sample_id).second) {
      file.fail(line, "duplicate sample_id '" + rec.sample_id + "'");
    }
    if (cells[1] == "0") {
      rec.z = 0;
    } else if (cells[1] == "1") {
      rec.z = 1;
    } else {
      file.fail(line, "treatment z must be 0 or 1, found '" +
                          std::string(cells[1]) + "'");
    }
    if (cells[2] != kCensoredCell) rec.y = file.finite(cells[2], line, "y");
    records.push_back(std::move(rec));
  });
  return {std::move(ufid), std::move(records)};
}

std::pair<std::string, std::vector<CounterfactualRecord>> read_label_file(
    const fs::path& path) {
  std::string ufid = ufid_from_name(path, kLabelSuffix);
  CsvFile file(path);
  file.expect_header(kLabelHeader);
  if (file.body_rows() == 0) file.fail(2, "empty instance");

  std::vector<CounterfactualRecord> records;
  records.reserve(file.body_rows());
  std::unordered_set<std::string> unique;
  unique.reserve(file.body_rows());
  file.for_each_row(3, [&](const auto& cells, std::size_t line) {
    CounterfactualRecord rec;
    rec.sample_id = file.id(cells[0], line);
    if (!unique.insert(rec.sample_id).second) {
      file.fail(line, "duplicate sample_id '" + rec.sample_id + "'");
    }
    if (cells[1] == kCensoredCell || cells[2] == kCensoredCell) {
      file.fail(line, "label files cannot contain censored (NA) values");
    }
    rec.y0 = file.finite(cells[1], line, "y0");
    rec.y1 = file.finite(cells[2], line, "y1");
    records.push_back(std::move(rec));
  });
  return {std::move(ufid), std::move(records)};
}

std::string render_observation_file(
    std::span<const ObservationRecord> records) {
  std::string out(kObservationHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.sample_id;
    out += r.z ? ",1," : ",0,";
    out += r.y ? format_number(*r.y) : std::string(kCensoredCell);
    out += '\n';
  }
  return out;
}

std::string render_label_file(std::span<const CounterfactualRecord> records) {
  std::string out(kLabelHeader);
  out += '\n';
  for (const auto& r : records) {
    out += r.sample_id + ',' + format_number(r.y0) + ',' +
           format_number(r.y1) + '\n';
  }
  return out;
}

void write_observation_file(std::span<const ObservationRecord> records,
                            const fs::path& path) {
  write_text(path, render_observation_file(records));
}

void write_label_file(std::span<const CounterfactualRecord> records,
                      const fs::path& path) {
  write_text(path, render_label_file(records));
}

InstancePaths write_instance_pair(const InstancePair& pair,
                                  const fs::path& dir, ExistingFile policy) {
  pair.validate();
  if (!fs::is_directory(dir)) {
    throw Error("output directory '" + dir.string() + "' does not exist");
  }
  InstancePaths paths{observation_path(dir, pair.ufid),
                      label_path(dir, pair.ufid)};
  if (policy == ExistingFile::fail) {
    for (const auto& p : {paths.observations, paths.labels}) {
      if (fs::exists(p)) {
        throw Error("ufid collision: '" + p.string() + "' already exists");
      }
    }
  }
  write_text(paths.observations, render_observation_file(pair.observations),
             policy);
  write_text(paths.labels, render_label_file(pair.labels), policy);
  return paths;
}

InstancePair read_instance_pair(const fs::path& dir, std::string_view ufid) {
  InstancePair pair;
  auto [obs_ufid, observations] =
      read_observation_file(observation_path(dir, ufid));
  auto [label_ufid, labels] = read_label_file(label_path(dir, ufid));
  pair.ufid = std::move(obs_ufid);
  pair.observations = std::move(observations);
  pair.labels = std::move(labels);
  pair.validate();
  return pair;
}

std::vector<std::string> list_observation_ufids(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error("'" + dir.string() + "' is not a directory");
  }
  std::vector<std::string> ufids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto path = entry.path();
    if (path.extension() != ".csv") continue;
    std::string stem = path.stem().string();
    if (is_valid_ufid(stem)) ufids.push_back(std::move(stem));
  }
  std::sort(ufids.begin(), ufids.end());
  return ufids;
}

// Predictions ----------------------------------------------------------------

std::vector<PopulationPrediction> read_population_predictions(
    const fs::path& path) {
  CsvFile file(path);
  file.expect_header(kPopulationHeader);
  std::vector<PopulationPrediction> out;
  out.reserve(file.body_rows());
  std::unordered_set<std::string> unique;
  file.for_each_row(4, [&](const auto& cells, std::size_t line) {
    PopulationPrediction p;
    p.ufid = file.id(cells[0], line);
    if (!is_valid_ufid(p.ufid)) {
      file.fail(line, "invalid ufid '" + p.ufid + "'");
    }
    if (!unique.insert(p.ufid).second) {
      file.fail(line, "duplicate ufid '" + p.ufid + "'");
    }
    p.effect_size = file.finite(cells[1], line, "effect_size");
    p.li = file.number(cells[2], line, "li");
    p.ri = file.number(cells[3], line, "ri");
    if (p.li == std::numeric_limits<double>::infinity()) {
      file.fail(line, "li cannot be +inf");
    }
    if (p.ri == -std::numeric_limits<double>::infinity()) {
      file.fail(line, "ri cannot be -inf");
    }
    if (p.li > p.ri) file.fail(line, "li > ri for ufid '" + p.ufid + "'");
    out.push_back(std::move(p));
  });
  return out;
}

std::string render_population_predictions(
    std::span<const PopulationPrediction> predictions) {
  std::string out(kPopulationHeader);
  out += '\n';
  for (const auto& p : predictions) {
    out += p.ufid + ',' + format_number(p.effect_size) + ',' +
           format_number(p.li) + ',' + format_number(p.ri) + '\n';
  }
  return out;
}

void write_population_predictions(
    std::span<const PopulationPrediction> predictions, const fs::path& path) {
  write_text(path, render_population_predictions(predictions));
}

IndividualPredictionSet read_individual_prediction_file(const fs::path& path) {
  IndividualPredictionSet set;
  set.ufid = ufid_from_name(path, ".csv");
  CsvFile file(path);
  file.expect_header(kIndividualHeader);
  set.rows.reserve(file.body_rows());
  std::unordered_set<std::string> unique;
  unique.reserve(file.body_rows());
  file.for_each_row(3, [&](const auto& cells, std::size_t line) {
    IndividualPrediction row;
    row.sample_id = file.id(cells[0], line);
    if (!unique.insert(row.sample_id).second) {
      file.fail(line, "duplicate sample_id '" + row.sample_id + "'");
    }
    row.y0_hat = file.finite(cells[1], line, "y0");
    row.y1_hat = file.finite(cells[2], line, "y1");
    set.rows.push_back(std::move(row));
  });
  return set;
}

std::vector<IndividualPredictionSet> read_individual_predictions(
    const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error("'" + dir.string() + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<IndividualPredictionSet> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_individual_prediction_file(f));
  return out;
}

std::string render_individual_predictions(const IndividualPredictionSet& set) {
  std::string out(kIndividualHeader);
  out += '\n';
  for (const auto& r : set.rows) {
    out += r.sample_id + ',' + format_number(r.y0_hat) + ',' +
           format_number(r.y1_hat) + '\n';
  }
  return out;
}

fs::path write_individual_predictions(const IndividualPredictionSet& set,
                                      const fs::path& dir) {
  require_valid_ufid(set.ufid);
  const fs::path path = observation_path(dir, set.ufid);
  write_text(path, render_individual_predictions(set));
  return path;
}

// Manifest -------------------------------------------------------------------

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  CsvFile file(path);
  file.expect_header(kManifestHeader);
  std::vector<ManifestRow> rows;
  std::unordered_set<std::string> unique;
  auto count = [&](std::string_view cell, std::size_t line,
                   std::string_view column) {
    double v = file.finite(cell, line, column);
    if (v < 0 || v != std::floor(v)) {
      file.fail(line, std::string(column) + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  };
  file.for_each_row(9, [&](const auto& cells, std::size_t line) {
    ManifestRow row;
    row.ufid = file.id(cells[0], line);
    if (!is_valid_ufid(row.ufid)) file.fail(line, "invalid ufid");
    if (!unique.insert(row.ufid).second) {
      file.fail(line, "duplicate ufid '" + row.ufid + "'");
    }
    try {
      row.track = parse_track(cells[1]);
    } catch (const Error& e) {
      file.fail(line, e.what());
    }
    row.size = count(cells[2], line, "size");
    if (row.size == 0) file.fail(line, "size must be positive");
    row.n_covariates = count(cells[3], line, "n_covariates");
    row.n_confounders = count(cells[4], line, "n_confounders");
    row.poly_degree = static_cast<int>(count(cells[5], line, "poly_degree"));
    if (cells[6] == "1") {
      row.use_exp = true;
    } else if (cells[6] == "0") {
      row.use_exp = false;
    } else {
      file.fail(line, "use_exp must be 0 or 1");
    }
    row.prevalence = file.finite(cells[7], line, "prevalence");
    row.censoring_rate = file.finite(cells[8], line, "censoring_rate");
    rows.push_back(std::move(row));
  });
  return rows;
}

std::string render_manifest(std::span<const ManifestRow> rows) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.ufid + ',' + std::string(to_string(r.track)) + ',' +
           std::to_string(r.size) + ',' + std::to_string(r.n_covariates) + ',' +
           std::to_string(r.n_confounders) + ',' +
           std::to_string(r.poly_degree) + ',' + (r.use_exp ? "1" : "0") +
           ',' + format_number(r.prevalence) + ',' +
           format_number(r.censoring_rate) + '\n';
  }
  return out;
}

void write_manifest(std::span<const ManifestRow> rows, const fs::path& path,
                    ExistingFile policy) {
  write_text(path, render_manifest(rows), policy);
}

// Report ---------------------------------------------------------------------

std::string format_aggregate_row(const AggregateReport& report) {
  std::size_t total = 0;
  for (const auto& s : report.per_size) total += s.instance_count;
  const auto& a = report.aggregate;
  return report_row("aggregate", total, a.enormse, a.rmse, a.bias, a.coverage,
                    a.cic, a.encis);
}

std::string format_report(const AggregateReport& report) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& s : report.per_size) {
    out << report_row(std::to_string(s.n), s.instance_count, s.enormse, s.rmse,
                      s.bias, s.coverage, s.cic, s.encis)
        << '\n';
  }
  out << format_aggregate_row(report) << '\n';
  return out.str();
}

void write_report(const AggregateReport& report, const fs::path& path) {
  write_text(path, format_report(report));
}

}  // namespace cibench
