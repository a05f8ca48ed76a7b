#pragma once

// Command implementations behind the `cibench` executable. Each returns the
// process exit code: 0 on success, 1 on a hard error. Warnings go to `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cibench/io.hpp"

namespace cibench::cli {

struct GenerateArgs {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> covariates_path;
  /// "n,p": generate an n x p synthetic covariate table instead.
  std::optional<std::string> synthetic_covariates;
  std::uint64_t synthetic_seed = 0;
  std::filesystem::path out_dir;
  Track track = Track::scaling;
  unsigned jobs = 0;
};

enum class Method { diff_means, ipw, regression };

Method parse_method(std::string_view name);

struct EstimateArgs {
  std::filesystem::path data_dir;
  Method method = Method::diff_means;
  /// Prediction CSV (diff_means, ipw) or output directory (regression).
  std::filesystem::path out_path;
  std::uint64_t seed = 0;
  int bootstrap_reps = 200;
  unsigned jobs = 0;
};

struct ScoreArgs {
  /// Population prediction CSV, or a directory of individual files.
  std::filesystem::path predictions;
  std::filesystem::path label_dir;
  /// Defaults to `<label_dir>/manifest.csv`.
  std::optional<std::filesystem::path> manifest;
  std::optional<Track> track;
  bool individual = false;
  std::filesystem::path out_report;
  unsigned jobs = 0;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);
int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err);

}  // namespace cibench::cli
