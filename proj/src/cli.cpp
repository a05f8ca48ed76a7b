#include "cibench/cli.hpp"

#include <charconv>
#include <mutex>
#include <ostream>

#include "cibench/dgp.hpp"
#include "cibench/estimators.hpp"
#include "cibench/parallel.hpp"
#include "cibench/track_scoring.hpp"

namespace cibench::cli {

namespace {

std::pair<std::size_t, std::size_t> parse_shape(const std::string& text) {
  const auto comma = text.find(',');
  auto parse = [&](std::string_view part) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || v == 0) {
      throw Error("--synthetic-covariates expects 'n,p' with positive "
                  "integers, got '" + text + "'");
    }
    return v;
  };
  if (comma == std::string::npos) parse("");
  const std::string_view s = text;
  return {parse(s.substr(0, comma)), parse(s.substr(comma + 1))};
}

// Stable per-instance seed stream from the ufid's hex value.
std::uint64_t ufid_stream(const std::string& ufid) {
  return std::stoull(ufid, nullptr, 16);
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "diff_means") return Method::diff_means;
  if (name == "ipw") return Method::ipw;
  if (name == "regression") return Method::regression;
  throw Error("unknown method '" + std::string(name) +
              "' (expected diff_means, ipw or regression)");
}

int cmd_generate(const GenerateArgs& args, std::ostream& out,
                 std::ostream& err) {
  try {
    if (args.covariates_path.has_value() ==
        args.synthetic_covariates.has_value()) {
      throw Error("give exactly one of --covariates or --synthetic-covariates");
    }
    const auto configs = read_dgp_configs(args.config_path);
    CovariateTable covariates;
    if (args.covariates_path) {
      covariates = read_covariates(*args.covariates_path);
    } else {
      const auto [rows, columns] = parse_shape(*args.synthetic_covariates);
      SyntheticCovariateOptions options;
      options.rows = rows;
      options.columns = columns;
      options.seed = args.synthetic_seed;
      covariates = generate_synthetic_covariates(options);
    }
    const TrackOptions options{args.jobs};
    const auto manifest =
        args.track == Track::scaling
            ? generate_scaling_track(configs, covariates, args.out_dir, options)
            : generate_censoring_track(configs, covariates, args.out_dir,
                                       options);
    out << "wrote " << manifest.size() << " instance pairs to "
        << track_directory(args.out_dir, args.track).string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_estimate(const EstimateArgs& args, std::ostream& out,
                 std::ostream& err) {
  try {
    const auto ufids = list_observation_ufids(args.data_dir);
    if (ufids.empty()) {
      throw Error("no observation files found in '" + args.data_dir.string() +
                  "'");
    }
    std::optional<CovariateTable> covariates;
    if (args.method != Method::diff_means) {
      covariates = read_covariates(args.data_dir / std::string(kCovariateFileName));
    }

    std::vector<std::optional<PopulationPrediction>> population(ufids.size());
    std::vector<std::optional<IndividualPredictionSet>> individual(ufids.size());
    std::vector<std::string> failures(ufids.size());
    parallel_for(ufids.size(), args.jobs, [&](std::size_t i) {
      const std::string& ufid = ufids[i];
      try {
        const auto records =
            read_observation_file(observation_path(args.data_dir, ufid)).second;
        switch (args.method) {
          case Method::diff_means:
            population[i] = diff_means(ufid, records);
            break;
          case Method::ipw: {
            IpwOptions options;
            options.bootstrap_reps = args.bootstrap_reps;
            options.seed = derive_seed(args.seed, {ufid_stream(ufid)});
            options.jobs = 1;
            population[i] = ipw_ate(ufid, records, *covariates, options);
            break;
          }
          case Method::regression:
            individual[i] = regression_impute(ufid, records, *covariates);
            break;
        }
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    });

    std::size_t succeeded = 0;
    for (std::size_t i = 0; i < ufids.size(); ++i) {
      if (!failures[i].empty()) {
        err << "warning: " << ufids[i] << ": " << failures[i] << " (skipped)\n";
      } else {
        ++succeeded;
      }
    }
    if (succeeded == 0) throw Error("no instance could be estimated");

    if (args.method == Method::regression) {
      fs::create_directories(args.out_path);
      for (const auto& set : individual) {
        if (set) write_individual_predictions(*set, args.out_path);
      }
    } else {
      std::vector<PopulationPrediction> rows;
      for (const auto& p : population) {
        if (p) rows.push_back(*p);
      }
      write_population_predictions(rows, args.out_path);
    }
    out << "estimated " << succeeded << " of " << ufids.size()
        << " instances -> " << args.out_path.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const fs::path manifest_path =
        args.manifest.value_or(args.label_dir / std::string(kManifestFileName));
    const auto manifest = read_manifest(manifest_path);
    ScoringOptions options;
    options.track = args.track;
    options.jobs = args.jobs;

    AggregateReport report;
    if (args.individual) {
      report = score_individual_track(args.predictions, args.label_dir,
                                      manifest, options);
    } else {
      const auto predictions = read_population_predictions(args.predictions);
      report = score_population_track(predictions, args.label_dir, manifest,
                                      options);
    }
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    write_report(report, args.out_report);
    out << kReportHeader << '\n' << format_aggregate_row(report) << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cibench::cli
