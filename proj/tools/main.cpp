#include <iostream>

#include <CLI11.hpp>

#include "cibench/cli.hpp"

int main(int argc, char** argv) {
  using namespace cibench;
  CLI::App app{"Benchmark harness for causal effect estimators"};
  app.require_subcommand(1);

  cli::GenerateArgs gen;
  std::string gen_track = "scaling";
  auto* generate = app.add_subcommand("generate", "simulate a benchmark track");
  generate->add_option("config", gen.config_path, "DGP config file")
      ->required();
  generate->add_option("out_dir", gen.out_dir, "output root")->required();
  auto* cov = generate->add_option("--covariates", gen.covariates_path,
                                   "covariate table (x.csv layout)");
  auto* syn = generate->add_option("--synthetic-covariates",
                                   gen.synthetic_covariates,
                                   "generate an n,p synthetic table instead");
  cov->excludes(syn);
  generate->add_option("--synthetic-seed", gen.synthetic_seed,
                       "seed for synthetic covariates");
  generate->add_option("--track", gen_track, "scaling or censoring")
      ->check(CLI::IsMember({"scaling", "censoring"}));
  generate->add_option("-j,--jobs", gen.jobs, "worker threads (0: all cores)");

  cli::EstimateArgs est;
  std::string method = "diff_means";
  auto* estimate =
      app.add_subcommand("estimate", "run a baseline estimator on a track");
  estimate->add_option("data_dir", est.data_dir, "track directory")
      ->required();
  estimate->add_option("out", est.out_path,
                       "prediction CSV, or directory for regression")
      ->required();
  estimate->add_option("--method", method, "diff_means, ipw or regression")
      ->check(CLI::IsMember({"diff_means", "ipw", "regression"}));
  estimate->add_option("--seed", est.seed, "bootstrap seed");
  estimate->add_option("--bootstrap-reps", est.bootstrap_reps,
                       "IPW bootstrap replicates (0: no interval)");
  estimate->add_option("-j,--jobs", est.jobs, "worker threads (0: all cores)");

  cli::ScoreArgs sc;
  std::string score_track;
  auto* score = app.add_subcommand("score", "score predictions against labels");
  score->add_option("predictions", sc.predictions,
                    "population CSV, or directory with --individual")
      ->required();
  score->add_option("label_dir", sc.label_dir, "directory with *_cf.csv files")
      ->required();
  score->add_option("manifest", sc.manifest, "manifest.csv of the track")
      ->required();
  score->add_option("report", sc.out_report, "output report CSV")->required();
  score->add_option("--track", score_track, "restrict to one track")
      ->check(CLI::IsMember({"scaling", "censoring"}));
  score->add_flag("--individual", sc.individual,
                  "score individual-effect predictions");
  score->add_option("-j,--jobs", sc.jobs, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; usage errors are hard errors like any other.
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (generate->parsed()) {
    gen.track = parse_track(gen_track);
    return cli::cmd_generate(gen, std::cout, std::cerr);
  }
  if (estimate->parsed()) {
    est.method = cli::parse_method(method);
    return cli::cmd_estimate(est, std::cout, std::cerr);
  }
  if (!score_track.empty()) sc.track = parse_track(score_track);
  return cli::cmd_score(sc, std::cout, std::cerr);
}
