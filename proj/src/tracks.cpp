#include <set>

#include "cibench/dgp.hpp"
#include "cibench/parallel.hpp"

namespace cibench {

namespace {

struct Job {
  std::size_t config_index = 0;
  std::size_t size = 0;
  std::size_t replicate = 0;
  std::uint64_t instance_seed = 0;
};

std::vector<ManifestRow> generate_track(std::span<const DgpConfig> configs,
                                        const CovariateTable& covariates,
                                        const fs::path& out_dir, Track track,
                                        const TrackOptions& options) {
  if (configs.empty()) throw Error("no DGP configs given");

  std::vector<DgpConfig> effective(configs.begin(), configs.end());
  std::vector<std::size_t> sizes;
  if (track == Track::scaling) {
    sizes.assign(std::begin(kScalingSizes), std::end(kScalingSizes));
    for (auto& c : effective) c.censoring_rate = 0.0;
  } else {
    sizes = {kCensoringSize};
    for (const auto& c : effective) {
      if (!(c.censoring_rate > 0.0)) {
        throw Error("censoring track requires censoring (censoring_rate > 0)");
      }
    }
  }
  const std::size_t largest = sizes.back();
  if (covariates.rows() < largest) {
    throw Error("the " + std::string(to_string(track)) + " track needs at least " +
                std::to_string(largest) + " covariate rows, found " +
                std::to_string(covariates.rows()));
  }

  std::vector<DgpModel> models;
  models.reserve(effective.size());
  for (const auto& c : effective) models.push_back(build_model(c, covariates));

  const std::uint64_t track_tag = track == Track::scaling ? 1 : 2;
  std::vector<Job> jobs;
  std::set<std::string> ufids;
  for (std::size_t ci = 0; ci < effective.size(); ++ci) {
    const std::uint64_t seed = effective[ci].seed;
    for (std::size_t size : sizes) {
      for (std::size_t r = 0; r < effective[ci].instances_per_size; ++r) {
        const std::uint64_t instance_seed =
            derive_seed(seed, {track_tag, ci, size, r});
        const std::string ufid = make_ufid(seed, instance_seed);
        if (!ufids.insert(ufid).second) {
          throw Error("ufid collision: '" + ufid +
                      "' would be generated twice; change a seed");
        }
        jobs.push_back({ci, size, r, instance_seed});
      }
    }
  }

  const fs::path dir = track_directory(out_dir, track);
  fs::create_directories(dir);
  write_text(dir / std::string(kCovariateFileName),
             render_covariates(covariates), ExistingFile::accept_identical);

  std::vector<ManifestRow> manifest(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    const DgpModel& model = models[job.config_index];
    auto sim = simulate_instance(model, covariates, job.size, job.instance_seed);
    write_instance_pair(sim.pair, dir, ExistingFile::accept_identical);

    ManifestRow& row = manifest[i];
    row.ufid = sim.pair.ufid;
    row.track = track;
    row.size = job.size;
    row.n_covariates = sim.metadata.n_covariates;
    row.n_confounders = sim.metadata.n_confounders;
    row.poly_degree = sim.metadata.poly_degree;
    row.use_exp = sim.metadata.use_exp;
    row.prevalence = sim.metadata.prevalence;
    row.censoring_rate = sim.metadata.censoring_rate;
  });

  write_manifest(manifest, dir / std::string(kManifestFileName),
                 ExistingFile::accept_identical);
  return manifest;
}

}  // namespace

std::vector<ManifestRow> generate_scaling_track(
    std::span<const DgpConfig> configs, const CovariateTable& covariates,
    const std::filesystem::path& out_dir, const TrackOptions& options) {
  return generate_track(configs, covariates, out_dir, Track::scaling, options);
}

std::vector<ManifestRow> generate_censoring_track(
    std::span<const DgpConfig> configs, const CovariateTable& covariates,
    const std::filesystem::path& out_dir, const TrackOptions& options) {
  return generate_track(configs, covariates, out_dir, Track::censoring,
                        options);
}

}  // namespace cibench
