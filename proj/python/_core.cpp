// Python bindings: metrics on arrays, file readers and the three commands.

#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cibench/cli.hpp"
#include "cibench/dgp.hpp"
#include "cibench/io.hpp"
#include "cibench/scoring.hpp"
#include "cibench/track_scoring.hpp"

namespace py = pybind11;
using namespace cibench;

namespace {

std::vector<PopulationRow> rows_of(const std::vector<double>& truth,
                                   const std::vector<double>& estimate,
                                   const std::vector<double>& li,
                                   const std::vector<double>& ri) {
  const auto n = truth.size();
  if (estimate.size() != n || li.size() != n || ri.size() != n) {
    throw Error("truth, estimate, li and ri must have equal length");
  }
  std::vector<PopulationRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = {truth[i], estimate[i], li[i], ri[i]};
  return rows;
}

py::object opt(const std::optional<double>& v) {
  return v ? py::object(py::float_(*v)) : py::object(py::none());
}

py::dict metrics_dict(const AggregateMetrics& m) {
  py::dict d;
  d["enormse"] = opt(m.enormse);
  d["rmse"] = opt(m.rmse);
  d["bias"] = opt(m.bias);
  d["coverage"] = opt(m.coverage);
  d["cic"] = opt(m.cic);
  d["encis"] = opt(m.encis);
  return d;
}

py::dict report_dict(const AggregateReport& r) {
  py::list sizes;
  for (const auto& s : r.per_size) {
    py::dict d = metrics_dict({s.enormse, s.rmse, s.bias, s.coverage, s.cic, s.encis});
    d["n"] = s.n;
    d["instances"] = s.instance_count;
    sizes.append(d);
  }
  py::dict out;
  out["per_size"] = sizes;
  out["aggregate"] = metrics_dict(r.aggregate);
  out["missing_ufids"] = r.missing_ufids;
  out["warnings"] = r.warnings;
  return out;
}

// Runs a command, returning its stdout; a nonzero exit raises with stderr.
template <class Args, class Fn>
std::string run(const Args& args, Fn fn) {
  std::ostringstream out, err;
  int rc;
  {
    py::gil_scoped_release release;
    rc = fn(args, out, err);
  }
  if (rc != 0) throw Error(err.str());
  return out.str();
}

std::vector<SizeScore> sizes_of(const std::vector<std::tuple<std::size_t, std::size_t, double>>& v) {
  std::vector<SizeScore> out;
  for (const auto& [n, count, value] : v) out.push_back({n, count, value});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Causal effect benchmark core";
  py::register_exception<Error>(m, "CibenchError", PyExc_ValueError);

  m.attr("DELTA") = kDelta;
  m.attr("SCALING_SIZES") = std::vector<std::size_t>(std::begin(kScalingSizes),
                                                     std::end(kScalingSizes));

  m.def("population_metrics",
        [](std::size_t n, const std::vector<double>& truth,
           const std::vector<double>& estimate, const std::vector<double>& li,
           const std::vector<double>& ri) {
          const auto rows = rows_of(truth, estimate, li, ri);
          const auto s = population_metrics(n, rows);
          py::dict d = metrics_dict({s.enormse, s.rmse, s.bias, s.coverage, s.cic, s.encis});
          d["n"] = s.n;
          d["instances"] = s.instance_count;
          return d;
        },
        py::arg("n"), py::arg("truth"), py::arg("estimate"), py::arg("li"),
        py::arg("ri"));

  m.def("enormse_individual",
        [](const std::vector<std::pair<std::vector<double>, std::vector<double>>>& instances) {
          std::vector<IndividualEffects> views;
          for (const auto& [t, e] : instances) {
            if (t.size() != e.size()) throw Error("truth and estimate lengths differ");
            views.push_back({t, e});
          }
          return enormse_individual(views);
        },
        py::arg("instances"));

  m.def("aggregate_quadratic",
        [](const std::vector<std::tuple<std::size_t, std::size_t, double>>& v) {
          return aggregate_quadratic(sizes_of(v));
        },
        py::arg("per_size"), "per_size: (n, instance_count, value) tuples");
  m.def("aggregate_linear",
        [](const std::vector<std::tuple<std::size_t, std::size_t, double>>& v) {
          return aggregate_linear(sizes_of(v));
        },
        py::arg("per_size"));

  m.def("make_ufid", &make_ufid, py::arg("model_seed"), py::arg("instance_seed"));

  m.def("read_observations", [](const fs::path& path) {
    auto [ufid, records] = read_observation_file(path);
    py::list ids, z, y;
    for (const auto& r : records) {
      ids.append(r.sample_id);
      z.append(r.z);
      y.append(r.y ? py::object(py::float_(*r.y)) : py::object(py::none()));
    }
    py::dict d;
    d["ufid"] = ufid;
    d["sample_id"] = ids;
    d["z"] = z;
    d["y"] = y;
    return d;
  }, py::arg("path"), "Columns of an observation file; censored y is None.");

  m.def("read_labels", [](const fs::path& path) {
    auto [ufid, records] = read_label_file(path);
    py::list ids, y0, y1;
    for (const auto& r : records) {
      ids.append(r.sample_id);
      y0.append(r.y0);
      y1.append(r.y1);
    }
    py::dict d;
    d["ufid"] = ufid;
    d["sample_id"] = ids;
    d["y0"] = y0;
    d["y1"] = y1;
    return d;
  }, py::arg("path"));

  m.def("generate",
        [](const fs::path& config, const fs::path& out_dir,
           std::optional<fs::path> covariates,
           std::optional<std::pair<std::size_t, std::size_t>> synthetic,
           std::uint64_t synthetic_seed, const std::string& track, unsigned jobs) {
          cli::GenerateArgs a;
          a.config_path = config;
          a.out_dir = out_dir;
          a.covariates_path = covariates;
          if (synthetic) {
            a.synthetic_covariates =
                std::to_string(synthetic->first) + "," + std::to_string(synthetic->second);
          }
          a.synthetic_seed = synthetic_seed;
          a.track = parse_track(track);
          a.jobs = jobs;
          return run(a, cli::cmd_generate);
        },
        py::arg("config"), py::arg("out_dir"), py::kw_only(),
        py::arg("covariates") = py::none(), py::arg("synthetic") = py::none(),
        py::arg("synthetic_seed") = 0, py::arg("track") = "scaling",
        py::arg("jobs") = 0);

  m.def("estimate",
        [](const fs::path& data_dir, const fs::path& out, const std::string& method,
           std::uint64_t seed, int bootstrap_reps, unsigned jobs) {
          cli::EstimateArgs a;
          a.data_dir = data_dir;
          a.out_path = out;
          a.method = cli::parse_method(method);
          a.seed = seed;
          a.bootstrap_reps = bootstrap_reps;
          a.jobs = jobs;
          return run(a, cli::cmd_estimate);
        },
        py::arg("data_dir"), py::arg("out"), py::kw_only(),
        py::arg("method") = "diff_means", py::arg("seed") = 0,
        py::arg("bootstrap_reps") = 200, py::arg("jobs") = 0);

  m.def("score",
        [](const fs::path& predictions, const fs::path& label_dir,
           std::optional<fs::path> manifest, std::optional<std::string> track,
           bool individual, unsigned jobs) {
          ScoringOptions opts;
          if (track) opts.track = parse_track(*track);
          opts.jobs = jobs;
          const auto rows = read_manifest(manifest ? *manifest : label_dir / "manifest.csv");
          AggregateReport r;
          {
            py::gil_scoped_release release;
            r = individual
                    ? score_individual_track(predictions, label_dir, rows, opts)
                    : score_population_track(read_population_predictions(predictions),
                                             label_dir, rows, opts);
          }
          return report_dict(r);
        },
        py::arg("predictions"), py::arg("label_dir"), py::kw_only(),
        py::arg("manifest") = py::none(), py::arg("track") = py::none(),
        py::arg("individual") = false, py::arg("jobs") = 0,
        "Scores a submission and returns the report as a dict.");
}
