#include "cibench/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <openssl/evp.h>

#include "cibench/text_format.hpp"

namespace cibench {

namespace {

constexpr double kBracket = 40.0;
constexpr double kCalibrationTolerance = 1e-4;
constexpr double kExpClamp = 10.0;

// Stream tags keep the model and per-instance generators apart.
enum StreamTag : std::uint64_t {
  kModelStream = 0x6d6f64656cULL,
  kInstanceStream = 0x696e7374ULL,
};

std::vector<PolynomialTerm> random_terms(std::span<const std::size_t> parents,
                                         int degree, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<PolynomialTerm> terms;
  for (std::size_t p : parents) terms.push_back({{p}, normal(rng)});
  if (parents.empty()) return terms;
  std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
  for (int d = 2; d <= degree; ++d) {
    for (std::size_t k = 0; k < parents.size(); ++k) {
      PolynomialTerm term;
      for (int j = 0; j < d; ++j) term.covariates.push_back(parents[pick(rng)]);
      std::sort(term.covariates.begin(), term.covariates.end());
      term.coefficient = normal(rng);
      terms.push_back(std::move(term));
    }
  }
  return terms;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments predictor_moments(std::span<const PolynomialTerm> terms,
                          const RowMatrix& values) {
  const Eigen::Index rows = values.rows();
  if (terms.empty() || rows == 0) return {};
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double v = evaluate_terms(terms, values, r);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(rows);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var)};
}

// Rescales the coefficients to a unit-variance predictor over the table.
// Returns the centering offset (-mean after scaling).
double standardize(std::vector<PolynomialTerm>& terms,
                   const RowMatrix& values) {
  const Moments m = predictor_moments(terms, values);
  const double scale = m.sd > 1e-12 ? 1.0 / m.sd : 1.0;
  for (auto& t : terms) t.coefficient *= scale;
  return -m.mean * scale;
}

std::vector<double> node_scores(std::span<const PolynomialTerm> terms,
                                const RowMatrix& values) {
  std::vector<double> scores(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    scores[static_cast<std::size_t>(r)] = evaluate_terms(terms, values, r);
  }
  return scores;
}

double quantize(double v) { return *parse_number(format_number(v)); }

}  // namespace

// Config ---------------------------------------------------------------------

void DgpConfig::validate(std::size_t n_covariates) const {
  auto fail = [](const std::string& m) { throw Error("invalid DGP config: " + m); };
  if (n_outcome_parents > n_covariates || n_treatment_parents > n_covariates ||
      n_censoring_parents > n_covariates) {
    fail("parent count exceeds the " + std::to_string(n_covariates) +
         " available covariates");
  }
  if (n_confounders > std::min(n_outcome_parents, n_treatment_parents)) {
    fail("n_confounders exceeds min(n_outcome_parents, n_treatment_parents)");
  }
  if (n_outcome_parents + n_treatment_parents - n_confounders > n_covariates) {
    fail("treatment and outcome parents need " +
         std::to_string(n_outcome_parents + n_treatment_parents -
                        n_confounders) +
         " distinct covariates, only " + std::to_string(n_covariates) +
         " available");
  }
  if (!(treatment_prevalence > 0.0 && treatment_prevalence < 1.0)) {
    fail("treatment_prevalence must lie in (0, 1)");
  }
  if (!(censoring_rate >= 0.0 && censoring_rate < 1.0)) {
    fail("censoring_rate must lie in [0, 1)");
  }
  if (poly_degree < 1) fail("poly_degree must be at least 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    fail("noise_sd must be a finite non-negative number");
  }
  if (!(effect_heterogeneity >= 0.0) || !std::isfinite(effect_heterogeneity)) {
    fail("effect_heterogeneity must be a finite non-negative number");
  }
  if (!std::isfinite(effect_constant)) fail("effect_constant must be finite");
  if (instances_per_size == 0) fail("instances_per_size must be positive");
}

// Model ----------------------------------------------------------------------

double evaluate_terms(std::span<const PolynomialTerm> terms,
                      const RowMatrix& values, Eigen::Index row) {
  double sum = 0.0;
  for (const auto& t : terms) {
    double product = t.coefficient;
    for (std::size_t c : t.covariates) {
      product *= values(row, static_cast<Eigen::Index>(c));
    }
    sum += product;
  }
  return sum;
}

std::vector<std::size_t> DgpModel::covariates_used() const {
  std::set<std::size_t> all;
  all.insert(treatment_parents.begin(), treatment_parents.end());
  all.insert(outcome_parents.begin(), outcome_parents.end());
  all.insert(censoring_parents.begin(), censoring_parents.end());
  return {all.begin(), all.end()};
}

double DgpModel::treatment_probability(const RowMatrix& values,
                                       Eigen::Index row) const {
  return sigmoid(evaluate_terms(treatment_terms, values, row) +
                 treatment_intercept);
}

double DgpModel::censoring_probability(const RowMatrix& values,
                                       Eigen::Index row, int z) const {
  if (!censoring_enabled()) return 0.0;
  return sigmoid(evaluate_terms(censoring_terms, values, row) +
                 censoring_treatment_coefficient * z + censoring_intercept);
}

double DgpModel::base_outcome(const RowMatrix& values, Eigen::Index row) const {
  const double predictor =
      evaluate_terms(outcome_base_terms, values, row) + outcome_base_offset;
  if (!config.use_exp_transform) return predictor;
  return std::exp(std::clamp(predictor, -kExpClamp, kExpClamp));
}

double DgpModel::treatment_effect(const RowMatrix& values,
                                  Eigen::Index row) const {
  if (config.effect_heterogeneity == 0.0) return config.effect_constant;
  const double predictor =
      evaluate_terms(outcome_effect_terms, values, row) + outcome_effect_offset;
  return config.effect_constant + config.effect_heterogeneity * predictor;
}

std::string make_ufid(std::uint64_t model_seed, std::uint64_t instance_seed) {
  const std::string message = "cibench-instance:" + std::to_string(model_seed) +
                              ":" + std::to_string(instance_seed);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(message.data(), message.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < 4; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  hex.resize(7);
  return hex;
}

double calibrate_intercept(std::span<const double> scores, double target_rate,
                           std::span<const double> weights) {
  if (scores.empty()) throw Error("calibrate_intercept: no scores");
  if (!(target_rate > 0.0 && target_rate < 1.0)) {
    throw Error("calibrate_intercept: target rate must lie in (0, 1)");
  }
  if (!weights.empty() && weights.size() != scores.size()) {
    throw Error("calibrate_intercept: weights and scores differ in length");
  }
  double total_weight = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error("calibrate_intercept: non-finite score");
    }
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw Error("calibrate_intercept: negative weight");
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw Error("calibrate_intercept: zero weight");

  auto rate = [&](double c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      sum += w * sigmoid(scores[i] + c);
    }
    return sum / total_weight;
  };

  double lo = -kBracket;
  double hi = kBracket;
  const double rate_lo = rate(lo);
  const double rate_hi = rate(hi);
  if (target_rate < rate_lo - kCalibrationTolerance ||
      target_rate > rate_hi + kCalibrationTolerance) {
    throw Error("calibrate_intercept: target rate " +
                format_number(target_rate) +
                " unattainable with an intercept in [-40, 40]");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (rate(mid) < target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double c = 0.5 * (lo + hi);
  if (std::abs(rate(c) - target_rate) > kCalibrationTolerance) {
    throw Error("calibrate_intercept: bisection did not reach the target rate");
  }
  return c;
}

DgpModel build_model(const DgpConfig& config, const CovariateTable& covariates) {
  const std::size_t p = covariates.columns();
  config.validate(p);
  const RowMatrix& values = covariates.values();
  if (values.rows() == 0) throw Error("build_model: empty covariate table");

  std::mt19937_64 rng(derive_seed(config.seed, {kModelStream}));
  DgpModel model;
  model.config = config;

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  // [confounders | outcome-only | treatment-only | unused]
  const std::size_t n_conf = config.n_confounders;
  const std::size_t n_out_only = config.n_outcome_parents - n_conf;
  const std::size_t n_treat_only = config.n_treatment_parents - n_conf;
  auto first = order.begin();
  model.outcome_parents.assign(first, first + n_conf);
  model.treatment_parents.assign(first, first + n_conf);
  model.outcome_parents.insert(model.outcome_parents.end(), first + n_conf,
                               first + n_conf + n_out_only);
  model.treatment_parents.insert(model.treatment_parents.end(),
                                 first + n_conf + n_out_only,
                                 first + n_conf + n_out_only + n_treat_only);
  std::sort(model.outcome_parents.begin(), model.outcome_parents.end());
  std::sort(model.treatment_parents.begin(), model.treatment_parents.end());

  std::vector<std::size_t> censoring_pool(p);
  std::iota(censoring_pool.begin(), censoring_pool.end(), std::size_t{0});
  std::shuffle(censoring_pool.begin(), censoring_pool.end(), rng);
  if (config.censoring_rate > 0.0) {
    model.censoring_parents.assign(
        censoring_pool.begin(),
        censoring_pool.begin() + static_cast<std::ptrdiff_t>(
                                     config.n_censoring_parents));
    std::sort(model.censoring_parents.begin(), model.censoring_parents.end());
  }

  model.treatment_terms =
      random_terms(model.treatment_parents, config.poly_degree, rng);
  model.outcome_base_terms =
      random_terms(model.outcome_parents, config.poly_degree, rng);
  model.outcome_effect_terms =
      random_terms(model.outcome_parents, config.poly_degree, rng);
  model.censoring_terms =
      random_terms(model.censoring_parents, config.poly_degree, rng);

  standardize(model.treatment_terms, values);
  model.outcome_base_offset = standardize(model.outcome_base_terms, values);
  model.outcome_effect_offset = standardize(model.outcome_effect_terms, values);
  standardize(model.censoring_terms, values);

  const auto treatment_scores = node_scores(model.treatment_terms, values);
  model.treatment_intercept =
      calibrate_intercept(treatment_scores, config.treatment_prevalence);

  if (model.censoring_enabled()) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double gamma = normal(rng);
    auto scores = node_scores(model.censoring_terms, values);
    if (config.censoring_depends_on_treatment) {
      model.censoring_treatment_coefficient = gamma;
      // Expected censoring over the treatment distribution: each row
      // contributes its z=1 score with weight p and its z=0 score with 1-p.
      const std::size_t n = scores.size();
      std::vector<double> expanded(2 * n);
      std::vector<double> weights(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const double pz =
            sigmoid(treatment_scores[i] + model.treatment_intercept);
        expanded[i] = scores[i];
        weights[i] = 1.0 - pz;
        expanded[n + i] = scores[i] + gamma;
        weights[n + i] = pz;
      }
      model.censoring_intercept =
          calibrate_intercept(expanded, config.censoring_rate, weights);
    } else {
      model.censoring_intercept =
          calibrate_intercept(scores, config.censoring_rate);
    }
  }
  return model;
}

SimulatedInstance simulate_instance(const DgpModel& model,
                                    const CovariateTable& covariates,
                                    std::size_t n, std::uint64_t instance_seed) {
  const std::size_t available = covariates.rows();
  if (n == 0) throw Error("simulate_instance: n must be positive");
  if (n > available) {
    throw Error("simulate_instance: requested " + std::to_string(n) +
                " samples but only " + std::to_string(available) +
                " covariate rows are available");
  }
  const auto& config = model.config;
  std::mt19937_64 rng(
      derive_seed(config.seed, {kInstanceStream, instance_seed}));

  std::vector<std::size_t> all(available);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> rows;
  rows.reserve(n);
  std::sample(all.begin(), all.end(), std::back_inserter(rows), n, rng);

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> outcome_noise(0.0, 1.0);
  const double effect_noise_sd = config.noise_sd * config.effect_heterogeneity;

  SimulatedInstance out;
  InstancePair& pair = out.pair;
  pair.ufid = make_ufid(config.seed, instance_seed);
  pair.observations.reserve(n);
  pair.labels.reserve(n);

  const RowMatrix& values = covariates.values();
  std::size_t treated = 0;
  std::size_t censored = 0;
  for (std::size_t row : rows) {
    const auto r = static_cast<Eigen::Index>(row);
    const std::string& id = covariates.sample_ids()[row];

    const int z = uniform(rng) < model.treatment_probability(values, r) ? 1 : 0;
    const double eps = outcome_noise(rng);
    const double eta = outcome_noise(rng);
    const double u_censor = uniform(rng);

    const double y0 = model.base_outcome(values, r) + config.noise_sd * eps;
    const double y1 =
        y0 + model.treatment_effect(values, r) + effect_noise_sd * eta;
    const bool is_censored = u_censor < model.censoring_probability(values, r, z);

    ObservationRecord obs{id, z, std::nullopt};
    if (!is_censored) obs.y = z == 1 ? y1 : y0;
    pair.observations.push_back(std::move(obs));
    pair.labels.push_back({id, y0, y1});
    treated += static_cast<std::size_t>(z);
    censored += is_censored ? 1 : 0;
  }

  DgpMetadata& meta = out.metadata;
  meta.size = n;
  meta.n_covariates = model.covariates_used().size();
  meta.n_treatment_parents = model.treatment_parents.size();
  meta.n_outcome_parents = model.outcome_parents.size();
  meta.n_censoring_parents = model.censoring_parents.size();
  meta.n_confounders = config.n_confounders;
  meta.poly_degree = config.poly_degree;
  meta.use_exp = config.use_exp_transform;
  meta.censoring_uses_treatment = model.censoring_uses_treatment();
  meta.prevalence = config.treatment_prevalence;
  meta.censoring_rate = config.censoring_rate;
  meta.realized_prevalence =
      static_cast<double>(treated) / static_cast<double>(n);
  meta.realized_censoring_rate =
      static_cast<double>(censored) / static_cast<double>(n);
  return out;
}

// Synthetic covariates ---------------------------------------------------------

CovariateTable generate_synthetic_covariates(
    const SyntheticCovariateOptions& options) {
  if (options.rows == 0 || options.columns == 0) {
    throw Error("synthetic covariates need at least one row and one column");
  }
  if (!(options.binary_fraction >= 0.0 && options.binary_fraction <= 1.0)) {
    throw Error("binary_fraction must lie in [0, 1]");
  }
  if (!(options.factor_strength >= 0.0 && options.factor_strength < 1.0)) {
    throw Error("factor_strength must lie in [0, 1)");
  }
  const std::size_t p = options.columns;
  const std::size_t rank = options.factor_strength > 0.0
                               ? std::max<std::size_t>(1, options.factor_rank)
                               : 0;
  const auto n_binary = static_cast<std::size_t>(
      std::llround(options.binary_fraction * static_cast<double>(p)));

  std::mt19937_64 rng(derive_seed(options.seed, {0x78637376ULL}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> prevalence(0.1, 0.5);

  // Unit-norm loadings so each latent column has variance 1.
  Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(rank));
  for (Eigen::Index j = 0; j < loadings.rows(); ++j) {
    for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
      loadings(j, k) = normal(rng);
    }
    const double norm = loadings.row(j).norm();
    if (norm > 0.0) loadings.row(j) /= norm;
  }
  // Binary columns are thresholded latents with prevalence in [0.1, 0.5].
  std::vector<double> thresholds(p, 0.0);
  for (std::size_t j = p - n_binary; j < p; ++j) {
    const double target = prevalence(rng);
    // Upper-tail quantile of N(0,1) via bisection on erfc.
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(mid / std::sqrt(2.0)) > target ? lo : hi) = mid;
    }
    thresholds[j] = 0.5 * (lo + hi);
  }

  const double shared = std::sqrt(options.factor_strength);
  const double own = std::sqrt(1.0 - options.factor_strength);
  RowMatrix values(static_cast<Eigen::Index>(options.rows),
                   static_cast<Eigen::Index>(p));
  Eigen::VectorXd factor(static_cast<Eigen::Index>(rank));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index k = 0; k < factor.size(); ++k) factor(k) = normal(rng);
    for (std::size_t j = 0; j < p; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      double latent = own * normal(rng);
      if (rank > 0) latent += shared * loadings.row(c).dot(factor);
      values(r, c) = j >= p - n_binary ? (latent > thresholds[j] ? 1.0 : 0.0)
                                       : quantize(latent);
    }
  }

  const std::size_t width = std::to_string(options.rows).size();
  std::vector<std::string> ids;
  ids.reserve(options.rows);
  for (std::size_t i = 1; i <= options.rows; ++i) {
    std::string digits = std::to_string(i);
    ids.push_back("s" + std::string(width - digits.size(), '0') + digits);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) {
    names.push_back((j >= p - n_binary ? "b" : "x") + std::to_string(j + 1));
  }
  return CovariateTable(std::move(ids), std::move(names), std::move(values));
}

}  // namespace cibench
