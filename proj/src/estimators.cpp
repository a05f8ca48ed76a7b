#include "cibench/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cibench/numeric.hpp"
#include "cibench/parallel.hpp"

namespace cibench {

namespace {

constexpr double kZ975 = 1.959963984540054;
// Linear predictors beyond this put fitted probabilities within ~1e-13 of
// 0 or 1, which only happens when the arms do not overlap.
constexpr double kMaxLinearPredictor = 30.0;

struct CompleteCases {
  std::vector<std::string> ids;
  std::vector<int> z;
  std::vector<double> y;
  std::size_t treated = 0;
  std::size_t control = 0;
};

CompleteCases complete_cases(std::span<const ObservationRecord> obs) {
  CompleteCases cc;
  for (const auto& o : obs) {
    if (o.censored()) continue;
    cc.ids.push_back(o.sample_id);
    cc.z.push_back(o.z);
    cc.y.push_back(*o.y);
    (o.z == 1 ? cc.treated : cc.control) += 1;
  }
  return cc;
}

Eigen::MatrixXd with_intercept(const RowMatrix& features) {
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(features.cols()) = features;
  return x;
}

[[noreturn]] void non_overlapping(const std::string& detail) {
  throw Error("non-overlapping treatment groups: " + detail);
}

}  // namespace

PopulationPrediction diff_means(std::string_view ufid,
                                std::span<const ObservationRecord> obs) {
  double sum[2] = {0.0, 0.0};
  double count[2] = {0.0, 0.0};
  for (const auto& o : obs) {
    if (o.censored()) continue;
    sum[o.z] += *o.y;
    count[o.z] += 1.0;
  }
  if (count[0] < 2 || count[1] < 2) {
    throw Error("degenerate arm: need at least 2 uncensored samples per arm, "
                "found " + std::to_string(static_cast<int>(count[1])) +
                " treated and " + std::to_string(static_cast<int>(count[0])) +
                " control");
  }
  const double mean[2] = {sum[0] / count[0], sum[1] / count[1]};
  double ss[2] = {0.0, 0.0};
  for (const auto& o : obs) {
    if (o.censored()) continue;
    const double d = *o.y - mean[o.z];
    ss[o.z] += d * d;
  }
  const double var0 = ss[0] / (count[0] - 1);
  const double var1 = ss[1] / (count[1] - 1);
  const double se = std::sqrt(var1 / count[1] + var0 / count[0]);

  PopulationPrediction p;
  p.ufid = std::string(ufid);
  p.effect_size = mean[1] - mean[0];
  p.li = p.effect_size - kZ975 * se;
  p.ri = p.effect_size + kZ975 * se;
  return p;
}

Eigen::VectorXd PropensityFit::predict(const RowMatrix& features) const {
  if (features.cols() + 1 != coefficients.size()) {
    throw Error("propensity model expects " +
                std::to_string(coefficients.size() - 1) + " features");
  }
  Eigen::VectorXd eta =
      (features * coefficients.tail(features.cols())).array() + coefficients(0);
  return eta.unaryExpr([](double v) { return sigmoid(v); });
}

PropensityFit fit_propensity(const RowMatrix& features, std::span<const int> z,
                             const PropensityOptions& options) {
  const Eigen::Index n = features.rows();
  if (static_cast<std::size_t>(n) != z.size()) {
    throw Error("fit_propensity: feature rows and treatment length differ");
  }
  std::size_t treated = 0;
  for (int v : z) {
    if (v != 0 && v != 1) throw Error("fit_propensity: z must be 0 or 1");
    treated += static_cast<std::size_t>(v);
  }
  if (treated == 0 || treated == z.size()) {
    non_overlapping("only one treatment arm is present");
  }

  const Eigen::MatrixXd x = with_intercept(features);
  const Eigen::Index k = x.cols();
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target(i) = z[static_cast<std::size_t>(i)];

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(k, options.ridge);
  penalty(0) = 0.0;

  PropensityFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(k);
  if (options.start.size() == k && options.start.allFinite()) {
    fit.coefficients = options.start;
  }
  Eigen::MatrixXd information(k, k);
  Eigen::MatrixXd scaled(n, k);
  bool converged = false;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = x * fit.coefficients;
    const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd w =
        (mu.array() * (1.0 - mu.array())).max(1e-12).matrix();

    scaled.noalias() = w.cwiseSqrt().asDiagonal() * x;
    information.setZero();
    information.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    information.diagonal() += penalty;
    const Eigen::VectorXd gradient =
        x.transpose() * (target - mu) -
        penalty.cwiseProduct(fit.coefficients);

    Eigen::LDLT<Eigen::MatrixXd, Eigen::Lower> solver(information);
    if (solver.info() != Eigen::Success) {
      non_overlapping("information matrix is singular");
    }
    const Eigen::VectorXd step = solver.solve(gradient);
    if (!step.allFinite()) non_overlapping("Newton step diverged");
    fit.coefficients += step;
    fit.iterations = iter;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    non_overlapping("likelihood did not converge in " +
                    std::to_string(options.max_iterations) + " iterations");
  }
  const Eigen::VectorXd eta = x * fit.coefficients;
  if (eta.cwiseAbs().maxCoeff() > kMaxLinearPredictor) {
    non_overlapping("fitted propensities reach 0 or 1");
  }

  const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).matrix();
  information.noalias() = x.transpose() * w.asDiagonal() * x;
  information.diagonal() += penalty;
  const Eigen::MatrixXd covariance =
      information.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  fit.standard_errors = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

double hajek_estimate(std::span<const int> z, std::span<const double> y,
                      std::span<const double> propensity) {
  if (z.size() != y.size() || z.size() != propensity.size()) {
    throw Error("hajek_estimate: input lengths differ");
  }
  double num1 = 0.0, den1 = 0.0, num0 = 0.0, den0 = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 1) {
      const double w = 1.0 / propensity[i];
      num1 += w * y[i];
      den1 += w;
    } else {
      const double w = 1.0 / (1.0 - propensity[i]);
      num0 += w * y[i];
      den0 += w;
    }
  }
  if (den1 == 0.0 || den0 == 0.0) {
    throw Error("degenerate arm: IPW needs samples in both arms");
  }
  return num1 / den1 - num0 / den0;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PopulationPrediction ipw_ate(std::string_view ufid,
                             std::span<const ObservationRecord> obs,
                             const CovariateTable& covariates,
                             const IpwOptions& options) {
  const CompleteCases cc = complete_cases(obs);
  if (cc.treated == 0 || cc.control == 0) {
    throw Error("degenerate arm: IPW needs uncensored samples in both arms");
  }
  const RowMatrix features = covariates.gather(cc.ids);

  auto estimate = [](const RowMatrix& x, std::span<const int> z,
                     std::span<const double> y, const PropensityOptions& po,
                     Eigen::VectorXd* coefficients = nullptr) {
    const auto fit = fit_propensity(x, z, po);
    if (coefficients) *coefficients = fit.coefficients;
    const Eigen::VectorXd p = fit.predict(x).cwiseMax(kPropensityClipLow)
                                  .cwiseMin(kPropensityClipHigh);
    return hajek_estimate(z, y, std::span<const double>(p.data(),
                                                        static_cast<std::size_t>(p.size())));
  };

  PropensityOptions refit = options.propensity;
  PopulationPrediction out;
  out.ufid = std::string(ufid);
  out.effect_size =
      estimate(features, cc.z, cc.y, options.propensity, &refit.start);
  out.li = -std::numeric_limits<double>::infinity();
  out.ri = std::numeric_limits<double>::infinity();
  if (options.bootstrap_reps <= 0) return out;

  const std::size_t m = cc.ids.size();
  const auto reps = static_cast<std::size_t>(options.bootstrap_reps);
  std::vector<double> replicate(reps, std::numeric_limits<double>::quiet_NaN());
  parallel_for(reps, options.jobs, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(options.seed, {0x626f6f74ULL, b}));
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    RowMatrix x(static_cast<Eigen::Index>(m), features.cols());
    std::vector<int> z(m);
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = pick(rng);
      x.row(static_cast<Eigen::Index>(i)) =
          features.row(static_cast<Eigen::Index>(j));
      z[i] = cc.z[j];
      y[i] = cc.y[j];
    }
    try {
      // Replicates start from the full-sample fit.
      replicate[b] = estimate(x, z, y, refit);
    } catch (const Error&) {
      // A resample without overlap is dropped.
    }
  });

  std::vector<double> ok;
  ok.reserve(reps);
  for (double v : replicate) {
    if (!std::isnan(v)) ok.push_back(v);
  }
  if (ok.size() * 2 < reps) {
    throw Error("IPW bootstrap failed: only " + std::to_string(ok.size()) +
                " of " + std::to_string(reps) + " replicates could be fit");
  }
  out.li = quantile(ok, 0.025);
  out.ri = quantile(ok, 0.975);
  return out;
}

IndividualPredictionSet regression_impute(
    std::string_view ufid, std::span<const ObservationRecord> obs,
    const CovariateTable& covariates, double ridge) {
  const CompleteCases cc = complete_cases(obs);
  const std::size_t p = covariates.columns();
  const std::size_t needed = p + 2;
  if (cc.treated < needed || cc.control < needed) {
    throw Error("degenerate arm: regression needs at least " +
                std::to_string(needed) +
                " uncensored samples per arm, found " +
                std::to_string(cc.treated) + " treated and " +
                std::to_string(cc.control) + " control");
  }

  std::vector<std::string> all_ids;
  all_ids.reserve(obs.size());
  for (const auto& o : obs) all_ids.push_back(o.sample_id);
  const Eigen::MatrixXd x_all = with_intercept(covariates.gather(all_ids));
  const Eigen::MatrixXd x_cc = with_intercept(covariates.gather(cc.ids));
  const Eigen::Index k = x_cc.cols();

  auto fit_arm = [&](int arm, std::size_t rows) {
    // Ridge via the augmented system [X; sqrt(λ)·D] β = [y; 0], solved by QR.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(rows) + k - 1, k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < cc.z.size(); ++i) {
      if (cc.z[i] != arm) continue;
      a.row(r) = x_cc.row(static_cast<Eigen::Index>(i));
      b(r) = cc.y[i];
      ++r;
    }
    const double root = std::sqrt(ridge);
    for (Eigen::Index j = 1; j < k; ++j) a(r + j - 1, j) = root;
    Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    if (!beta.allFinite()) {
      throw Error("degenerate arm: regression for arm " + std::to_string(arm) +
                  " failed");
    }
    return beta;
  };
  const Eigen::VectorXd beta0 = fit_arm(0, cc.control);
  const Eigen::VectorXd beta1 = fit_arm(1, cc.treated);
  const Eigen::VectorXd y0 = x_all * beta0;
  const Eigen::VectorXd y1 = x_all * beta1;

  IndividualPredictionSet set;
  set.ufid = std::string(ufid);
  set.rows.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    set.rows.push_back({obs[i].sample_id, y0(r), y1(r)});
  }
  return set;
}

}  // namespace cibench
