#include "footprint/impute.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "footprint/error.hpp"
#include "footprint/io.hpp"
#include "footprint/regression.hpp"

namespace footprint {

namespace {

constexpr std::size_t kMinCompleteCases = 20;

std::vector<Trait> predictors_for(Trait target) {
  std::vector<Trait> out;
  for (Trait t : kAllTraits)
    if (t != target) out.push_back(t);
  return out;
}

Eigen::VectorXd predictor_row(const UserProfile& p, const std::vector<Trait>& predictors) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t j = 0; j < predictors.size(); ++j) x(static_cast<Eigen::Index>(j)) = *p[predictors[j]];
  return x;
}

// Two-sided p-value and 97.5% quantile for df degrees of freedom (normal when infinite).
std::pair<double, double> t_tail(double t, double df) {
  if (!std::isfinite(df)) {
    boost::math::normal_distribution<double> nd;
    return {2.0 * boost::math::cdf(boost::math::complement(nd, std::abs(t))), boost::math::quantile(nd, 0.975)};
  }
  boost::math::students_t_distribution<double> td(df);
  return {2.0 * boost::math::cdf(boost::math::complement(td, std::abs(t))), boost::math::quantile(td, 0.975)};
}

}  // namespace

double LdaModel::posterior(const Eigen::VectorXd& x) const { return sigmoid(weights.dot(x) + bias); }

LdaModel fit_lda(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (labels.size() != n) fail(ErrorKind::parameter, "fit_lda: label count mismatch");
  Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(p), mean1 = Eigen::VectorXd::Zero(p);
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0) {
      mean1 += X.row(i).transpose();
      ++n1;
    } else {
      mean0 += X.row(i).transpose();
    }
  }
  const Eigen::Index n0 = n - n1;
  if (n0 == 0 || n1 == 0) fail(ErrorKind::numeric, "fit_lda: both classes must be present");
  if (n < 3) fail(ErrorKind::parameter, "fit_lda: need at least three samples");
  mean0 /= static_cast<double>(n0);
  mean1 /= static_cast<double>(n1);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd d = X.row(i).transpose() - (labels(i) != 0.0 ? mean1 : mean0);
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n - 2);
  const double trace = cov.trace();
  const double ridge = trace > 0.0 ? 1e-8 * trace / static_cast<double>(p) : 1e-8;
  cov.diagonal().array() += ridge;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::numeric, "fit_lda: covariance factorization failed");
  LdaModel model;
  model.weights = ldlt.solve(mean1 - mean0);
  model.bias = -0.5 * (mean1 + mean0).dot(model.weights) + std::log(static_cast<double>(n1) / static_cast<double>(n0));
  if (!model.weights.allFinite() || !std::isfinite(model.bias)) fail(ErrorKind::numeric, "fit_lda: non-finite discriminant");
  return model;
}

double draw_bernoulli(double p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return unif(rng) < p ? 1.0 : 0.0;
}

std::vector<TraitTable> impute_binary(const TraitTable& traits, Trait target, const ImputeConfig& cfg) {
  if (!is_binary(target)) fail(ErrorKind::parameter, fmt::format("{} is not a binary trait", name_of(target)));
  if (cfg.m < 2) fail(ErrorKind::parameter, "number of imputations must be >= 2");
  const auto m = static_cast<std::size_t>(cfg.m);

  std::vector<std::size_t> complete, missing;
  for (std::size_t i = 0; i < traits.size(); ++i) (traits[i][target] ? complete : missing).push_back(i);
  if (missing.empty()) return std::vector<TraitTable>(m, traits);

  const auto predictors = predictors_for(target);
  for (Trait t : predictors) {
    if (!traits.complete(t)) {
      fail(ErrorKind::validation, fmt::format("predictor {} has missing values; imputation needs complete predictors", name_of(t)));
    }
  }
  if (complete.size() < kMinCompleteCases) {
    fail(ErrorKind::validation, fmt::format("only {} complete cases for {} (need {})", complete.size(), name_of(target),
                                            kMinCompleteCases));
  }

  const auto nc = static_cast<Eigen::Index>(complete.size());
  Eigen::MatrixXd x_all(nc, static_cast<Eigen::Index>(predictors.size()));
  Eigen::VectorXd y_all(nc);
  for (Eigen::Index i = 0; i < nc; ++i) {
    const auto& row = traits[complete[static_cast<std::size_t>(i)]];
    x_all.row(i) = predictor_row(row, predictors).transpose();
    y_all(i) = *row[target];
  }

  std::vector<TraitTable> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    Rng rng = make_rng(cfg.seed, k);
    std::uniform_int_distribution<Eigen::Index> pick(0, nc - 1);
    Eigen::MatrixXd xb(nc, x_all.cols());
    Eigen::VectorXd yb(nc);
    bool both = false;
    for (int attempt = 0; attempt <= cfg.max_redraws && !both; ++attempt) {
      for (Eigen::Index i = 0; i < nc; ++i) {
        const Eigen::Index j = pick(rng);
        xb.row(i) = x_all.row(j);
        yb(i) = y_all(j);
      }
      const double s = yb.sum();
      both = s > 0.0 && s < static_cast<double>(nc);
    }
    if (!both) {
      fail(ErrorKind::numeric, fmt::format("imputation {}: every bootstrap resample had a single class", k + 1));
    }
    const LdaModel lda = fit_lda(xb, yb);

    TraitTable completed = traits;
    for (auto i : missing) {
      const double p = lda.posterior(predictor_row(traits[i], predictors));
      completed.at(i)[target] = draw_bernoulli(p, rng);
    }
    out.push_back(std::move(completed));
  }
  return out;
}

TraitTable combine_imputations(const std::vector<TraitTable>& completed, CombineMode mode) {
  if (completed.empty()) fail(ErrorKind::empty, "no completed tables to combine");
  if (mode == CombineMode::first) return completed.front();
  TraitTable out = completed.front();
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (Trait t : kAllTraits) {
      if (!is_binary(t)) continue;
      double ones = 0.0;
      std::size_t present = 0;
      for (const auto& table : completed) {
        if (const auto& v = table[i][t]) {
          ones += *v;
          ++present;
        }
      }
      if (present == 0) continue;
      // Ties resolve to 1.
      out.at(i)[t] = 2.0 * ones >= static_cast<double>(present) ? 1.0 : 0.0;
    }
  }
  return out;
}

PooledRow pool_rubin(std::span<const double> estimates, std::span<const double> within_vars) {
  const std::size_t m = estimates.size();
  if (m < 2 || within_vars.size() != m) fail(ErrorKind::parameter, "pool_rubin: need m >= 2 estimates and variances");
  const double md = static_cast<double>(m);
  double qbar = 0.0, wbar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(within_vars[i] > 0.0)) fail(ErrorKind::parameter, "pool_rubin: within-imputation variances must be positive");
    qbar += estimates[i];
    wbar += within_vars[i];
  }
  qbar /= md;
  wbar /= md;
  double b = 0.0;
  for (double q : estimates) b += (q - qbar) * (q - qbar);
  b /= md - 1.0;

  PooledRow row;
  row.qbar = row.est = qbar;
  row.within = wbar;
  row.between = b;
  row.total = wbar + (1.0 + 1.0 / md) * b;
  row.se = std::sqrt(row.total);
  row.t = row.est / row.se;
  row.lambda = (b + b / md) / row.total;
  if (b > 0.0) {
    const double r = (1.0 + 1.0 / md) * b / wbar;
    row.df = (md - 1.0) * (1.0 + 1.0 / r) * (1.0 + 1.0 / r);
    row.fmi = (r + 2.0 / (row.df + 3.0)) / (r + 1.0);
  } else {
    row.df = std::numeric_limits<double>::infinity();
    row.fmi = 0.0;
  }
  const auto [p, q975] = t_tail(row.t, row.df);
  row.p_value = p;
  row.lo95 = row.est - q975 * row.se;
  row.hi95 = row.est + q975 * row.se;
  return row;
}

std::vector<PooledRow> pooled_analysis(const std::vector<TraitTable>& completed, Trait target,
                                       const TraitTable& original) {
  if (completed.size() < 2) fail(ErrorKind::parameter, "pooled analysis needs at least two completed tables");
  const auto predictors = predictors_for(target);
  const auto p = static_cast<Eigen::Index>(predictors.size()) + 1;
  std::vector<std::vector<double>> est(static_cast<std::size_t>(p)), var(static_cast<std::size_t>(p));

  for (const auto& table : completed) {
    const auto n = static_cast<Eigen::Index>(table.size());
    if (n <= p) fail(ErrorKind::parameter, "pooled analysis: too few rows for the linear model");
    Eigen::MatrixXd z(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = table[static_cast<std::size_t>(i)];
      if (!row[target]) fail(ErrorKind::validation, "pooled analysis on an incomplete table");
      z(i, 0) = 1.0;
      z.row(i).tail(p - 1) = predictor_row(row, predictors).transpose();
      y(i) = *row[target];
    }
    const Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
      fail(ErrorKind::numeric, "pooled analysis: singular design");
    }
    const Eigen::VectorXd beta = ldlt.solve(z.transpose() * y);
    const double sigma2 = (y - z * beta).squaredNorm() / static_cast<double>(n - p);
    const Eigen::MatrixXd cov = sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index j = 0; j < p; ++j) {
      est[static_cast<std::size_t>(j)].push_back(beta(j));
      var[static_cast<std::size_t>(j)].push_back(cov(j, j));
    }
  }

  std::vector<PooledRow> rows;
  for (Eigen::Index j = 0; j < p; ++j) {
    PooledRow row = pool_rubin(est[static_cast<std::size_t>(j)], var[static_cast<std::size_t>(j)]);
    if (j == 0) {
      row.term = "(Intercept)";
    } else {
      const Trait t = predictors[static_cast<std::size_t>(j - 1)];
      row.term = std::string(name_of(t));
      row.nmis = original.missing_count(t);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string pooled_csv(const std::vector<PooledRow>& rows) {
  std::string out = "term,est,se,t,df,Pr,lo95,hi95,nmis,fmi,lambda\n";
  auto num = [](double v) { return std::isinf(v) ? std::string("Inf") : io::format_double(v); };
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.term, num(r.est), num(r.se), num(r.t), num(r.df),
                       num(r.p_value), num(r.lo95), num(r.hi95), r.nmis ? std::to_string(*r.nmis) : "NA", num(r.fmi),
                       num(r.lambda));
  }
  return out;
}

}  // namespace footprint
