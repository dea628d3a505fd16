#include "footprint/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "footprint/error.hpp"
#include "footprint/rng.hpp"

namespace footprint {

namespace {

Eigen::MatrixXd augment(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd z(X.rows(), X.cols() + 1);
  z.col(0).setOnes();
  z.rightCols(X.cols()) = X;
  return z;
}

void check_shapes(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) fail(ErrorKind::parameter, fmt::format("{} rows vs {} targets", X.rows(), y.size()));
  if (X.rows() <= X.cols() + 1) {
    fail(ErrorKind::parameter, fmt::format("need more than {} samples for {} features", X.cols() + 1, X.cols()));
  }
}

Eigen::VectorXd trait_column(const TraitTable& traits, Trait trait) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(traits.size()));
  for (std::size_t i = 0; i < traits.size(); ++i) {
    const auto& v = traits[i][trait];
    if (!v) fail(ErrorKind::validation, fmt::format("user {} has no {} value", traits[i].user_id, name_of(trait)));
    y(static_cast<Eigen::Index>(i)) = *v;
  }
  return y;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Fits on the training rows and predicts the held-out rows of one fold.
Eigen::VectorXd fit_predict(Trait trait, const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                            const Eigen::MatrixXd& x_test) {
  if (is_binary(trait)) return predict(fit_logistic(x_train, y_train), x_test);
  return predict(fit_linear(x_train, y_train), x_test);
}

Folds make_folds(Trait trait, const Eigen::VectorXd& y, const CvConfig& cfg) {
  if (is_binary(trait) && cfg.stratify_binary) return stratified_split({y.data(), static_cast<std::size_t>(y.size())}, cfg);
  return kfold_split(static_cast<std::size_t>(y.size()), cfg);
}

std::vector<std::size_t> complement(const Folds& folds, std::size_t held_out, std::size_t n) {
  std::vector<bool> in_fold(n, false);
  for (auto i : folds[held_out]) in_fold[i] = true;
  std::vector<std::size_t> train;
  train.reserve(n - folds[held_out].size());
  for (std::size_t i = 0; i < n; ++i)
    if (!in_fold[i]) train.push_back(i);
  return train;
}

CvResult finish(Trait trait, const Folds& folds, const Eigen::VectorXd& oof, const Eigen::VectorXd& y,
                const CvConfig& cfg) {
  CvResult res{score_trait(trait, {oof.data(), static_cast<std::size_t>(oof.size())},
                           {y.data(), static_cast<std::size_t>(y.size())}),
               oof};
  if (cfg.average_folds) {
    double sum = 0.0;
    for (const auto& fold : folds) {
      const Eigen::VectorXd p = take(oof, fold), t = take(y, fold);
      sum += score_trait(trait, {p.data(), fold.size()}, {t.data(), fold.size()}).value;
    }
    res.score.value = sum / static_cast<double>(folds.size());
  }
  return res;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LinearModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LinearOptions& opts) {
  check_shapes(X, y);
  const Eigen::MatrixXd z = augment(X);
  Eigen::MatrixXd gram = z.transpose() * z;
  for (Eigen::Index j = 1; j < gram.rows(); ++j) gram(j, j) += opts.ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
    fail(ErrorKind::numeric, "fit_linear: singular normal equations");
  }
  LinearModel m{llt.solve(z.transpose() * y)};
  if (!m.theta.allFinite()) fail(ErrorKind::numeric, "fit_linear: non-finite coefficients");
  return m;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LogisticOptions& opts) {
  check_shapes(X, y);
  const double positives = y.sum();
  if (positives <= 0.0 || positives >= static_cast<double>(y.size())) {
    fail(ErrorKind::numeric, "fit_logistic: both classes must be present");
  }
  const Eigen::MatrixXd z = augment(X);
  const Eigen::Index p = z.cols();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, opts.l2);
  penalty(0) = 0.0;

  auto objective = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd eta = z * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      // log(1 + e^eta) computed without overflow
      const double softplus = eta(i) > 0 ? eta(i) + std::log1p(std::exp(-eta(i))) : std::log1p(std::exp(eta(i)));
      ll += y(i) * eta(i) - softplus;
    }
    return ll - 0.5 * (penalty.array() * theta.array().square()).sum();
  };

  LogisticModel m;
  m.theta = Eigen::VectorXd::Zero(p);
  double current = objective(m.theta);
  for (m.iterations = 1; m.iterations <= opts.max_iterations; ++m.iterations) {
    const Eigen::VectorXd eta = z * m.theta;
    Eigen::VectorXd mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = sigmoid(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = z.transpose() * (y - mu) - (penalty.array() * m.theta.array()).matrix();
    Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
    hess.diagonal() += penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::numeric, "fit_logistic: singular Hessian");
    Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) fail(ErrorKind::numeric, "fit_logistic: non-finite update (divergence)");

    // Step halving keeps the penalized likelihood monotone.
    double next = objective(m.theta + step);
    for (int halvings = 0; next < current && halvings < 30; ++halvings) {
      step *= 0.5;
      next = objective(m.theta + step);
    }
    m.theta += step;
    if (!m.theta.allFinite() || !std::isfinite(next)) fail(ErrorKind::numeric, "fit_logistic: divergence");
    current = next;
    if (step.cwiseAbs().maxCoeff() < opts.tol) {
      m.converged = true;
      break;
    }
  }
  m.iterations = std::min(m.iterations, opts.max_iterations);
  return m;
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() + 1 != model.theta.size()) {
    fail(ErrorKind::parameter, fmt::format("predict: {} features for a model of width {}", X.cols(), model.theta.size() - 1));
  }
  return (X * model.theta.tail(X.cols())).array() + model.theta(0);
}

Eigen::VectorXd predict(const LogisticModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() + 1 != model.theta.size()) {
    fail(ErrorKind::parameter, fmt::format("predict: {} features for a model of width {}", X.cols(), model.theta.size() - 1));
  }
  Eigen::VectorXd eta = (X * model.theta.tail(X.cols())).array() + model.theta(0);
  return eta.unaryExpr([](double v) { return sigmoid(v); });
}

Folds kfold_split(std::size_t n, const CvConfig& cfg) {
  if (cfg.k < 2) fail(ErrorKind::parameter, "k-fold needs k >= 2");
  const auto k = static_cast<std::size_t>(cfg.k);
  if (k > n) fail(ErrorKind::parameter, fmt::format("k = {} exceeds sample count {}", k, n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(cfg.seed, 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  Folds folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos), perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[f].begin(), folds[f].end());
    pos += size;
  }
  return folds;
}

Folds stratified_split(std::span<const double> labels, const CvConfig& cfg) {
  if (cfg.k < 2) fail(ErrorKind::parameter, "k-fold needs k >= 2");
  const auto k = static_cast<std::size_t>(cfg.k);
  if (k > labels.size()) fail(ErrorKind::parameter, fmt::format("k = {} exceeds sample count {}", k, labels.size()));
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] != 0.0 ? pos : neg).push_back(i);
  Rng rng = make_rng(cfg.seed, 2);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::shuffle(pos.begin(), pos.end(), rng);
  Folds folds(k);
  std::size_t f = 0;
  for (const auto* cls : {&neg, &pos}) {
    for (auto i : *cls) {
      folds[f].push_back(i);
      f = (f + 1) % k;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

CvResult cross_validate(const Eigen::MatrixXd& scores, const TraitTable& traits, Trait trait, const CvConfig& cfg) {
  if (static_cast<std::size_t>(scores.rows()) != traits.size()) {
    fail(ErrorKind::parameter, fmt::format("{} score rows vs {} users", scores.rows(), traits.size()));
  }
  const Eigen::VectorXd y = trait_column(traits, trait);
  const auto n = static_cast<std::size_t>(y.size());
  const Folds folds = make_folds(trait, y, cfg);
  Eigen::VectorXd oof = Eigen::VectorXd::Zero(y.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train = complement(folds, f, n);
    const Eigen::VectorXd pred = fit_predict(trait, take_rows(scores, train), take(y, train), take_rows(scores, folds[f]));
    for (std::size_t i = 0; i < folds[f].size(); ++i) oof(static_cast<Eigen::Index>(folds[f][i])) = pred(static_cast<Eigen::Index>(i));
  }
  return finish(trait, folds, oof, y, cfg);
}

Eigen::MatrixXd reduce(const UserLikeMatrix& matrix, const ReductionConfig& reduction) {
  const SvdFactors f = truncated_svd(matrix, reduction.K, reduction.seed);
  if (!reduction.apply_varimax) return project_users(f);
  return rotate_factors(f, reduction.varimax).scores;
}

CvResult cross_validate_refit(const UserLikeMatrix& matrix, const TraitTable& traits, Trait trait,
                              const ReductionConfig& reduction, const CvConfig& cfg) {
  if (matrix.rows() != traits.size()) {
    fail(ErrorKind::parameter, fmt::format("{} matrix rows vs {} users", matrix.rows(), traits.size()));
  }
  const Eigen::VectorXd y = trait_column(traits, trait);
  const auto n = static_cast<std::size_t>(y.size());
  const Folds folds = make_folds(trait, y, cfg);
  const SparseRowMatrix full = matrix.to_sparse();

  auto rows_of = [&full](const std::vector<std::size_t>& idx) {
    SparseRowMatrix out(static_cast<Eigen::Index>(idx.size()), full.cols());
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (SparseRowMatrix::InnerIterator it(full, static_cast<Eigen::Index>(idx[i])); it; ++it)
        trip.emplace_back(static_cast<Eigen::Index>(i), it.col(), it.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
  };

  Eigen::VectorXd oof = Eigen::VectorXd::Zero(y.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto train = complement(folds, f, n);
    const SparseRowMatrix m_train = rows_of(train), m_test = rows_of(folds[f]);
    const SvdFactors svd = truncated_svd(m_train, reduction.K, derive_seed(reduction.seed, f));
    Eigen::MatrixXd loadings = svd.V;
    Eigen::MatrixXd x_train = project_users(svd);
    if (reduction.apply_varimax) {
      const RotatedScores rot = rotate_factors(svd, reduction.varimax);
      loadings = svd.V * rot.rotation;
      x_train = rot.scores;
    }
    const Eigen::MatrixXd x_test = m_test * loadings;
    const Eigen::VectorXd pred = fit_predict(trait, x_train, take(y, train), x_test);
    for (std::size_t i = 0; i < folds[f].size(); ++i) oof(static_cast<Eigen::Index>(folds[f][i])) = pred(static_cast<Eigen::Index>(i));
  }
  return finish(trait, folds, oof, y, cfg);
}

SweepTable k_sweep(const UserLikeMatrix& matrix, const TraitTable& traits, std::span<const Eigen::Index> k_values,
                   const ReductionConfig& reduction, const CvConfig& cfg) {
  if (matrix.rows() != traits.size()) {
    fail(ErrorKind::parameter, fmt::format("{} matrix rows vs {} users", matrix.rows(), traits.size()));
  }
  SweepTable table;
  table.k_values.assign(k_values.begin(), k_values.end());
  table.accuracy = Eigen::MatrixXd::Zero(kNumTraits, static_cast<Eigen::Index>(k_values.size()));
  for (std::size_t j = 0; j < k_values.size(); ++j) {
    ReductionConfig rc = reduction;
    rc.K = k_values[j];
    const Eigen::MatrixXd scores = reduce(matrix, rc);
    for (Trait t : kAllTraits)
      table.accuracy(index_of(t), static_cast<Eigen::Index>(j)) = cross_validate(scores, traits, t, cfg).score.value;
  }
  return table;
}

}  // namespace footprint
