#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "footprint/dimred.hpp"
#include "footprint/ingest.hpp"
#include "footprint/metrics.hpp"

namespace footprint {

// theta(0) is the intercept, theta(1..K) the feature weights.
struct LinearModel {
  Eigen::VectorXd theta;
};

struct LogisticModel {
  Eigen::VectorXd theta;
  bool converged = false;
  int iterations = 0;
};

struct LinearOptions {
  double ridge = 1e-8;  // added to the Gram diagonal, intercept excluded
};

struct LogisticOptions {
  double l2 = 1e-4;  // penalty on feature weights, intercept excluded
  double tol = 1e-8;
  int max_iterations = 100;
};

double sigmoid(double x);

// Least squares on the intercept-augmented normal equations.
LinearModel fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LinearOptions& opts = {});

// Penalized maximum likelihood by iteratively reweighted least squares.
LogisticModel fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LogisticOptions& opts = {});

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& X);
Eigen::VectorXd predict(const LogisticModel& model, const Eigen::MatrixXd& X);

struct CvConfig {
  int k = 10;
  std::uint64_t seed = 0;
  bool stratify_binary = true;
  bool average_folds = false;  // mean of per-fold metrics instead of one pooled metric
};

using Folds = std::vector<std::vector<std::size_t>>;

// Seeded permutation of 0..n-1 sliced into k folds whose sizes differ by at most one.
Folds kfold_split(std::size_t n, const CvConfig& cfg);

// Each class is permuted and dealt round-robin, so every fold gets
// floor or ceil of its share of each class.
Folds stratified_split(std::span<const double> labels, const CvConfig& cfg);

struct CvResult {
  AccuracyScore score;
  Eigen::VectorXd out_of_fold;  // one held-out prediction per user
};

// Linear (continuous) or logistic (binary) model per fold on precomputed
// scores; the metric is computed on the pooled out-of-fold predictions.
CvResult cross_validate(const Eigen::MatrixXd& scores, const TraitTable& traits, Trait trait, const CvConfig& cfg);

struct ReductionConfig {
  Eigen::Index K = 50;
  bool apply_varimax = true;
  std::uint64_t seed = 0;
  VarimaxOptions varimax;
};

// Cross-validation with the SVD (and rotation) refit on each training split;
// held-out users are projected through the training loadings.
CvResult cross_validate_refit(const UserLikeMatrix& matrix, const TraitTable& traits, Trait trait,
                              const ReductionConfig& reduction, const CvConfig& cfg);

// Reduced user scores for a whole matrix (rows aligned with the matrix).
Eigen::MatrixXd reduce(const UserLikeMatrix& matrix, const ReductionConfig& reduction);

struct SweepTable {
  std::vector<Eigen::Index> k_values;
  Eigen::MatrixXd accuracy;  // trait x K
};

SweepTable k_sweep(const UserLikeMatrix& matrix, const TraitTable& traits, std::span<const Eigen::Index> k_values,
                   const ReductionConfig& reduction, const CvConfig& cfg);

}  // namespace footprint
