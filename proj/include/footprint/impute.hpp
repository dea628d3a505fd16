#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "footprint/ingest.hpp"
#include "footprint/rng.hpp"

namespace footprint {

struct ImputeConfig {
  int m = 5;
  std::uint64_t seed = 0;
  int max_redraws = 100;  // bootstrap redraws allowed when a resample misses a class
};

// Two-class linear discriminant with a shared covariance; the posterior
// log-odds of class 1 are weights . x + bias.
struct LdaModel {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double posterior(const Eigen::VectorXd& x) const;
};

// Labels are 0/1. The shared covariance gets a ridge of 1e-8 * trace / p.
LdaModel fit_lda(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels);

// Imputed value for a posterior probability: 1 with probability `p`.
double draw_bernoulli(double p, Rng& rng);

// Multiple imputation of a binary trait from the other seven traits. Each of
// the m tables comes from an LDA fitted to a bootstrap resample of the
// complete cases; missing cells are drawn from the resulting posterior.
// Observed cells are copied unchanged.
std::vector<TraitTable> impute_binary(const TraitTable& traits, Trait target, const ImputeConfig& cfg);

// Merges completed tables: the first one, or a per-cell majority vote.
enum class CombineMode { first, majority };
TraitTable combine_imputations(const std::vector<TraitTable>& completed, CombineMode mode);

// One pooled coefficient under Rubin's rules.
struct PooledRow {
  std::string term;
  double est = 0.0;
  double se = 0.0;
  double t = 0.0;
  double df = 0.0;  // +inf when the between-imputation variance is zero
  double p_value = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  std::optional<std::size_t> nmis;
  double fmi = 0.0;
  double lambda = 0.0;
  double qbar = 0.0;
  double within = 0.0;
  double between = 0.0;
  double total = 0.0;
};

PooledRow pool_rubin(std::span<const double> estimates, std::span<const double> within_vars);

// Linear model of the target on the seven other traits plus intercept, fitted
// on each completed table and pooled per coefficient.
std::vector<PooledRow> pooled_analysis(const std::vector<TraitTable>& completed, Trait target,
                                       const TraitTable& original);

// est,se,t,df,Pr,lo95,hi95,nmis,fmi,lambda per term.
std::string pooled_csv(const std::vector<PooledRow>& rows);

}  // namespace footprint
