#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "footprint/ingest.hpp"

namespace footprint {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Rank-K factorization M ~ U diag(S) V^T with orthonormal U, V columns and
// non-increasing S.
struct SvdFactors {
  Eigen::Index rank = 0;
  Eigen::MatrixXd U;
  Eigen::VectorXd S;
  Eigen::MatrixXd V;
};

struct SvdOptions {
  Eigen::Index oversampling = 10;
  int power_iterations = 2;
};

// Randomized range finder followed by an exact SVD of the projected matrix.
// Deterministic for a given seed. Requires 1 <= K <= min(rows, cols).
SvdFactors truncated_svd(const SparseRowMatrix& matrix, Eigen::Index K, std::uint64_t seed, SvdOptions opts = {});
SvdFactors truncated_svd(const UserLikeMatrix& matrix, Eigen::Index K, std::uint64_t seed, SvdOptions opts = {});

struct VarimaxOptions {
  int max_sweeps = 500;
  double tol = 1e-12;
  bool kaiser_normalize = true;
};

struct VarimaxResult {
  Eigen::MatrixXd rotation;             // K x K orthogonal
  Eigen::MatrixXd loadings;             // input loadings times rotation
  std::vector<double> criterion_trace;  // initial value, then one per accepted sweep
};

// Raw varimax criterion: sum over columns of mean(l^4) - mean(l^2)^2.
double varimax_criterion(const Eigen::MatrixXd& loadings);

// Orthogonal rotation maximizing the varimax criterion by pairwise plane
// rotations. With Kaiser normalization the criterion is evaluated on
// row-normalized loadings. Columns are signed so that each column's largest
// magnitude loading is positive.
VarimaxResult varimax(const Eigen::MatrixXd& loadings, const VarimaxOptions& opts = {});

// U diag(S), optionally post-multiplied by a rotation.
Eigen::MatrixXd project_users(const SvdFactors& f, const std::optional<Eigen::MatrixXd>& rotation = std::nullopt);

struct RotatedScores {
  Eigen::MatrixXd rotation;
  Eigen::MatrixXd scores;    // users x K
  Eigen::MatrixXd loadings;  // likes x K
  std::vector<double> criterion_trace;
};

// Rotation computed on the like loadings V and applied to the user scores.
RotatedScores rotate_factors(const SvdFactors& f, const VarimaxOptions& opts = {});

struct CorrelationTable {
  Eigen::MatrixXd r;                                // K x 8
  std::vector<std::pair<Eigen::Index, Trait>> zero_variance;  // cells forced to 0
};

// Pearson (point-biserial for binary traits) correlation of every score
// column with every trait. Traits must be complete and aligned with rows.
CorrelationTable trait_correlations(const Eigen::MatrixXd& scores, const TraitTable& traits);

// Score artifact: user_id,dim1..dimK with one row per matrix row.
struct ScoreTable {
  std::vector<std::string> user_ids;
  Eigen::MatrixXd scores;
};

void save_scores(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable load_scores(const std::filesystem::path& path);

}  // namespace footprint
