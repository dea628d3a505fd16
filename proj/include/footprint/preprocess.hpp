#pragma once

#include <cstddef>
#include <string>

#include "footprint/ingest.hpp"

namespace footprint {

struct TrimConfig {
  std::size_t min_users_per_like = 150;  // u_L
  std::size_t min_likes_per_user = 50;   // L_u
};

// Which side a removal pass starts with. Both reach the same fixpoint.
enum class TrimOrder { columns_first, rows_first };

struct DegreeSummary {
  double mean = 0.0;
  double median = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

struct MatrixStats {
  std::size_t n_users = 0;
  std::size_t n_likes = 0;
  std::size_t n_pairs = 0;
  double density_percent = 0.0;
  DegreeSummary likes_per_user;
  DegreeSummary users_per_like;
};

// Largest submatrix whose column degrees are >= u_L and row degrees >= L_u,
// found by alternating removal passes until nothing changes.
UserLikeMatrix trim(const UserLikeMatrix& matrix, const TrimConfig& cfg, TrimOrder order = TrimOrder::columns_first);

MatrixStats stats(const UserLikeMatrix& matrix);

// Two-column (raw, trimmed) descriptive statistics table.
std::string stats_csv(const MatrixStats& raw, const MatrixStats& trimmed);
std::string stats_text(const MatrixStats& raw, const MatrixStats& trimmed, const TrimConfig& cfg);

}  // namespace footprint
