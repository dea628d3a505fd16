#include "footprint/preprocess.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "footprint/error.hpp"

namespace footprint {

namespace {

DegreeSummary summarize(std::vector<std::size_t> degrees) {
  DegreeSummary s;
  if (degrees.empty()) return s;
  std::sort(degrees.begin(), degrees.end());
  const std::size_t n = degrees.size();
  s.min = degrees.front();
  s.max = degrees.back();
  s.mean = static_cast<double>(std::accumulate(degrees.begin(), degrees.end(), std::size_t{0})) / static_cast<double>(n);
  s.median = n % 2 == 1 ? static_cast<double>(degrees[n / 2])
                        : 0.5 * static_cast<double>(degrees[n / 2 - 1] + degrees[n / 2]);
  return s;
}

}  // namespace

UserLikeMatrix trim(const UserLikeMatrix& matrix, const TrimConfig& cfg, TrimOrder order) {
  if (cfg.min_users_per_like < 1 || cfg.min_likes_per_user < 1) {
    fail(ErrorKind::parameter, "trim thresholds must be >= 1");
  }
  if (matrix.empty()) fail(ErrorKind::empty, "cannot trim an empty matrix");

  const std::size_t nr = matrix.rows(), nc = matrix.cols();
  std::vector<bool> row_alive(nr, true), col_alive(nc, true);
  std::vector<std::size_t> row_deg(nr), col_deg = matrix.col_degrees();
  for (std::size_t r = 0; r < nr; ++r) row_deg[r] = matrix.row_degree(r);

  // Column membership lists so a column removal can update row degrees.
  std::vector<std::size_t> col_ptr(nc + 1, 0);
  for (std::size_t c = 0; c < nc; ++c) col_ptr[c + 1] = col_ptr[c] + col_deg[c];
  std::vector<std::int32_t> col_rows(matrix.nnz());
  {
    std::vector<std::size_t> fill(col_ptr.begin(), col_ptr.end() - 1);
    for (std::size_t r = 0; r < nr; ++r)
      for (auto c : matrix.row(r)) col_rows[fill[static_cast<std::size_t>(c)]++] = static_cast<std::int32_t>(r);
  }

  auto column_pass = [&] {
    bool changed = false;
    for (std::size_t c = 0; c < nc; ++c) {
      if (!col_alive[c] || col_deg[c] >= cfg.min_users_per_like) continue;
      col_alive[c] = false;
      changed = true;
      for (std::size_t k = col_ptr[c]; k < col_ptr[c + 1]; ++k) {
        auto r = static_cast<std::size_t>(col_rows[k]);
        if (row_alive[r]) --row_deg[r];
      }
    }
    return changed;
  };
  auto row_pass = [&] {
    bool changed = false;
    for (std::size_t r = 0; r < nr; ++r) {
      if (!row_alive[r] || row_deg[r] >= cfg.min_likes_per_user) continue;
      row_alive[r] = false;
      changed = true;
      for (auto c : matrix.row(r))
        if (col_alive[static_cast<std::size_t>(c)]) --col_deg[static_cast<std::size_t>(c)];
    }
    return changed;
  };

  bool changed = true;
  while (changed) {
    if (order == TrimOrder::columns_first) {
      changed = column_pass();
      changed = row_pass() || changed;
    } else {
      changed = row_pass();
      changed = column_pass() || changed;
    }
  }

  UserLikeMatrix out = matrix.submatrix(row_alive, col_alive);
  if (out.empty()) {
    fail(ErrorKind::empty, fmt::format("trimmed-to-empty: no submatrix has >= {} users per like and >= {} likes per user",
                                       cfg.min_users_per_like, cfg.min_likes_per_user));
  }
  return out;
}

MatrixStats stats(const UserLikeMatrix& matrix) {
  if (matrix.empty()) fail(ErrorKind::empty, "statistics of an empty matrix");
  MatrixStats s;
  s.n_users = matrix.rows();
  s.n_likes = matrix.cols();
  s.n_pairs = matrix.nnz();
  s.density_percent = 100.0 * matrix.density();
  std::vector<std::size_t> row_deg(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) row_deg[r] = matrix.row_degree(r);
  s.likes_per_user = summarize(std::move(row_deg));
  s.users_per_like = summarize(matrix.col_degrees());
  return s;
}

std::string stats_csv(const MatrixStats& raw, const MatrixStats& trimmed) {
  std::string out = "statistic,raw,trimmed\n";
  auto row = [&out](std::string_view name, auto a, auto b) { out += fmt::format("{},{},{}\n", name, a, b); };
  row("n_users", raw.n_users, trimmed.n_users);
  row("n_likes", raw.n_likes, trimmed.n_likes);
  row("n_pairs", raw.n_pairs, trimmed.n_pairs);
  row("density_percent", fmt::format("{:.3f}", raw.density_percent), fmt::format("{:.3f}", trimmed.density_percent));
  auto block = [&row](std::string_view prefix, const DegreeSummary& a, const DegreeSummary& b) {
    row(fmt::format("{}_mean", prefix), fmt::format("{:.2f}", a.mean), fmt::format("{:.2f}", b.mean));
    row(fmt::format("{}_median", prefix), fmt::format("{:.1f}", a.median), fmt::format("{:.1f}", b.median));
    row(fmt::format("{}_min", prefix), a.min, b.min);
    row(fmt::format("{}_max", prefix), a.max, b.max);
  };
  block("likes_per_user", raw.likes_per_user, trimmed.likes_per_user);
  block("users_per_like", raw.users_per_like, trimmed.users_per_like);
  return out;
}

std::string stats_text(const MatrixStats& raw, const MatrixStats& trimmed, const TrimConfig& cfg) {
  std::string out = fmt::format("Users-likes matrix (u_L = {}, L_u = {})\n\n", cfg.min_users_per_like,
                                cfg.min_likes_per_user);
  out += fmt::format("{:<28}{:>16}{:>16}\n", "Descriptive statistics", "Raw Matrix", "Trimmed Matrix");
  auto line = [&out](std::string_view name, const std::string& a, const std::string& b) {
    out += fmt::format("{:<28}{:>16}{:>16}\n", name, a, b);
  };
  line("# of users", std::to_string(raw.n_users), std::to_string(trimmed.n_users));
  line("# of unique Likes", std::to_string(raw.n_likes), std::to_string(trimmed.n_likes));
  line("# of User-Like pairs", std::to_string(raw.n_pairs), std::to_string(trimmed.n_pairs));
  line("Matrix density", fmt::format("{:.3f}%", raw.density_percent), fmt::format("{:.3f}%", trimmed.density_percent));
  auto block = [&](std::string_view title, const DegreeSummary& a, const DegreeSummary& b) {
    out += fmt::format("{}\n", title);
    line("  Mean", fmt::format("{:.0f}", a.mean), fmt::format("{:.0f}", b.mean));
    line("  Median", fmt::format("{:g}", a.median), fmt::format("{:g}", b.median));
    line("  Minimum", std::to_string(a.min), std::to_string(b.min));
    line("  Maximum", std::to_string(a.max), std::to_string(b.max));
  };
  block("Likes per User", raw.likes_per_user, trimmed.likes_per_user);
  block("Users per Like", raw.users_per_like, trimmed.users_per_like);
  return out;
}

}  // namespace footprint
