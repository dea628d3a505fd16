#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "footprint/traits.hpp"

namespace footprint {

// One row of users.csv. Absent values are missing cells.
struct UserProfile {
  std::string user_id;
  std::array<std::optional<double>, kNumTraits> traits{};

  const std::optional<double>& operator[](Trait t) const { return traits[index_of(t)]; }
  std::optional<double>& operator[](Trait t) { return traits[index_of(t)]; }

  bool operator==(const UserProfile&) const = default;
};

// Per-user dependent variables keyed by user id, in file order.
class TraitTable {
 public:
  TraitTable() = default;

  // Throws validation error on duplicate/empty id or non-binary binary value.
  void add(UserProfile profile);

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const UserProfile& operator[](std::size_t i) const { return rows_[i]; }
  UserProfile& at(std::size_t i) { return rows_.at(i); }
  const std::vector<UserProfile>& rows() const noexcept { return rows_; }

  std::optional<std::size_t> find(const std::string& user_id) const;
  std::size_t missing_count(Trait t) const;
  bool complete(Trait t) const { return missing_count(t) == 0; }

  // Rows for the given ids, in that order; every id must resolve.
  TraitTable select(std::span<const std::string> user_ids) const;

  bool operator==(const TraitTable& other) const { return rows_ == other.rows_; }

 private:
  std::vector<UserProfile> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LikeRecord {
  std::string like_id;
  std::string name;
};

class LikeCatalog {
 public:
  void add(LikeRecord like);
  std::size_t size() const noexcept { return likes_.size(); }
  const LikeRecord& operator[](std::size_t i) const { return likes_[i]; }
  std::optional<std::size_t> find(const std::string& like_id) const;

 private:
  std::vector<LikeRecord> likes_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct UserLikePair {
  std::string user_id;
  std::string like_id;
};

// Binary user x like incidence matrix in compressed-row form. Column indices
// within a row are sorted and unique; row and column id lists give identity.
class UserLikeMatrix {
 public:
  using Entry = std::pair<std::int32_t, std::int32_t>;

  UserLikeMatrix() = default;

  // Duplicate entries collapse; out-of-range indices are rejected.
  static UserLikeMatrix from_entries(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                                     std::vector<Entry> entries);

  std::size_t rows() const noexcept { return row_ids_.size(); }
  std::size_t cols() const noexcept { return col_ids_.size(); }
  std::size_t nnz() const noexcept { return col_index_.size(); }
  bool empty() const noexcept { return nnz() == 0; }
  double density() const;

  const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }
  const std::vector<std::string>& col_ids() const noexcept { return col_ids_; }

  std::span<const std::int32_t> row(std::size_t r) const;
  std::size_t row_degree(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }
  std::size_t col_degree(std::size_t c) const { return col_degree_[c]; }
  const std::vector<std::size_t>& col_degrees() const noexcept { return col_degree_; }

  std::vector<Entry> entries() const;

  // Submatrix keeping the flagged rows and columns, order preserved.
  UserLikeMatrix submatrix(const std::vector<bool>& keep_rows, const std::vector<bool>& keep_cols) const;

  Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;

  bool operator==(const UserLikeMatrix&) const = default;

 private:
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::int32_t> col_index_;
  std::vector<std::size_t> col_degree_;
};

// users.csv: userid,gender,age,political,ope,con,ext,agr,neu
TraitTable parse_users(const std::filesystem::path& path);
void write_users(const TraitTable& table, const std::filesystem::path& path);

// likes.csv: id,name
LikeCatalog parse_likes(const std::filesystem::path& path);
void write_likes(const LikeCatalog& likes, const std::filesystem::path& path);

// users-likes.csv: userid,likeid. Duplicates are kept.
std::vector<UserLikePair> parse_pairs(const std::filesystem::path& path);
void write_pairs(const std::vector<UserLikePair>& pairs, const std::filesystem::path& path);

// Rows follow the order of `users`, columns the order of `likes`; ids never
// referenced by a pair are left out.
UserLikeMatrix build_matrix(const std::vector<UserLikePair>& pairs, const TraitTable& users,
                            const LikeCatalog& likes);

// Plain-text matrix artifact (see README for the layout).
void save_matrix(const UserLikeMatrix& m, const std::filesystem::path& path);
UserLikeMatrix load_matrix(const std::filesystem::path& path);

}  // namespace footprint
