#include "footprint/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "footprint/csv.hpp"
#include "footprint/error.hpp"
#include "footprint/io.hpp"

namespace footprint {

namespace {

constexpr std::array<std::string_view, 9> kUserColumns = {"userid", "gender", "age", "political", "ope",
                                                          "con",    "ext",    "agr", "neu"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string where(const csv::Reader& r) { return fmt::format("{}:{}", r.path().string(), r.line()); }

bool blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && io::trim(fields[0]).empty();
}

bool is_missing(std::string_view cell) {
  cell = io::trim(cell);
  return cell.empty() || cell == "NA";
}

void require_header(csv::Reader& reader, std::vector<std::string>& fields, std::size_t columns) {
  if (!reader.next(fields)) fail(ErrorKind::parse, reader.path().string() + ": missing header row");
  if (fields.size() != columns) {
    fail(ErrorKind::parse,
         fmt::format("{}: header has {} columns, expected {}", where(reader), fields.size(), columns));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// TraitTable / LikeCatalog

void TraitTable::add(UserProfile profile) {
  if (profile.user_id.empty()) fail(ErrorKind::validation, "empty user id");
  for (Trait t : kAllTraits) {
    const auto& v = profile[t];
    if (!v) continue;
    if (!std::isfinite(*v)) fail(ErrorKind::validation, fmt::format("user {}: non-finite {}", profile.user_id, name_of(t)));
    if (is_binary(t) && *v != 0.0 && *v != 1.0) {
      fail(ErrorKind::validation, fmt::format("user {}: {} must be 0 or 1, got {}", profile.user_id, name_of(t), *v));
    }
  }
  if (profile[Trait::age] && *profile[Trait::age] < 0.0) {
    fail(ErrorKind::validation, fmt::format("user {}: negative age", profile.user_id));
  }
  auto [it, inserted] = index_.emplace(profile.user_id, rows_.size());
  if (!inserted) fail(ErrorKind::validation, "duplicate user id " + profile.user_id);
  rows_.push_back(std::move(profile));
}

std::optional<std::size_t> TraitTable::find(const std::string& user_id) const {
  auto it = index_.find(user_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TraitTable::missing_count(Trait t) const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [t](const UserProfile& p) { return !p[t].has_value(); }));
}

TraitTable TraitTable::select(std::span<const std::string> user_ids) const {
  TraitTable out;
  for (const auto& id : user_ids) {
    auto i = find(id);
    if (!i) fail(ErrorKind::referential, "no trait record for user " + id);
    out.add(rows_[*i]);
  }
  return out;
}

void LikeCatalog::add(LikeRecord like) {
  if (like.like_id.empty()) fail(ErrorKind::validation, "empty like id");
  auto [it, inserted] = index_.emplace(like.like_id, likes_.size());
  if (!inserted) fail(ErrorKind::validation, "duplicate like id " + like.like_id);
  likes_.push_back(std::move(like));
}

std::optional<std::size_t> LikeCatalog::find(const std::string& like_id) const {
  auto it = index_.find(like_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// UserLikeMatrix

UserLikeMatrix UserLikeMatrix::from_entries(std::vector<std::string> row_ids, std::vector<std::string> col_ids,
                                            std::vector<Entry> entries) {
  const auto nr = static_cast<std::int64_t>(row_ids.size());
  const auto nc = static_cast<std::int64_t>(col_ids.size());
  for (const auto& [r, c] : entries) {
    if (r < 0 || r >= nr || c < 0 || c >= nc) {
      fail(ErrorKind::validation, fmt::format("entry ({}, {}) outside {}x{} matrix", r, c, nr, nc));
    }
  }
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  UserLikeMatrix m;
  m.row_ids_ = std::move(row_ids);
  m.col_ids_ = std::move(col_ids);
  m.row_ptr_.assign(m.row_ids_.size() + 1, 0);
  m.col_degree_.assign(m.col_ids_.size(), 0);
  m.col_index_.reserve(entries.size());
  for (const auto& [r, c] : entries) {
    ++m.row_ptr_[static_cast<std::size_t>(r) + 1];
    ++m.col_degree_[static_cast<std::size_t>(c)];
    m.col_index_.push_back(c);
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
  return m;
}

double UserLikeMatrix::density() const {
  if (rows() == 0 || cols() == 0) return 0.0;
  return static_cast<double>(nnz()) / (static_cast<double>(rows()) * static_cast<double>(cols()));
}

std::span<const std::int32_t> UserLikeMatrix::row(std::size_t r) const {
  return {col_index_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
}

std::vector<UserLikeMatrix::Entry> UserLikeMatrix::entries() const {
  std::vector<Entry> out;
  out.reserve(nnz());
  for (std::size_t r = 0; r < rows(); ++r)
    for (auto c : row(r)) out.emplace_back(static_cast<std::int32_t>(r), c);
  return out;
}

UserLikeMatrix UserLikeMatrix::submatrix(const std::vector<bool>& keep_rows, const std::vector<bool>& keep_cols) const {
  std::vector<std::int32_t> row_map(rows(), -1), col_map(cols(), -1);
  std::vector<std::string> new_rows, new_cols;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (keep_rows[r]) {
      row_map[r] = static_cast<std::int32_t>(new_rows.size());
      new_rows.push_back(row_ids_[r]);
    }
  }
  for (std::size_t c = 0; c < cols(); ++c) {
    if (keep_cols[c]) {
      col_map[c] = static_cast<std::int32_t>(new_cols.size());
      new_cols.push_back(col_ids_[c]);
    }
  }
  std::vector<Entry> kept;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (row_map[r] < 0) continue;
    for (auto c : row(r))
      if (col_map[static_cast<std::size_t>(c)] >= 0) kept.emplace_back(row_map[r], col_map[static_cast<std::size_t>(c)]);
  }
  return from_entries(std::move(new_rows), std::move(new_cols), std::move(kept));
}

Eigen::SparseMatrix<double, Eigen::RowMajor> UserLikeMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nnz());
  for (std::size_t r = 0; r < rows(); ++r)
    for (auto c : row(r)) triplets.emplace_back(static_cast<int>(r), c, 1.0);
  Eigen::SparseMatrix<double, Eigen::RowMajor> s(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  s.setFromTriplets(triplets.begin(), triplets.end());
  return s;
}

// ---------------------------------------------------------------------------
// CSV ingestion

TraitTable parse_users(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::string> fields;
  require_header(reader, fields, kUserColumns.size());
  for (std::size_t i = 0; i < kUserColumns.size(); ++i) {
    if (lower(io::trim(fields[i])) != kUserColumns[i]) {
      fail(ErrorKind::parse, fmt::format("{}: column {} is '{}', expected '{}'", where(reader), i + 1, fields[i],
                                         kUserColumns[i]));
    }
  }
  TraitTable table;
  while (reader.next(fields)) {
    if (blank(fields)) continue;
    if (fields.size() != kUserColumns.size()) {
      fail(ErrorKind::parse, fmt::format("{}: expected {} fields, found {}", where(reader), kUserColumns.size(),
                                         fields.size()));
    }
    UserProfile p;
    p.user_id = std::string(io::trim(fields[0]));
    for (Trait t : kAllTraits) {
      const std::string& cell = fields[static_cast<std::size_t>(index_of(t)) + 1];
      if (is_missing(cell)) continue;
      double v = 0.0;
      if (!io::parse_double(cell, v) || !std::isfinite(v)) {
        fail(ErrorKind::parse, fmt::format("{}: non-numeric {} value '{}'", where(reader), name_of(t), cell));
      }
      p[t] = v;
    }
    try {
      table.add(std::move(p));
    } catch (const Error& e) {
      fail(ErrorKind::validation, fmt::format("{}: {}", where(reader), e.what()));
    }
  }
  return table;
}

void write_users(const TraitTable& table, const std::filesystem::path& path) {
  std::string out = "userid,gender,age,political,ope,con,ext,agr,neu\n";
  for (const auto& p : table.rows()) {
    out += csv::escape(p.user_id);
    for (Trait t : kAllTraits) {
      out += ',';
      out += p[t] ? io::format_double(*p[t]) : "NA";
    }
    out += '\n';
  }
  io::atomic_write(path, out);
}

LikeCatalog parse_likes(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::string> fields;
  require_header(reader, fields, 2);
  LikeCatalog likes;
  while (reader.next(fields)) {
    if (blank(fields)) continue;
    if (fields.size() != 2) {
      fail(ErrorKind::parse, fmt::format("{}: expected 2 fields, found {}", where(reader), fields.size()));
    }
    try {
      likes.add({std::string(io::trim(fields[0])), fields[1]});
    } catch (const Error& e) {
      fail(ErrorKind::validation, fmt::format("{}: {}", where(reader), e.what()));
    }
  }
  return likes;
}

void write_likes(const LikeCatalog& likes, const std::filesystem::path& path) {
  std::string out = "likeid,name\n";
  for (std::size_t i = 0; i < likes.size(); ++i) out += csv::join({likes[i].like_id, likes[i].name}) + "\n";
  io::atomic_write(path, out);
}

std::vector<UserLikePair> parse_pairs(const std::filesystem::path& path) {
  csv::Reader reader(path);
  std::vector<std::string> fields;
  require_header(reader, fields, 2);
  std::vector<UserLikePair> pairs;
  while (reader.next(fields)) {
    if (blank(fields)) continue;
    if (fields.size() != 2) {
      fail(ErrorKind::parse, fmt::format("{}: expected 2 fields, found {}", where(reader), fields.size()));
    }
    pairs.push_back({std::string(io::trim(fields[0])), std::string(io::trim(fields[1]))});
  }
  return pairs;
}

void write_pairs(const std::vector<UserLikePair>& pairs, const std::filesystem::path& path) {
  std::string out = "userid,likeid\n";
  for (const auto& p : pairs) out += csv::join({p.user_id, p.like_id}) + "\n";
  io::atomic_write(path, out);
}

UserLikeMatrix build_matrix(const std::vector<UserLikePair>& pairs, const TraitTable& users,
                            const LikeCatalog& likes) {
  if (pairs.empty()) fail(ErrorKind::empty, "no user-like pairs: matrix would be empty");

  std::vector<std::int64_t> user_pos(users.size(), -1), like_pos(likes.size(), -1);
  std::vector<std::pair<std::size_t, std::size_t>> raw;
  raw.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto u = users.find(p.user_id);
    if (!u) fail(ErrorKind::referential, "pair references unknown user id " + p.user_id);
    auto l = likes.find(p.like_id);
    if (!l) fail(ErrorKind::referential, "pair references unknown like id " + p.like_id);
    user_pos[*u] = 0;
    like_pos[*l] = 0;
    raw.emplace_back(*u, *l);
  }

  std::vector<std::string> row_ids, col_ids;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (user_pos[i] < 0) continue;
    user_pos[i] = static_cast<std::int64_t>(row_ids.size());
    row_ids.push_back(users[i].user_id);
  }
  for (std::size_t i = 0; i < likes.size(); ++i) {
    if (like_pos[i] < 0) continue;
    like_pos[i] = static_cast<std::int64_t>(col_ids.size());
    col_ids.push_back(likes[i].like_id);
  }
  std::vector<UserLikeMatrix::Entry> entries;
  entries.reserve(raw.size());
  for (const auto& [u, l] : raw)
    entries.emplace_back(static_cast<std::int32_t>(user_pos[u]), static_cast<std::int32_t>(like_pos[l]));
  return UserLikeMatrix::from_entries(std::move(row_ids), std::move(col_ids), std::move(entries));
}

// ---------------------------------------------------------------------------
// Matrix artifact

void save_matrix(const UserLikeMatrix& m, const std::filesystem::path& path) {
  std::string out = "# footprint user-like matrix v1\n";
  auto put_ids = [&out](std::string_view label, const std::vector<std::string>& ids) {
    out += fmt::format("{} {}\n", label, ids.size());
    for (const auto& id : ids) {
      if (id.find_first_of("\r\n") != std::string::npos) fail(ErrorKind::validation, "id contains a line break");
      out += id;
      out += '\n';
    }
  };
  put_ids("rows", m.row_ids());
  put_ids("cols", m.col_ids());
  out += fmt::format("entries {}\n", m.nnz());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (auto c : m.row(r)) out += fmt::format("{} {}\n", r, c);
  io::atomic_write(path, out);
}

UserLikeMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> const std::string& {
    if (!std::getline(in, line)) fail(ErrorKind::parse, path.string() + ": truncated matrix file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next() != "# footprint user-like matrix v1") fail(ErrorKind::parse, path.string() + ": not a matrix artifact");
  auto count = [&](std::string_view label) {
    const std::string& l = next();
    std::size_t n = 0;
    if (!l.starts_with(std::string(label) + " ") ||
        std::from_chars(l.data() + label.size() + 1, l.data() + l.size(), n).ec != std::errc()) {
      fail(ErrorKind::parse, fmt::format("{}:{}: expected '{} <count>'", path.string(), lineno, label));
    }
    return n;
  };
  std::vector<std::string> rows(count("rows"));
  for (auto& id : rows) id = next();
  std::vector<std::string> cols(count("cols"));
  for (auto& id : cols) id = next();
  std::vector<UserLikeMatrix::Entry> entries(count("entries"));
  for (auto& [r, c] : entries) {
    const std::string& l = next();
    auto sp = l.find(' ');
    if (sp == std::string::npos || std::from_chars(l.data(), l.data() + sp, r).ec != std::errc() ||
        std::from_chars(l.data() + sp + 1, l.data() + l.size(), c).ec != std::errc()) {
      fail(ErrorKind::parse, fmt::format("{}:{}: malformed entry", path.string(), lineno));
    }
  }
  return UserLikeMatrix::from_entries(std::move(rows), std::move(cols), std::move(entries));
}

}  // namespace footprint
