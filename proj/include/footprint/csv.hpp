#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace footprint::csv {

// Streaming reader for comma-separated files. Accepts RFC-4180 quoting,
// including quoted fields spanning several physical lines.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  // Reads the next record into `fields`; returns false at end of file.
  bool next(std::vector<std::string>& fields);

  // Physical line on which the last returned record started (1-based).
  std::size_t line() const noexcept { return record_line_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

// Splits one complete record (no embedded newlines) into fields.
std::vector<std::string> split_record(std::string_view record);

// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace footprint::csv
