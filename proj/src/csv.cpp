#include "footprint/csv.hpp"

#include "footprint/error.hpp"

namespace footprint::csv {

namespace {

// Returns true when `record` ends inside an open quoted field.
bool parse_into(std::string_view record, std::vector<std::string>& fields) {
  fields.clear();
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    char c = record[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return quoted;
}

}  // namespace

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) fail(ErrorKind::io, "cannot open " + path.string());
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  if (!std::getline(in_, line)) return false;
  ++line_;
  record_line_ = line_;
  if (line_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  std::string record = line;
  while (true) {
    if (!record.empty() && record.back() == '\r') record.pop_back();
    if (!parse_into(record, fields)) return true;
    if (!std::getline(in_, line)) {
      fail(ErrorKind::parse, path_.string() + ":" + std::to_string(record_line_) + ": unterminated quoted field");
    }
    ++line_;
    record += '\n';
    record += line;
  }
}

std::vector<std::string> split_record(std::string_view record) {
  std::vector<std::string> fields;
  if (parse_into(record, fields)) fail(ErrorKind::parse, "unterminated quoted field");
  return fields;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace footprint::csv
