#pragma once

// Delimited-text helpers shared by every reader and writer in the library.
// Output is UTF-8 with LF line endings; doubles use the shortest decimal form
// that round-trips, so files written twice from the same values are identical.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pubforge/error.hpp"

namespace pubforge::table {

inline std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string();
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<double> parse_double(std::string_view text) {
  double value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

/// Splits one line, honouring double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_row(std::string_view line, char delimiter = ',') {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"' && current.empty()) {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

inline std::string quote_field(std::string_view field, char delimiter = ',') {
  bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

/// Streaming row writer. Every row ends in a single LF.
class Writer {
 public:
  explicit Writer(std::ostream& out, char delimiter = ',') : out_(out), delimiter_(delimiter) {}

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    (emit(fields, first), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) emit(f, first);
    out_ << '\n';
  }

 private:
  void sep(bool& first) {
    if (!first) out_ << delimiter_;
    first = false;
  }
  void emit(const std::string& v, bool& first) {
    sep(first);
    out_ << quote_field(v, delimiter_);
  }
  void emit(std::string_view v, bool& first) { emit(std::string(v), first); }
  void emit(const char* v, bool& first) { emit(std::string(v), first); }
  void emit(double v, bool& first) {
    sep(first);
    out_ << format_double(v);
  }
  void emit(const std::optional<double>& v, bool& first) {
    sep(first);
    out_ << format_optional(v);
  }
  template <typename Int>
    requires std::is_integral_v<Int>
  void emit(Int v, bool& first) {
    sep(first);
    out_ << v;
  }

  std::ostream& out_;
  char delimiter_;
};

/// Reads a whole delimited file: header row plus data rows. Blank lines are
/// skipped; `line` numbers are 1-based and count the header.
struct Rows {
  std::vector<std::string> header;
  struct Row {
    std::size_t line;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
};

inline bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline Rows read_rows(std::istream& in, const std::vector<std::string>& expected_header,
                      char delimiter = ',') {
  Rows out;
  std::string line;
  std::size_t lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line[0] == '#' && out.header.empty()) continue;
    auto fields = split_row(line, delimiter);
    if (out.header.empty()) {
      if (fields != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : std::string(1, delimiter)) + h;
        throw SchemaError("header mismatch: expected '" + want + "', got '" + line + "'");
      }
      out.header = std::move(fields);
      continue;
    }
    if (fields.size() != expected_header.size()) {
      throw RowError("expected " + std::to_string(expected_header.size()) + " fields, found " +
                         std::to_string(fields.size()),
                     lineno);
    }
    out.rows.push_back({lineno, std::move(fields)});
  }
  if (out.header.empty()) throw SchemaError("missing header row");
  return out;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline std::string slurp(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pubforge::table
