#pragma once

// Bibliographic ingestion: authorship records, per-author annual histories
// and the training/test dataset splits built from them.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pubforge/error.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

/// One (author, publication) authorship event.
struct PublicationRecord {
  std::string author_id;
  int year = 0;
  std::string venue_id;
  std::string pub_key;

  friend bool operator==(const PublicationRecord&, const PublicationRecord&) = default;
  friend auto operator<=>(const PublicationRecord& a, const PublicationRecord& b) {
    return std::tie(a.author_id, a.year, a.venue_id, a.pub_key) <=>
           std::tie(b.author_id, b.year, b.venue_id, b.pub_key);
  }
};

struct IngestOptions {
  int year_min = 1900;
  int year_max = 2100;
};

struct ParseStats {
  std::size_t records_seen = 0;       // publication elements / data rows
  std::size_t skipped_incomplete = 0; // no year, no author or no key
  std::size_t skipped_out_of_range = 0;
  std::size_t ignored_elements = 0;   // non-publication records (e.g. homepages)

  ParseStats& operator+=(const ParseStats& o) {
    records_seen += o.records_seen;
    skipped_incomplete += o.skipped_incomplete;
    skipped_out_of_range += o.skipped_out_of_range;
    ignored_elements += o.ignored_elements;
    return *this;
  }
};

struct ParseResult {
  std::vector<PublicationRecord> records;
  ParseStats stats;
};

/// Reads `author_id,year,venue_id,pub_key` rows (header required).
inline ParseResult parse_tabular(std::istream& in, char delimiter = ',',
                                 const IngestOptions& options = {}) {
  static const std::vector<std::string> kColumns = {"author_id", "year", "venue_id", "pub_key"};
  ParseResult out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (table::next_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = table::split_row(line, delimiter);
    if (!have_header) {
      for (const auto& col : kColumns) {
        if (std::find(fields.begin(), fields.end(), col) == fields.end()) {
          throw SchemaError("missing column '" + col + "' in header");
        }
      }
      if (fields != kColumns) {
        throw SchemaError("columns must be exactly author_id,year,venue_id,pub_key in that order");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != kColumns.size()) {
      throw RowError("expected 4 fields, found " + std::to_string(fields.size()), lineno);
    }
    ++out.stats.records_seen;
    auto year = table::parse_int<int>(fields[1]);
    if (!year) throw RowError("year '" + fields[1] + "' is not a base-10 integer", lineno);
    if (*year < options.year_min || *year > options.year_max) {
      ++out.stats.skipped_out_of_range;
      continue;
    }
    out.records.push_back({std::move(fields[0]), *year, std::move(fields[2]), std::move(fields[3])});
  }
  if (!have_header) throw SchemaError("missing header row");
  return out;
}

inline void write_tabular(std::ostream& out, const std::vector<PublicationRecord>& records,
                          char delimiter = ',') {
  table::Writer w(out, delimiter);
  w.row("author_id", "year", "venue_id", "pub_key");
  for (const auto& r : records) w.row(r.author_id, r.year, r.venue_id, r.pub_key);
}

/// Drops repeated (author_id, pub_key) pairs, keeping the earliest year.
inline std::vector<PublicationRecord> deduplicate(std::vector<PublicationRecord> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.author_id, a.pub_key, a.year, a.venue_id) <
           std::tie(b.author_id, b.pub_key, b.year, b.venue_id);
  });
  records.erase(std::unique(records.begin(), records.end(),
                            [](const auto& a, const auto& b) {
                              return a.author_id == b.author_id && a.pub_key == b.pub_key;
                            }),
                records.end());
  return records;
}

/// Annual publication counts of one author.
struct AuthorHistory {
  std::string author_id;
  std::map<int, int> counts_by_year;

  int total() const {
    int n = 0;
    for (const auto& [year, c] : counts_by_year) n += c;
    return n;
  }

  int count_in(int year) const {
    auto it = counts_by_year.find(year);
    return it == counts_by_year.end() ? 0 : it->second;
  }

  /// Publications with year in [from, to].
  int count_between(int from, int to) const {
    int n = 0;
    for (auto it = counts_by_year.lower_bound(from); it != counts_by_year.end() && it->first <= to;
         ++it) {
      n += it->second;
    }
    return n;
  }

  friend bool operator==(const AuthorHistory&, const AuthorHistory&) = default;
};

/// Histories sorted by author_id, one entry per author.
using HistorySet = std::vector<AuthorHistory>;

inline HistorySet build_histories(std::vector<PublicationRecord> records) {
  records = deduplicate(std::move(records));
  HistorySet out;
  for (const auto& r : records) {
    if (out.empty() || out.back().author_id != r.author_id) {
      out.push_back({r.author_id, {}});
    }
    ++out.back().counts_by_year[r.year];
  }
  return out;
}

inline const AuthorHistory* find_history(const HistorySet& histories, std::string_view author_id) {
  auto it = std::lower_bound(histories.begin(), histories.end(), author_id,
                             [](const AuthorHistory& h, std::string_view id) { return h.author_id < id; });
  if (it == histories.end() || it->author_id != author_id) return nullptr;
  return &*it;
}

/// Canonical intermediate: `author_id,year,count` sorted by (author_id, year).
inline void write_histories(std::ostream& out, const HistorySet& histories) {
  table::Writer w(out);
  w.row("author_id", "year", "count");
  for (const auto& h : histories) {
    for (const auto& [year, count] : h.counts_by_year) w.row(h.author_id, year, count);
  }
}

inline HistorySet read_histories(std::istream& in) {
  auto rows = table::read_rows(in, {"author_id", "year", "count"});
  std::map<std::string, std::map<int, int>> by_author;
  for (auto& row : rows.rows) {
    auto year = table::parse_int<int>(row.fields[1]);
    auto count = table::parse_int<int>(row.fields[2]);
    if (!year) throw RowError("year '" + row.fields[1] + "' is not an integer", row.line);
    if (!count || *count < 0) throw RowError("count '" + row.fields[2] + "' is not a non-negative integer", row.line);
    by_author[row.fields[0]][*year] += *count;
  }
  HistorySet out;
  out.reserve(by_author.size());
  for (auto& [id, counts] : by_author) out.push_back({id, std::move(counts)});
  return out;
}

enum class SplitRole { training, test };

/// How test researchers are selected.
enum class TestMembership {
  active_at_start,  // published in year t_X
  any_in_history,   // published anywhere in [T0, t_X]
};

/// Year windows of a split. For training, `start`=t_0 and `end`=t_L; for a
/// test split, `start`=t_X and `end`=t_Y. History always begins at T0.
struct SplitWindows {
  int history_start = 0;
  int start = 0;
  int end = 0;
};

struct DatasetSplit {
  SplitRole role = SplitRole::training;
  SplitWindows windows;
  TestMembership membership = TestMembership::active_at_start;
  std::vector<std::string> authors;  // sorted

  int history_start() const { return windows.history_start; }
  int start() const { return windows.start; }
  int end() const { return windows.end; }
};

inline void validate_windows(const SplitWindows& w) {
  if (!(w.history_start < w.start && w.start < w.end)) {
    throw ConfigError("window years out of order: need T0 < start < end, got T0=" +
                      std::to_string(w.history_start) + " start=" + std::to_string(w.start) +
                      " end=" + std::to_string(w.end));
  }
}

/// Training: researchers with at least one publication in [T0, t_{L-1}].
/// Test: researchers selected by `membership` relative to t_X.
inline DatasetSplit make_split(const HistorySet& histories, SplitRole role, const SplitWindows& windows,
                               TestMembership membership = TestMembership::active_at_start) {
  validate_windows(windows);
  DatasetSplit split{role, windows, membership, {}};
  for (const auto& h : histories) {
    bool member = false;
    if (role == SplitRole::training) {
      member = h.count_between(windows.history_start, windows.end - 1) > 0;
    } else if (membership == TestMembership::active_at_start) {
      member = h.count_in(windows.start) > 0;
    } else {
      member = h.count_between(windows.history_start, windows.start) > 0;
    }
    if (member) split.authors.push_back(h.author_id);
  }
  std::sort(split.authors.begin(), split.authors.end());
  return split;
}

}  // namespace pubforge
