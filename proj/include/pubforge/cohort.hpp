#pragma once

// Cohorts by historical publication count and the productivity matrix.
//
// Cohort i at interval j holds the researchers with exactly i publications in
// [T0, t_{j-1}]; n_ij counts them, m_ij counts what they published during
// (t_{j-1}, t_j], and eta_ij = m_ij / n_ij. Intervals are single calendar years.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pubforge/corpus.hpp"
#include "pubforge/error.hpp"
#include "pubforge/table.hpp"

namespace pubforge {

/// Publications of `history` with year in [history_start, t].
inline int cumulative_count(const AuthorHistory& history, int history_start, int t) {
  return history.count_between(history_start, t);
}

struct CohortAssignment {
  enum class Kind { cohort, inactive, overflow };
  Kind kind = Kind::inactive;
  int index = 0;  // cumulative count; meaningful for every kind

  bool is_cohort() const { return kind == Kind::cohort; }
  friend bool operator==(const CohortAssignment&, const CohortAssignment&) = default;
};

inline CohortAssignment assign_cohort(const AuthorHistory& history, int history_start, int boundary,
                                      int max_cohort) {
  int count = cumulative_count(history, history_start, boundary);
  if (count == 0) return {CohortAssignment::Kind::inactive, 0};
  if (count > max_cohort) return {CohortAssignment::Kind::overflow, count};
  return {CohortAssignment::Kind::cohort, count};
}

class CohortMatrix {
 public:
  CohortMatrix() = default;
  CohortMatrix(int max_cohort, int intervals, int t0)
      : max_cohort_(max_cohort),
        intervals_(intervals),
        t0_(t0),
        n_(static_cast<std::size_t>(max_cohort * intervals), 0),
        m_(static_cast<std::size_t>(max_cohort * intervals), 0),
        overflow_(static_cast<std::size_t>(intervals), 0),
        inactive_(static_cast<std::size_t>(intervals), 0) {
    if (max_cohort < 1 || intervals < 1) throw PreconditionError("cohort matrix needs I >= 1 and L >= 1");
  }

  int max_cohort() const { return max_cohort_; }
  int intervals() const { return intervals_; }
  /// Year t_j, j = 0..L.
  int year(int j) const { return t0_ + j; }
  int t0() const { return t0_; }

  long long n(int i, int j) const { return n_[idx(i, j)]; }
  long long m(int i, int j) const { return m_[idx(i, j)]; }
  std::optional<double> eta(int i, int j) const {
    auto cnt = n(i, j);
    if (cnt == 0) return std::nullopt;
    return static_cast<double>(m(i, j)) / static_cast<double>(cnt);
  }

  /// Researchers above I at t_{j-1} (excluded from the matrix).
  long long overflow(int j) const { return overflow_[static_cast<std::size_t>(j - 1)]; }
  /// Researchers with no publication by t_{j-1}.
  long long inactive(int j) const { return inactive_[static_cast<std::size_t>(j - 1)]; }

  void add(int i, int j, long long researchers, long long publications) {
    n_[idx(i, j)] += researchers;
    m_[idx(i, j)] += publications;
  }
  void add_overflow(int j) { ++overflow_[static_cast<std::size_t>(j - 1)]; }
  void add_inactive(int j) { ++inactive_[static_cast<std::size_t>(j - 1)]; }

  /// Cellwise sum; used to merge partial matrices built in parallel.
  CohortMatrix& operator+=(const CohortMatrix& o) {
    if (o.max_cohort_ != max_cohort_ || o.intervals_ != intervals_ || o.t0_ != t0_) {
      throw PreconditionError("cannot merge cohort matrices of different shape");
    }
    for (std::size_t k = 0; k < n_.size(); ++k) {
      n_[k] += o.n_[k];
      m_[k] += o.m_[k];
    }
    for (std::size_t k = 0; k < overflow_.size(); ++k) {
      overflow_[k] += o.overflow_[k];
      inactive_[k] += o.inactive_[k];
    }
    return *this;
  }

  friend bool operator==(const CohortMatrix&, const CohortMatrix&) = default;

 private:
  std::size_t idx(int i, int j) const {
    if (i < 1 || i > max_cohort_ || j < 1 || j > intervals_) {
      throw PreconditionError("cell (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    }
    return static_cast<std::size_t>((i - 1) * intervals_ + (j - 1));
  }

  int max_cohort_ = 0;
  int intervals_ = 0;
  int t0_ = 0;
  std::vector<long long> n_, m_;
  std::vector<long long> overflow_, inactive_;
};

/// Eta matrix over the training split. Only split members are counted.
inline CohortMatrix productivity_matrix(const DatasetSplit& split, const HistorySet& histories,
                                        int max_cohort) {
  if (split.role != SplitRole::training) throw PreconditionError("productivity matrix needs a training split");
  const int t0 = split.start();
  const int intervals = split.end() - split.start();
  CohortMatrix matrix(max_cohort, intervals, t0);
  for (const auto& id : split.authors) {
    const AuthorHistory* h = find_history(histories, id);
    if (!h) continue;
    for (int j = 1; j <= intervals; ++j) {
      auto a = assign_cohort(*h, split.history_start(), t0 + j - 1, max_cohort);
      switch (a.kind) {
        case CohortAssignment::Kind::cohort:
          matrix.add(a.index, j, 1, h->count_in(t0 + j));
          break;
        case CohortAssignment::Kind::overflow:
          matrix.add_overflow(j);
          break;
        case CohortAssignment::Kind::inactive:
          matrix.add_inactive(j);
          break;
      }
    }
  }
  return matrix;
}

/// `i,j,t_j,n_ij,m_ij,eta_ij`; undefined eta is an empty field.
inline void write_matrix(std::ostream& out, const CohortMatrix& matrix) {
  table::Writer w(out);
  w.row("i", "j", "t_j", "n_ij", "m_ij", "eta_ij");
  for (int i = 1; i <= matrix.max_cohort(); ++i) {
    for (int j = 1; j <= matrix.intervals(); ++j) {
      w.row(i, j, matrix.year(j), matrix.n(i, j), matrix.m(i, j), matrix.eta(i, j));
    }
  }
}

}  // namespace pubforge
