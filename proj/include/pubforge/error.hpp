#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pubforge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed XML input. `offset` is the byte offset where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A tabular row that could not be interpreted. Lines are 1-based.
class RowError : public Error {
 public:
  RowError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Raised for a cohort row that carries no information (no exposure or no output).
class UnfittableCohort : public Error {
 public:
  using Error::Error;
};

class CohortOutOfRange : public Error {
 public:
  CohortOutOfRange(int cohort, int max_cohort)
      : Error("cohort " + std::to_string(cohort) + " outside fitted range 1.." +
              std::to_string(max_cohort)),
        cohort_(cohort) {}
  int cohort() const noexcept { return cohort_; }

 private:
  int cohort_;
};

struct IrlsStep {
  int iteration = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double deviance = 0.0;
  double gradient_norm = 0.0;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<IrlsStep> trace)
      : Error(what), trace_(std::move(trace)) {}
  const std::vector<IrlsStep>& trace() const noexcept { return trace_; }

 private:
  std::vector<IrlsStep> trace_;
};

}  // namespace pubforge
