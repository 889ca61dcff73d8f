#pragma once

#include <stdexcept>
#include <string>

namespace lo {

/// Invalid configuration or inputs that can be detected before processing.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while processing data (degenerate geometry, coverage gaps, parse errors).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CoverageError : public RuntimeError {
 public:
  CoverageError(const std::string& what, double gap_begin, double gap_end)
      : RuntimeError(what), gap_begin_(gap_begin), gap_end_(gap_end) {}
  double gap_begin() const { return gap_begin_; }
  double gap_end() const { return gap_end_; }

 private:
  double gap_begin_;
  double gap_end_;
};

class DegenerateMatchError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class DegenerateGeometryError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// Processing failure of one scan in a sequence.
class ScanError : public RuntimeError {
 public:
  ScanError(std::size_t scan_index, const std::string& detail)
      : RuntimeError("scan " + std::to_string(scan_index) + ": " + detail), scan_index_(scan_index) {}
  std::size_t scan_index() const { return scan_index_; }

 private:
  std::size_t scan_index_;
};

class ParseError : public RuntimeError {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& field,
             const std::string& detail)
      : RuntimeError(file + ":" + std::to_string(line) + ": field '" + field + "': " + detail),
        file_(file),
        line_(line),
        field_(field) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

}  // namespace lo
