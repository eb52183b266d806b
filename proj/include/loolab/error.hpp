#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data or hyperparameters outside a model family's support.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a meaningful answer
/// (degenerate generalized Pareto fit, all-impossible marginals, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Line and column are 1-based; 0 means "unknown".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(format(line, column, what)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(std::size_t line, std::size_t column, const std::string& what) {
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace loolab
