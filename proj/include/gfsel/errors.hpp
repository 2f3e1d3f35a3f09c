#pragma once

#include <stdexcept>
#include <string>

namespace gfsel {

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative routine produces a non-finite value.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

/// Raised by the CSV reader; row and column are 1-based file coordinates
/// (0 when not applicable).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + locate(row, column)),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string locate(std::size_t row, std::size_t column) {
    if (row == 0) return {};
    std::string at = " at row " + std::to_string(row);
    if (column != 0) at += ", column " + std::to_string(column);
    return at;
  }

  std::size_t row_;
  std::size_t column_;
};

}  // namespace gfsel
