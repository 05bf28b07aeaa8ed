#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdag {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value does not fit the grid (out of range, negative, overflowing).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Attribute sets, grid parameters or relation names do not line up.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Malformed input file, index or manifest.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Caller broke a precondition (e.g. child_at on a leaf).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace qdag
