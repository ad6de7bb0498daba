#pragma once

#include <stdexcept>
#include <string>

namespace pignn {

// Shape or size precondition violated.
struct SizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Feature layout, config or dataset schema inconsistency.
struct SchemaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown instead of returning an approximate distance.
struct OracleInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& file, long line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pignn
