#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bigsos {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text (terms, rule DSL, machine files). Line and column are 1-based; 0 means unknown.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
      : Error(format(msg, line, column)), line(line), column(column) {}

  std::size_t line;
  std::size_t column;

 private:
  static std::string format(const std::string& msg, std::size_t line, std::size_t column) {
    if (line == 0) return msg;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
  }
};

// Well-formed text that violates a semantic constraint: unknown operation, arity mismatch,
// non-fresh premise target, negative premise in a stream specification, invalid machine, ...
struct SpecError : Error {
  using Error::Error;
};

// An operation was called outside its domain (empty prefix, exhausted tree budget, empty queue).
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace bigsos
