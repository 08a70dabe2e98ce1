#pragma once

#include <stdexcept>
#include <string>

namespace fnnet {

// Base of every error thrown by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated (negative threshold, bad config...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced somewhere in a computation. `op` names the offender.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& op, const std::string& what)
      : Error(op + ": " + what), op_(op) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

// Geometric degeneracy: too few supporting correspondences, vanishing
// eigengap, failed cheirality, near-zero translation.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace fnnet
