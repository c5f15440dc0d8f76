#pragma once

#include <stdexcept>
#include <string>

namespace mmcmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unrecoverable numerical failure inside a kernel or estimator.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or configuration. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace mmcmc
