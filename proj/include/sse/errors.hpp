#pragma once

#include <stdexcept>
#include <string>

namespace sse {

// Every failure surfaced by the library derives from Error so callers (the
// CLI in particular) can catch one type and still report the specific kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EmptySequenceError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NonDeterministicError : public Error {
 public:
  using Error::Error;
};

// Checkpoint load failures. Each has its own type so callers can tell a
// foreign file from a damaged or incompatible one.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class TruncatedError : public Error {
 public:
  using Error::Error;
};

class UnknownTensorError : public Error {
 public:
  using Error::Error;
};

}  // namespace sse
