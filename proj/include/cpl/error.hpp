#pragma once

#include <stdexcept>
#include <string>

namespace cpl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values (bad difficulty, temperature <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An action was applied that is not a legal transition from the state.
class InvalidTransition : public Error {
 public:
  using Error::Error;
};

/// Non-finite log-probabilities, losses or parameters.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss. Carries the offending position.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int epoch, int batch = -1)
      : NumericError(what), epoch_(epoch), batch_(batch) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

/// Malformed persisted data. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Remote generator could not be reached after all retries.
class UnavailableError : public Error {
 public:
  using Error::Error;
};

/// Remote generator answered with a body that violates the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A round produced no correct path in any tree.
class DegenerateRoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpl
