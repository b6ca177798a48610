#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rpeval {

// Error classes map 1:1 onto CLI exit codes so callers can tell a bad
// flag from a bad dataset from a flaky endpoint.
enum class ErrorClass {
  Usage,       // bad invocation / bad configuration
  Validation,  // invalid input data (datasets, ratings, preconditions)
  Transport,   // network / upstream failures
  Format,      // unparseable or schema-violating model output
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string message)
      : std::runtime_error(std::move(message)), cls_(cls) {}

  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

class UsageError : public Error {
 public:
  explicit UsageError(std::string message)
      : Error(ErrorClass::Usage, std::move(message)) {}
};

// Caller-supplied data violates a precondition or invariant.
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(std::string message)
      : Error(ErrorClass::Validation, std::move(message)) {}
};

// Dataset / results file failed validation on load. Carries the line.
class ValidationError : public Error {
 public:
  ValidationError(std::string message, int line)
      : Error(ErrorClass::Validation,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_ = 0;
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string message)
      : Error(ErrorClass::Format, std::move(message)) {}
};

// Model output that parsed but violates the expected schema.
class FormatError : public Error {
 public:
  explicit FormatError(std::string message)
      : Error(ErrorClass::Format, std::move(message)) {}
};

// Estimator output stayed malformed through every re-ask. Keeps the raw
// responses so failures can be audited.
class EstimatorFormatError : public Error {
 public:
  EstimatorFormatError(std::string message, std::vector<std::string> responses)
      : Error(ErrorClass::Format, std::move(message)),
        responses_(std::move(responses)) {}

  const std::vector<std::string>& raw_responses() const { return responses_; }

 private:
  std::vector<std::string> responses_;
};

class TransportError : public Error {
 public:
  explicit TransportError(std::string message)
      : Error(ErrorClass::Transport, std::move(message)) {}
};

// Scripted backend had no fixture for the request.
class MissingFixtureError : public Error {
 public:
  explicit MissingFixtureError(std::string fingerprint)
      : Error(ErrorClass::Usage,
              "no scripted fixture for request fingerprint " + fingerprint),
        fingerprint_(std::move(fingerprint)) {}

  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorClass::Usage, std::move(message)) {}
};

// Bootstrapping made no progress for T consecutive iterations.
class StagnationError : public Error {
 public:
  explicit StagnationError(std::string message)
      : Error(ErrorClass::Format, std::move(message)) {}
};

}  // namespace rpeval
