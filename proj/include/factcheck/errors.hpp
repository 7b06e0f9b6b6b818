#pragma once

#include <stdexcept>
#include <string>

namespace factcheck {

/// Broad failure classes. The CLI maps them onto exit codes 1/2/3.
enum class ErrorKind { usage, data, backend };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

/// Malformed input, schema violations, unparseable completions.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Anything that went wrong talking to an LLM or a remote checker.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::backend, what) {}
};

/// Transport failures and 5xx responses; the gateway retries these.
class TransientError : public BackendError {
 public:
  explicit TransientError(const std::string& what) : BackendError(what) {}
};

/// The mock backend was asked for a (template, bindings) key it has no script for.
class FixtureMissing : public BackendError {
 public:
  explicit FixtureMissing(const std::string& what) : BackendError(what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::backend: return 3;
  }
  return 2;
}

}  // namespace factcheck
