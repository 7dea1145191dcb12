#pragma once

#include <stdexcept>
#include <string>

namespace sigtest {

// Failure categories. The CLI maps each category onto a process exit code.
enum class ErrorKind { kConfig, kData, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Invalid parameters or inconsistent configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

// Malformed, empty or mismatched input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

// A numerical routine failed (factorization, convergence, size blow-up).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

// Raised when a shuffle product would exceed the configured tensor level cap.
class TensorCapExceeded : public NumericalError {
 public:
  TensorCapExceeded(int required_level, int cap)
      : NumericalError("tensor level " + std::to_string(required_level) +
                       " exceeds the configured cap " + std::to_string(cap)),
        required_level_(required_level),
        cap_(cap) {}
  int required_level() const noexcept { return required_level_; }
  int cap() const noexcept { return cap_; }

 private:
  int required_level_;
  int cap_;
};

}  // namespace sigtest
