#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpspectra {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (c <= 0, Im z <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Eigensolver failure; carries the index of the block that did not converge.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t block)
      : Error(what), block_(block) {}
  std::size_t block() const noexcept { return block_; }

 private:
  std::size_t block_;
};

/// Requested problem size exceeds the supported matrix dimension.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// EnsembleSpec violates an invariant (odd row length for balanced rows, beta >= n, ...).
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Ensemble kind not supported by the requested estimator.
class UnsupportedEnsembleError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected; names the offending key.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed structured text; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& message)
      : Error(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace mpspectra
