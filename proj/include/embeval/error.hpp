#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embeval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when one applies
/// (0 otherwise).
class LoadError : public Error {
 public:
  LoadError(std::string path, std::size_t line, const std::string& what);

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// A correlation was requested on a series with zero variance.
class DegenerateCorrelation : public Error {
 public:
  using Error::Error;
};

class UndefinedCosine : public Error {
 public:
  UndefinedCosine() : Error("undefined cosine: zero vector") {}
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Normalization statistics were fitted on a split other than the one the
/// caller is allowed to use.
class AuditError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace embeval
