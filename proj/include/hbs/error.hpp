#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hbs {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shapes or indices that do not fit together.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid compression parameters (rank, leaf size, probe count).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A random test matrix was too close to rank deficient to invert.
class IllConditionedError : public Error {
public:
  explicit IllConditionedError(const std::string& what, std::ptrdiff_t node = -1,
                               std::ptrdiff_t level = -1)
      : Error(what), node_(node), level_(level) {}

  std::ptrdiff_t node() const noexcept { return node_; }
  std::ptrdiff_t level() const noexcept { return level_; }

private:
  std::ptrdiff_t node_;
  std::ptrdiff_t level_;
};

/// Malformed or truncated factorization file.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Request would exceed a configured size cap.
class ResourceError : public Error {
public:
  using Error::Error;
};

/// A direct factorization used by an operator broke down.
class FactorizationError : public Error {
public:
  using Error::Error;
};

} // namespace hbs
