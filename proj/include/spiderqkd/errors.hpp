#pragma once

#include <stdexcept>
#include <string>

namespace spiderqkd {

/// Shapes of the operands do not fit together.
class DimensionError : public std::invalid_argument {
public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// An input violates a mathematical precondition (Hermiticity, positivity, ...).
class PreconditionError : public std::invalid_argument {
public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A requested object would exceed the desk-scale size guard.
class SizeGuardError : public std::length_error {
public:
  explicit SizeGuardError(const std::string& what) : std::length_error(what) {}
};

}  // namespace spiderqkd
