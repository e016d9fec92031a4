#pragma once

#include <stdexcept>
#include <string>

namespace ubell {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what) {}
};

// Input violates a structural invariant of a domain type (hermiticity,
// normalization, marginal consistency, ...).
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(what) {}
};

}  // namespace ubell
