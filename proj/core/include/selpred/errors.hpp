#pragma once

#include <stdexcept>
#include <string>

namespace selpred {

/// Caller passed a value outside an operation's documented domain.
class InvalidInputError : public std::invalid_argument {
public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Instance exceeds the sizes an exact/brute-force routine is built for.
class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Constraint set is empty (or a required version space has no member).
class InfeasibleError : public std::runtime_error {
public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine failed to reach its tolerance; message carries diagnostics.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace selpred
